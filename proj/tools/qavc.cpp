#include "qavc/qavc.hpp"

#include <CLI11.hpp>
#include <iostream>

namespace {

enum Exit : int { kOk = 0, kValidation = 2, kVerification = 3, kResource = 4 };

int exit_code_for(const qavc::Error& e) {
  if (dynamic_cast<const qavc::SizeError*>(&e) != nullptr) return kResource;
  if (dynamic_cast<const qavc::VerificationError*>(&e) != nullptr) return kVerification;
  return kValidation;
}

int cmd_run(const std::string& config_path, const std::optional<std::uint64_t>& seed,
            const std::optional<std::string>& out) {
  namespace fs = std::filesystem;
  auto cfg = qavc::parse_config(qavc::read_json_file(config_path), fs::path(config_path).parent_path());
  if (seed) cfg.seed = *seed;
  const fs::path dir = out ? fs::path(*out) : fs::path(cfg.out_dir);
  const auto outcome = qavc::run(cfg, dir);
  for (const auto& st : outcome.record.at("stages")) {
    std::cout << st.at("stage").get<std::string>() << ": " << st.at("status").get<std::string>() << "\n";
    if (!st.contains("result")) continue;
    for (const auto& c : st.at("result").at("checks")) {
      std::cout << "  " << (c.at("ok").get<bool>() ? "[PASS] " : "[FAIL] ") << c.at("name").get<std::string>()
                << " = " << c.at("value").dump() << "\n";
    }
  }
  std::cout << "record written to " << (dir / "record.json").string() << "\n";
  return outcome.ok ? kOk : kVerification;
}

int cmd_verify(const std::string& suite, std::uint64_t seed, const std::optional<std::string>& out) {
  qavc::ExperimentConfig cfg;
  cfg.scenario = "jammer-ignoring";
  cfg.pipeline = {"verify"};
  cfg.params = {{"verify", {{"suite", suite}}}};
  cfg.seed = seed;
  if (out) {
    const auto outcome = qavc::run(cfg, std::filesystem::path(*out));
    for (const auto& c : outcome.record.at("stages").at(0).at("result").at("checks")) {
      qavc::Check k{c.at("name"), c.at("value"), c.at("target"), c.at("tolerance"), c.at("relation"), c.at("unit"),
                    c.at("ok")};
      std::cout << qavc::format_check(c.at("suite").get<std::string>(), k) << "\n";
    }
    return outcome.ok ? kOk : kVerification;
  }
  bool ok = true;
  const std::vector<std::string> names = suite == "all" ? qavc::suite_names() : std::vector<std::string>{suite};
  for (const auto& s : names) {
    for (const auto& c : qavc::verify_suite(s, seed)) {
      std::cout << qavc::format_check(s, c) << "\n";
      ok = ok && c.ok;
    }
  }
  return ok ? kOk : kVerification;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qavc: numerical laboratory for quantum arbitrarily varying channels"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run an experiment config");
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  run->add_option("--config", config, "experiment config (JSON)")->required();
  run->add_option("--seed", seed, "override the config seed");
  run->add_option("--out", out, "output directory");

  app.add_subcommand("scenarios", "list built-in scenarios");

  auto* verify = app.add_subcommand("verify", "run a verification suite");
  std::string suite = "all";
  std::uint64_t verify_seed = 42;
  std::optional<std::string> verify_out;
  verify->add_option("--suite", suite, "suite name")
      ->check(CLI::IsMember({"symmetry", "derand", "capacity", "approx", "all"}));
  verify->add_option("--seed", verify_seed, "root seed");
  verify->add_option("--out", verify_out, "write a run record to this directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(run)) return cmd_run(config, seed, out);
    if (app.got_subcommand(verify)) return cmd_verify(suite, verify_seed, verify_out);
    for (const auto& name : qavc::list_scenarios()) std::cout << name << "\n";
    return kOk;
  } catch (const qavc::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  }
}
