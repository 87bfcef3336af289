#include "catch2/catch_amalgamated.hpp"
#include "qavc/pipeline.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace qavc;
using Catch::Approx;
using Catch::Matchers::ContainsSubstring;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("qavc_test_cli_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string("\"") + QAVC_CLI_PATH + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string config(const std::string& name) { return (fs::path(QAVC_CONFIG_DIR) / name).string(); }

/// Every object carrying a numeric "value" must carry a "unit" beside it.
void expect_units(const json& j) {
  if (j.is_object()) {
    if (j.contains("value") && j.at("value").is_number() && !j.contains("name")) CHECK(j.contains("unit"));
    for (const auto& [k, v] : j.items()) expect_units(v);
  } else if (j.is_array()) {
    for (const auto& v : j) expect_units(v);
  }
}

}  // namespace

TEST_CASE("built-in scenarios are listed in sorted order") {
  const auto names = list_scenarios();
  CHECK(std::is_sorted(names.begin(), names.end()));
  for (const char* required : {"bitflip-jammer", "depolarizing", "jammer-ignoring", "ghz-jammer-test"}) {
    CHECK(std::find(names.begin(), names.end(), required) != names.end());
  }
  for (const auto& n : names) CHECK(make_scenario(n).name == n);
  CHECK_THROWS_AS(make_scenario("nope"), DomainError);
}

TEST_CASE("config parsing rejects malformed configs") {
  CHECK_THROWS_AS(parse_config(json::array()), ShapeError);
  CHECK_THROWS_AS(parse_config(json{{"scenario", "bitflip-jammer"}}), DomainError);
  CHECK_THROWS_AS(parse_config(json{{"scenario", "bitflip-jammer"}, {"seed", 1}, {"pipeline", {"bogus"}}}),
                  DomainError);
  CHECK_THROWS_AS(parse_config(json{{"scenario", "bitflip-jammer"},
                                    {"seed", 1},
                                    {"pipeline", {"net"}},
                                    {"params", {{"capacity", json::object()}}}}),
                  DomainError);
  CHECK_THROWS_AS(parse_config(json{{"seed", 1}}), DomainError);
  const auto ok = parse_config(json{{"scenario", "bitflip-jammer"}, {"seed", 9}});
  CHECK(ok.seed == 9);
  CHECK(ok.pipeline.empty());
}

TEST_CASE("an empty pipeline records the config and nothing else") {
  const auto dir = scratch("empty");
  const auto cfg = parse_config(json{{"scenario", "depolarizing"}, {"seed", 5}});
  const auto out = run(cfg, dir);
  CHECK(out.ok);
  CHECK(out.record.at("stages").empty());
  CHECK(out.record.at("status") == "ok");
  CHECK(out.record.at("config").at("seed") == 5);
  CHECK(fs::exists(dir / "record.json"));
  CHECK(fs::exists(dir / "timing.json"));
  CHECK(fs::exists(dir / "summary.csv"));
  CHECK(fs::exists(dir / "checks.csv"));
}

TEST_CASE("bit-flip symmetrize and derandomize pipeline passes its checks") {
  const auto dir = scratch("bitflip");
  const auto cfg = parse_config(read_json_file(config("bitflip_derand.json")), QAVC_CONFIG_DIR);
  const auto out = run(cfg, dir);
  CHECK(out.ok);
  const auto& stages = out.record.at("stages");
  REQUIRE(stages.size() == 2);
  for (const auto& st : stages) CHECK(st.at("status") == "ok");
  const auto& plan = stages.at(1).at("result");
  CHECK(plan.at("plan").at("epsilon").at("value").get<double>() == Approx(0.75).margin(1e-9));
  expect_units(out.record);
  CHECK(out.record.at("conventions").at("distance") == "half diamond norm");
}

TEST_CASE("stage seeds follow the documented derivation") {
  const auto dir = scratch("seeds");
  const auto cfg = parse_config(read_json_file(config("bitflip_derand.json")), QAVC_CONFIG_DIR);
  const auto out = run(cfg, dir);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(out.record.at("stages").at(i).at("seed").get<std::uint64_t>() == derive_seed(42, i, 0));
  }
}

TEST_CASE("identical configs produce byte-identical records") {
  const auto a = scratch("det_a"), b = scratch("det_b");
  const auto cfg = parse_config(read_json_file(config("nets.json")), QAVC_CONFIG_DIR);
  run(cfg, a);
  run(cfg, b);
  CHECK(slurp(a / "record.json") == slurp(b / "record.json"));
  CHECK(slurp(a / "summary.csv") == slurp(b / "summary.csv"));
}

TEST_CASE("a non trace preserving channel file is rejected with its residual") {
  const auto dir = scratch("bad");
  const auto cfg = parse_config(read_json_file(config("bad_channel.json")), QAVC_CONFIG_DIR);
  REQUIRE_THROWS_AS(run(cfg, dir), DomainError);
  const json rec = json::parse(slurp(dir / "record.json"));
  CHECK(rec.at("status") == "failed");
  CHECK_THAT(rec.at("failure").at("message").get<std::string>(), ContainsSubstring("residual"));
}

TEST_CASE("channels round-trip through JSON") {
  Rng rng(71);
  const Channel n = random_channel({2, 3}, {2}, 3, rng, 1);
  const Channel back = channel_from_json(json::parse(channel_to_json(n).dump()));
  CHECK(back.jammer_factors() == 1);
  CHECK((choi_matrix(back) - choi_matrix(n)).norm() < 1e-12);
  const Channel file = channel_from_json(read_json_file(config("channels/bitflip.json")));
  CHECK((choi_matrix(file) - choi_matrix(make_scenario("bitflip-jammer").family.base)).norm() < 1e-14);
  CHECK_THROWS_AS(channel_from_json(json{{"in_dims", {2}}}), ShapeError);
  CHECK_THROWS_AS(read_json_file(config("does_not_exist.json")), DomainError);
}

TEST_CASE("command line exit codes") {
  const auto log = scratch("log.txt");
  CHECK(cli("scenarios", log) == 0);
  CHECK_THAT(slurp(log), ContainsSubstring("bitflip-jammer"));
  CHECK(cli("verify --suite symmetry", log) == 0);
  CHECK(cli("verify --suite nonsense", log) != 0);
  CHECK(cli("run --config \"" + config("bad_channel.json") + "\" --out \"" + scratch("bad_cli").string() + "\"", log) == 2);
  CHECK_THAT(slurp(log), ContainsSubstring("residual"));
  CHECK(cli("run --config \"" + config("bitflip_derand.json") + "\" --out \"" + scratch("ok_cli").string() + "\"", log) ==
        0);
  CHECK(cli("run --config \"" + config("missing.json") + "\"", log) == 2);
}

TEST_CASE("custom channel files load relative to the config") {
  const auto dir = scratch("custom");
  const auto cfg = parse_config(read_json_file(config("custom_channel.json")), QAVC_CONFIG_DIR);
  const auto out = run(cfg, dir);
  CHECK(out.ok);
  CHECK(out.record.at("scenario").at("name") == "file-bitflip");
}
