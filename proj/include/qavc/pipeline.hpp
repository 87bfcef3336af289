#pragma once

// Config-driven experiment runner and the named verification suites.
// Records are deterministic for a fixed config and seed; wall-clock data
// goes to a separate timing file.

#include "qavc/scenarios.hpp"
#include "qavc/serialize.hpp"
#include "qavc/symmetry.hpp"

#include <chrono>
#include <filesystem>
#include <set>
#include <sstream>

namespace qavc {

inline constexpr const char* kVersion = "0.1.0";

/// value ≤ target + tol ("<="), |value − target| ≤ tol ("=="), value ≥ target − tol (">=").
struct Check {
  std::string name;
  double value = 0.0;
  double target = 0.0;
  double tolerance = 0.0;
  std::string relation = "<=";
  std::string unit;
  bool ok = false;
};

inline Check make_check(std::string name, double value, const std::string& relation, double target,
                        double tolerance, std::string unit) {
  bool ok = false;
  if (relation == "<=") {
    ok = value <= target + tolerance;
  } else if (relation == ">=") {
    ok = value >= target - tolerance;
  } else {
    ok = std::abs(value - target) <= tolerance;
  }
  return {std::move(name), value, target, tolerance, relation, std::move(unit), ok && std::isfinite(value)};
}

inline json check_to_json(const Check& c) {
  return json{{"name", c.name},           {"value", c.value}, {"target", c.target}, {"tolerance", c.tolerance},
              {"relation", c.relation},   {"unit", c.unit},   {"ok", c.ok}};
}

inline json checks_to_json(const std::vector<Check>& cs) {
  json out = json::array();
  for (const auto& c : cs) out.push_back(check_to_json(c));
  return out;
}

inline bool all_ok(const std::vector<Check>& cs) {
  return std::all_of(cs.begin(), cs.end(), [](const Check& c) { return c.ok; });
}

inline std::string format_check(const std::string& suite, const Check& c) {
  std::ostringstream os;
  os.precision(10);
  os << (c.ok ? "[PASS] " : "[FAIL] ") << suite << ": " << c.name << " = " << c.value << " (" << c.relation
     << " " << c.target;
  if (c.tolerance > 0) os << " +/- " << c.tolerance;
  os << ", " << c.unit << ")";
  return os.str();
}

// ---------------------------------------------------------------------------
// Verification suites

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"symmetry", "derand", "capacity", "approx"};
  return names;
}

inline std::vector<Check> verify_symmetry(std::uint64_t seed) {
  std::vector<Check> out;
  double rep = 0.0;
  const auto perms = all_permutations(3);
  for (const auto& pi : perms) {
    for (const auto& tau : perms) {
      const CMatrix lhs = perm_unitary(compose(pi, tau), 2, 3).matrix;
      const CMatrix rhs = perm_unitary(pi, 2, 3).matrix * perm_unitary(tau, 2, 3).matrix;
      rep = std::max(rep, (lhs - rhs).norm());
    }
  }
  out.push_back(make_check("permutation representation defect", rep, "<=", 0.0, 1e-12, "Frobenius norm"));

  Rng rng(derive_seed(seed, 0, 0));
  double cov = 0.0, commute = 0.0;
  for (std::size_t t = 0; t < 6; ++t) {
    const std::size_t ell = 2 + t % 2;
    const Channel ch = random_channel({2, 2}, {2}, 3, rng, 1);
    const ClassicalCode code = random_classical_code(ell, 2, 2, 2, rng);
    const DensityOperator zeta = random_density(std::size_t{1} << ell, rng);
    const auto c = verify_covariance_identity(code, ch, zeta);
    cov = std::max(cov, std::abs(c.lhs - c.rhs));
    const DensityOperator sym = symmetrize_state(zeta, ell);
    for (const auto& pi : all_permutations(ell)) {
      const CMatrix u = perm_unitary(pi, 2, ell).matrix;
      commute = std::max(commute, (u * sym.matrix() - sym.matrix() * u).norm());
    }
  }
  out.push_back(make_check("covariance identity defect", cov, "<=", 0.0, 1e-10, units::probability));
  out.push_back(make_check("symmetrized state commutator", commute, "<=", 0.0, 1e-10, "Frobenius norm"));

  const Scenario sc = make_scenario("ghz-jammer-test");
  const ClassicalCode code = soft_repetition_code(3);
  const auto comp = compound_error(code, sc.family.base);
  const auto pen = verify_definetti_penalty(code, sc.family.base, *sc.zeta, comp.value);
  out.push_back(make_check("de Finetti penalty, GHZ jammer, ell=3", pen.lhs, "<=", pen.bound, 1e-9,
                           units::probability));
  out.push_back(make_check("penalty factor ell=3 |J|=2", definetti_factor(3, 2), "==", 256.0, 0.0, units::dimensionless));
  return out;
}

inline std::vector<Check> verify_derand(std::uint64_t seed) {
  std::vector<Check> out;
  double worst = std::numeric_limits<double>::infinity();
  for (int i = 1; i < 100; ++i) {
    for (int k = 1; k < 100; ++k) {
      const double u = i / 100.0, v = k / 100.0;
      worst = std::min(worst, bin_rel_entropy(u, v) - 2.0 * (u - v) * (u - v));
    }
  }
  out.push_back(make_check("Pinsker margin min D(u||v) - 2(u-v)^2", worst, ">=", 0.0, 0.0, units::nats));
  out.push_back(make_check("D(0.15||0.1)", bin_rel_entropy(0.15, 0.1), "==", 0.0122351, 1e-6, units::nats));
  const auto ss = sample_size(0.05, 0.1, 2, 4);
  out.push_back(make_check("n_pinsker(delta=0.1,|J|=2,ell=4)", static_cast<double>(ss.n_pinsker), "==", 139, 0,
                           units::count));
  out.push_back(make_check("n_exact(eps=0.05,delta=0.1,|J|=2,ell=4)", static_cast<double>(ss.n_exact), "==", 40, 0,
                           units::count));

  const Scenario sc = make_scenario("bitflip-jammer");
  const auto sym = symmetrize_classical(soft_repetition_code(3));
  const double delta = 0.1;
  const auto res = derandomize(sym.code, sc.family.base, delta, derive_seed(seed, 1, 0));
  const double eps = res.plan.epsilon;
  out.push_back(make_check("reduced code worst-case error", worst_case_error(res.reduced, sc.family.base).value, "<=",
                           eps + delta, 1e-9, units::probability));
  out.push_back(make_check("shared bits log2 n", res.plan.shared_bits, "<=",
                           shared_bits_budget(delta, 2, 3) + 1.0, 0.0, units::bits));
  const std::size_t trials = 200;
  const double rate =
      empirical_failure_rate(sym.code, sc.family.base, delta, res.plan.n, trials, derive_seed(seed, 2, 0));
  const double tb = std::min(res.plan.tail_bound, 1.0);
  const double sigma = std::sqrt(tb * (1.0 - tb) / static_cast<double>(trials));
  out.push_back(make_check("empirical failure rate at n_exact", rate, "<=", tb + 3.0 * sigma, 0.0,
                           units::probability));
  return out;
}

inline std::vector<Check> verify_capacity(std::uint64_t seed) {
  std::vector<Check> out;
  out.push_back(make_check("Blahut-Arimoto BSC(0.1)", blahut_arimoto({{0.9, 0.1}, {0.1, 0.9}}), "==", 0.531004,
                           1e-5, units::bits));
  const Scenario bsc = make_scenario("bsc-family");
  const double oracle = classical_avc_oracle(*bsc.classical);
  out.push_back(make_check("classical oracle, BSC family {0.1, 0.2}", oracle, "==", 0.278072, 1e-4, units::bits));
  CapacityConfig cfg;
  cfg.restarts = 1;
  cfg.seed = derive_seed(seed, 0, 0);
  const auto est = estimate_c_rand(bsc.family.base, 1, cfg);
  out.push_back(make_check("C_rand estimate vs oracle, BSC family", est.value_bits_per_use, "==", oracle, 2e-3,
                           units::bits_per_use));
  const Scenario id = make_scenario("jammer-ignoring");
  const auto q = estimate_q_rand(id.family.base, 1, cfg);
  out.push_back(make_check("Q_rand estimate, identity", q.value_bits_per_use, "==", 1.0, 1e-3, units::bits_per_use));
  out.push_back(make_check("coherent information of Phi_2 through identity",
                           coherent_info(PureInput{max_entangled_vector(2), 2}, identity_channel({2})), "==", 1.0,
                           1e-9, units::bits));
  return out;
}

inline std::vector<Check> verify_approx(std::uint64_t seed) {
  std::vector<Check> out;
  const Scenario bf = make_scenario("bitflip-jammer");
  NetOptions opts;
  opts.seed = derive_seed(seed, 0, 0);
  const StateNet net = build_state_net(bf.family, 0.1, opts);
  out.push_back(make_check("bit-flip net radius, eta=0.1", net.radius, "<=", 0.1, 1e-6, units::half_diamond));
  out.push_back(make_check("bit-flip net size, eta=0.1", static_cast<double>(net.points.size()), "<=", 6, 0,
                           units::count));
  out.push_back(make_check("log10 net size vs cardinality bound", std::log10(static_cast<double>(net.points.size())),
                           "<=", net_size_bound_log10(2, 2, 0.1), 0.0, units::log10));
  const StateNet flat = build_state_net(make_scenario("jammer-ignoring").family, 0.1, opts);
  out.push_back(make_check("jammer-ignoring net size", static_cast<double>(flat.points.size()), "==", 1, 0,
                           units::count));

  const StateNet fine = build_state_net(bf.family, 0.05, opts);
  const auto gap = lifted_net_gap(fine, bf.family, deterministic(soft_repetition_code(2)), 2, 500,
                                  derive_seed(seed, 1, 0));
  out.push_back(make_check("lifted net gap, ell=2, eta=0.05", gap.sup_sampled - gap.sup_net, "<=", gap.slack, 1e-6,
                           units::probability));

  const std::size_t ell = 2;
  const auto tel = telescope_approx(decompose_classical(detail::ghz_state(ell), bf.family.base, ell),
                                    net_projection_step(fine), ell, 0.05);
  const auto dist = telescope_distance(bf.family.base, ell, detail::ghz_state(ell), tel.sigma_prime);
  out.push_back(make_check("telescoped distance, GHZ jammer, ell=2", dist.upper, "<=", tel.total_bound(), 1e-6,
                           units::half_diamond));
  Rng rng(derive_seed(seed, 2, 0));
  const auto mixed = random_classical_jammer(bf.family, ell, 3, rng);
  const auto tel2 = telescope_approx(mixed, net_projection_step(fine), ell, 0.05);
  const auto dist2 = telescope_distance(bf.family.base, ell, mixed.density(), tel2.sigma_prime);
  out.push_back(make_check("telescoped distance, random classical jammer, ell=2", dist2.upper, "<=",
                           tel2.total_bound(), 1e-6, units::half_diamond));
  return out;
}

inline std::vector<Check> verify_suite(const std::string& name, std::uint64_t seed) {
  if (name == "symmetry") return verify_symmetry(seed);
  if (name == "derand") return verify_derand(seed);
  if (name == "capacity") return verify_capacity(seed);
  if (name == "approx") return verify_approx(seed);
  throw DomainError(detail::concat("unknown suite '", name, "'"));
}

// ---------------------------------------------------------------------------
// Experiment configs

inline const std::set<std::string>& stage_names() {
  static const std::set<std::string> names{"symmetrize", "derandomize", "capacity", "net", "telescope", "verify"};
  return names;
}

struct ExperimentConfig {
  json scenario;
  std::vector<std::string> pipeline;
  json params = json::object();
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  std::filesystem::path base_dir;  // resolves relative channel files
};

inline ExperimentConfig parse_config(const json& j, const std::filesystem::path& base_dir = {}) {
  if (!j.is_object()) throw ShapeError("config must be a JSON object");
  ExperimentConfig cfg;
  cfg.base_dir = base_dir;
  if (!j.contains("seed") || !j.at("seed").is_number_integer()) throw DomainError("config: integer \"seed\" is mandatory");
  cfg.seed = j.at("seed").get<std::uint64_t>();
  if (!j.contains("scenario")) throw DomainError("config: \"scenario\" is mandatory");
  cfg.scenario = j.at("scenario");
  if (j.contains("pipeline")) {
    if (!j.at("pipeline").is_array()) throw ShapeError("config: \"pipeline\" must be an array");
    for (const auto& s : j.at("pipeline")) {
      if (!s.is_string() || stage_names().count(s.get<std::string>()) == 0) {
        throw DomainError(detail::concat("config: unknown stage ", s.dump()));
      }
      cfg.pipeline.push_back(s.get<std::string>());
    }
  }
  if (j.contains("params")) {
    if (!j.at("params").is_object()) throw ShapeError("config: \"params\" must be an object");
    cfg.params = j.at("params");
    for (const auto& [key, value] : cfg.params.items()) {
      if (std::find(cfg.pipeline.begin(), cfg.pipeline.end(), key) == cfg.pipeline.end()) {
        throw DomainError(detail::concat("config: params given for stage '", key, "' which is not in the pipeline"));
      }
      if (!value.is_object()) throw ShapeError(detail::concat("config: params for '", key, "' must be an object"));
    }
  }
  if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();
  return cfg;
}

inline Scenario resolve_scenario(const ExperimentConfig& cfg) {
  if (cfg.scenario.is_string()) return make_scenario(cfg.scenario.get<std::string>());
  if (!cfg.scenario.is_object()) throw ShapeError("config: scenario must be a name or an object");
  Scenario s;
  s.name = cfg.scenario.value("name", std::string("inline"));
  json channel_json;
  if (cfg.scenario.contains("channel_file")) {
    std::filesystem::path p = cfg.scenario.at("channel_file").get<std::string>();
    if (p.is_relative()) p = cfg.base_dir / p;
    channel_json = read_json_file(p.string());
  } else if (cfg.scenario.contains("channel")) {
    channel_json = cfg.scenario.at("channel");
  } else {
    throw ShapeError("config: inline scenario needs \"channel\" or \"channel_file\"");
  }
  s.family.base = channel_from_json(channel_json);
  if (s.family.base.jammer_factors() == 0) throw ShapeError("config: channel has no jammer input");
  if (cfg.scenario.value("classical_jammer", false)) {
    std::vector<DensityOperator> basis;
    for (std::size_t k = 0; k < s.family.base.jammer_total(); ++k) basis.push_back(basis_state(s.family.base.jammer_total(), k));
    s.family.classical_states = basis;
  }
  s.description = "channel supplied by the config";
  return s;
}

struct RunContext {
  Scenario scenario;
  std::optional<SymmetrizedCode<ClassicalCode>> symmetrized;
};

namespace detail {

template <class T>
T param(const json& p, const char* key, T fallback) {
  return p.contains(key) ? p.at(key).get<T>() : fallback;
}

inline ClassicalCode stage_code(const std::string& kind, std::size_t ell, const Channel& n, Rng& rng) {
  if (kind == "soft-repetition") return soft_repetition_code(ell);
  if (kind == "basis") return basis_code(ell);
  if (kind == "random") return random_classical_code(ell, n.user_in_total(), n.out_total(), 2, rng);
  throw DomainError(detail::concat("unknown code kind '", kind, "'"));
}

inline json run_symmetrize(const json& p, RunContext& ctx, std::uint64_t seed) {
  const Channel& n = ctx.scenario.family.base;
  const auto ell = param<std::size_t>(p, "ell", ctx.scenario.ell);
  Rng rng(seed);
  const ClassicalCode code = stage_code(param<std::string>(p, "code", "soft-repetition"), ell, n, rng);
  DensityOperator zeta;
  const auto zkind = param<std::string>(p, "zeta", ctx.scenario.zeta ? "scenario" : "random");
  if (zkind == "scenario" && ctx.scenario.zeta && ctx.scenario.zeta->dim() == dims_product(Dims(ell, n.jammer_total()))) {
    zeta = *ctx.scenario.zeta;
  } else {
    zeta = random_density(dims_product(Dims(ell, n.jammer_total())), rng);
  }
  auto sym = symmetrize_classical(code);
  const auto cov = verify_covariance_identity(code, n, zeta);
  const auto comp = compound_error(code, n);
  const auto pen = verify_definetti_penalty(code, n, zeta, comp.value);
  std::vector<Check> checks{
      make_check("covariance identity", cov.lhs, "==", cov.rhs, 1e-10, units::probability),
      make_check("de Finetti penalty", pen.lhs, "<=", pen.bound, 1e-9, units::probability)};
  json r{{"ell", quantity(ell, units::count)},
         {"permutations", quantity(sym.permutations.size(), units::count)},
         {"covariance", {{"lhs", quantity(cov.lhs, units::probability)}, {"rhs", quantity(cov.rhs, units::probability)}}},
         {"penalty",
          {{"lhs", quantity(pen.lhs, units::probability)},
           {"compound_error", quantity(comp.value, units::probability)},
           {"factor", quantity(definetti_factor(ell, n.jammer_total()), units::dimensionless)},
           {"bound", quantity(pen.bound, units::probability)}}},
         {"checks", checks_to_json(checks)}};
  ctx.symmetrized = std::move(sym);
  return r;
}

inline json run_derandomize(const json& p, RunContext& ctx, std::uint64_t seed) {
  const Channel& n = ctx.scenario.family.base;
  const auto delta = param<double>(p, "delta", 0.1);
  const auto trials = param<std::size_t>(p, "trials", 200);
  RandomCode<ClassicalCode> rc;
  if (ctx.symmetrized) {
    rc = ctx.symmetrized->code;
  } else {
    Rng rng(seed);
    rc = deterministic(stage_code(param<std::string>(p, "code", "soft-repetition"),
                                  param<std::size_t>(p, "ell", ctx.scenario.ell), n, rng));
  }
  const auto res = derandomize(rc, n, delta, derive_seed(seed, 0, 0));
  const double wc = worst_case_error(res.reduced, n).value;
  const double rate = empirical_failure_rate(rc, n, delta, res.plan.n, trials, derive_seed(seed, 1, 0));
  const double tb = std::min(res.plan.tail_bound, 1.0);
  const double sigma = std::sqrt(tb * (1.0 - tb) / static_cast<double>(trials));
  std::vector<Check> checks{
      make_check("reduced worst-case error", wc, "<=", res.plan.epsilon + delta, 1e-9, units::probability),
      make_check("shared bits", res.plan.shared_bits, "<=", shared_bits_budget(delta, res.plan.jdim, res.plan.ell) + 1.0,
                 0.0, units::bits),
      make_check("empirical failure rate", rate, "<=", tb + 3.0 * sigma, 0.0, units::probability)};
  json r = derand_to_json(res);
  r["reduced_worst_case"] = quantity(wc, units::probability);
  r["failure_rate"] = quantity(rate, units::probability);
  r["trials"] = quantity(trials, units::count);
  r["checks"] = checks_to_json(checks);
  return r;
}

inline json run_capacity(const json& p, RunContext& ctx, std::uint64_t seed) {
  const Channel& n = ctx.scenario.family.base;
  CapacityConfig cfg;
  cfg.seed = seed;
  cfg.restarts = param<std::size_t>(p, "restarts", 1);
  cfg.grid_points = param<std::size_t>(p, "grid_points", 200);
  cfg.max_iters = param<std::size_t>(p, "max_iters", cfg.max_iters);
  const auto ell = param<std::size_t>(p, "ell", 1);
  const auto kind = param<std::string>(p, "kind", "classical");
  if (kind != "classical" && kind != "quantum") throw DomainError("capacity: kind must be classical or quantum");
  const auto est = kind == "classical" ? estimate_c_rand(n, ell, cfg) : estimate_q_rand(n, ell, cfg);
  json r = capacity_to_json(est);
  r["kind"] = kind;
  std::vector<Check> checks;
  if (kind == "classical" && ell == 1 && ctx.scenario.classical) {
    const double oracle = classical_avc_oracle(*ctx.scenario.classical);
    r["oracle"] = quantity(oracle, units::bits_per_use);
    checks.push_back(make_check("estimate vs classical oracle", est.value_bits_per_use, "==", oracle, 2e-3,
                                units::bits_per_use));
  }
  r["checks"] = checks_to_json(checks);
  return r;
}

inline json run_net(const json& p, RunContext& ctx, std::uint64_t seed) {
  NetOptions opts;
  opts.seed = seed;
  opts.validation_samples = param<std::size_t>(p, "samples", opts.validation_samples);
  const auto eta = param<double>(p, "eta", 0.1);
  const StateNet net = build_state_net(ctx.scenario.family, eta, opts);
  const std::size_t a = net.channel.user_in_total(), b = net.channel.out_total();
  std::vector<Check> checks{
      make_check("covering radius", net.radius, "<=", eta, 1e-6, units::half_diamond),
      make_check("log10 size vs cardinality bound", std::log10(static_cast<double>(net.points.size())), "<=",
                 net_size_bound_log10(a, b, eta), 0.0, units::log10)};
  json r = net_to_json(net);
  r["checks"] = checks_to_json(checks);
  return r;
}

inline json run_telescope(const json& p, RunContext& ctx, std::uint64_t seed) {
  const Channel& n = ctx.scenario.family.base;
  const auto ell = param<std::size_t>(p, "ell", 2);
  const auto eta = param<double>(p, "eta", 0.1);
  NetOptions opts;
  opts.seed = seed;
  const StateNet net = build_state_net(ctx.scenario.family, eta / static_cast<double>(ell), opts);
  const std::size_t j = n.jammer_total();
  const std::size_t total = dims_product(Dims(ell, j));
  DensityOperator sigma;
  const auto state = param<std::string>(p, "state", "default");
  std::optional<ClassicalJammerState> drawn;
  if (state == "random") {
    Rng rng(derive_seed(seed, 1, 0));
    drawn = random_classical_jammer(ctx.scenario.family, ell, param<std::size_t>(p, "terms", 3), rng);
    sigma = drawn->density();
  } else if (state != "default") {
    throw DomainError(detail::concat("telescope: state must be default or random, got '", state, "'"));
  } else if (ctx.scenario.zeta && ctx.scenario.zeta->dim() == total) {
    sigma = *ctx.scenario.zeta;
  } else {
    // (1/|J|) Σ_s |s…s⟩⟨s…s|: perfectly correlated classical jammer
    CMatrix m = CMatrix::Zero(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(total));
    const std::size_t stride = (total - 1) / (j - 1);
    for (std::size_t s = 0; s < j; ++s) {
      const auto k = static_cast<Eigen::Index>(s * stride);
      m(k, k) = 1.0 / static_cast<double>(j);
    }
    sigma = DensityOperator(m);
  }
  const auto tel = telescope_approx(drawn ? *drawn : decompose_classical(sigma, n, ell), net_projection_step(net), ell,
                                    eta / static_cast<double>(ell));
  const auto dist = telescope_distance(n, ell, sigma, tel.sigma_prime);
  std::vector<Check> checks{
      make_check("telescoped distance vs step bounds", dist.upper, "<=", tel.total_bound(), 1e-6, units::half_diamond),
      make_check("total step bound vs eta", tel.total_bound(), "<=", eta, 1e-12, units::half_diamond)};
  json bounds = json::array();
  for (double b : tel.step_bounds) bounds.push_back(quantity(b, units::half_diamond));
  return json{{"ell", quantity(ell, units::count)},
              {"eta", quantity(eta, units::half_diamond)},
              {"net_size", quantity(net.points.size(), units::count)},
              {"step_bounds", bounds},
              {"distance_lower", quantity(dist.lower, units::half_diamond)},
              {"distance_upper", quantity(dist.upper, units::half_diamond)},
              {"sigma_prime", state_to_json(tel.sigma_prime)},
              {"checks", checks_to_json(checks)}};
}

inline json run_verify(const json& p, std::uint64_t seed) {
  const auto suite = param<std::string>(p, "suite", "all");
  json r = json::object();
  std::vector<std::string> names = suite == "all" ? suite_names() : std::vector<std::string>{suite};
  json all = json::array();
  for (const auto& s : names) {
    const auto cs = verify_suite(s, seed);
    for (const auto& c : cs) {
      json jc = check_to_json(c);
      jc["suite"] = s;
      all.push_back(jc);
    }
  }
  r["checks"] = all;
  return r;
}

inline void flatten_quantities(const json& j, const std::string& path, std::ostream& out) {
  if (j.is_object()) {
    if (j.contains("value") && j.contains("unit") && j.size() == 2) {
      out << path << ',' << j.at("value").dump() << ",\"" << j.at("unit").get<std::string>() << "\"\n";
      return;
    }
    for (const auto& [k, v] : j.items()) {
      if (k == "checks") continue;
      flatten_quantities(v, path.empty() ? k : path + "." + k, out);
    }
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) {
      if (j[i].is_object()) flatten_quantities(j[i], path + "[" + std::to_string(i) + "]", out);
    }
  }
}

}  // namespace detail

struct RunOutcome {
  json record;
  json timing;
  bool ok = true;  // every check passed and no stage failed
};

/// Writes record.json, timing.json, summary.csv and checks.csv into `dir`.
inline void write_run_files(const RunOutcome& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_text_file((dir / "record.json").string(), r.record.dump(2) + "\n");
  write_text_file((dir / "timing.json").string(), r.timing.dump(2) + "\n");
  std::ostringstream summary, checks;
  summary << "stage,quantity,value,unit\n";
  checks << "stage,name,value,relation,target,tolerance,unit,ok\n";
  for (const auto& st : r.record.at("stages")) {
    const std::string stage = st.at("stage").get<std::string>();
    if (st.contains("result")) {
      std::ostringstream rows;
      detail::flatten_quantities(st.at("result"), "", rows);
      std::istringstream lines(rows.str());
      for (std::string line; std::getline(lines, line);) summary << stage << ',' << line << '\n';
      if (st.at("result").contains("checks")) {
        for (const auto& c : st.at("result").at("checks")) {
          checks << stage << ",\"" << c.at("name").get<std::string>() << "\"," << c.at("value").dump() << ','
                 << c.at("relation").get<std::string>() << ',' << c.at("target").dump() << ','
                 << c.at("tolerance").dump() << ",\"" << c.at("unit").get<std::string>() << "\","
                 << (c.at("ok").get<bool>() ? "true" : "false") << '\n';
        }
      }
    }
  }
  write_text_file((dir / "summary.csv").string(), summary.str());
  write_text_file((dir / "checks.csv").string(), checks.str());
}

/// Runs the pipeline stage by stage. A stage error is recorded with a
/// failure marker, the partial record is written, and the error rethrown.
inline RunOutcome run(const ExperimentConfig& cfg, const std::optional<std::filesystem::path>& out_dir = std::nullopt) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  RunOutcome out;
  json config{{"scenario", cfg.scenario}, {"pipeline", cfg.pipeline}, {"params", cfg.params}, {"seed", cfg.seed}};
  out.record = json{{"library", {{"name", "qavc"}, {"version", kVersion}}},
                    {"config", config},
                    {"conventions",
                     {{"entropy", "bits (log base 2)"},
                      {"tail_bound", "nats (log base e)"},
                      {"shared_randomness", "bits"},
                      {"distance", "half diamond norm"},
                      {"seed_derivation", "splitmix64(splitmix64(splitmix64(root) ^ stage) ^ trial)"}}},
                    {"stages", json::array()}};
  out.timing = json{{"stages", json::array()}};
  const std::filesystem::path dir = out_dir.value_or(std::filesystem::path(cfg.out_dir));

  auto finish = [&](const char* status) {
    out.record["status"] = status;
    out.timing["total_seconds"] = std::chrono::duration<double>(clock::now() - t0).count();
    write_run_files(out, dir);
  };

  RunContext ctx;
  std::size_t index = 0;
  try {
    ctx.scenario = resolve_scenario(cfg);
  } catch (const Error& e) {
    out.ok = false;
    out.record["failure"] = {{"stage", "scenario"}, {"message", e.what()}};
    finish("failed");
    throw;
  }
  out.record["scenario"] = {{"name", ctx.scenario.name}, {"description", ctx.scenario.description}};
  for (const auto& stage : cfg.pipeline) {
    const json p = cfg.params.contains(stage) ? cfg.params.at(stage) : json::object();
    const std::uint64_t seed = derive_seed(cfg.seed, index, 0);
    const auto ts = clock::now();
    json entry{{"stage", stage}, {"index", index}, {"seed", seed}};
    try {
      json result;
      if (stage == "symmetrize") {
        result = detail::run_symmetrize(p, ctx, seed);
      } else if (stage == "derandomize") {
        result = detail::run_derandomize(p, ctx, seed);
      } else if (stage == "capacity") {
        result = detail::run_capacity(p, ctx, seed);
      } else if (stage == "net") {
        result = detail::run_net(p, ctx, seed);
      } else if (stage == "telescope") {
        result = detail::run_telescope(p, ctx, seed);
      } else {
        result = detail::run_verify(p, seed);
      }
      bool stage_ok = true;
      for (const auto& c : result.at("checks")) stage_ok = stage_ok && c.at("ok").get<bool>();
      entry["status"] = stage_ok ? "ok" : "violated";
      entry["result"] = std::move(result);
      out.ok = out.ok && stage_ok;
    } catch (const Error& e) {
      entry["status"] = "failed";
      entry["error"] = e.what();
      out.record["stages"].push_back(entry);
      out.record["failure"] = {{"stage", stage}, {"index", index}, {"message", e.what()}};
      out.ok = false;
      out.timing["stages"].push_back(
          {{"stage", stage}, {"seconds", std::chrono::duration<double>(clock::now() - ts).count()}});
      finish("failed");
      throw;
    }
    out.record["stages"].push_back(std::move(entry));
    out.timing["stages"].push_back(
        {{"stage", stage}, {"seconds", std::chrono::duration<double>(clock::now() - ts).count()}});
    ++index;
  }
  finish(out.ok ? "ok" : "violated");
  return out;
}

}  // namespace qavc
