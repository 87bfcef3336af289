#include "catch2/catch_amalgamated.hpp"
#include "qavc/qavc.hpp"

#include <cmath>

using namespace qavc;
using Catch::Approx;

namespace {

double h2(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

std::vector<std::vector<double>> bsc(double p) { return {{1.0 - p, p}, {p, 1.0 - p}}; }

Ensemble random_ensemble(std::size_t d, std::size_t k, Rng& rng) {
  Ensemble e;
  std::exponential_distribution<double> ex(1.0);
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    e.probs.push_back(ex(rng));
    total += e.probs.back();
    e.states.push_back(random_density(d, rng));
  }
  for (double& p : e.probs) p /= total;
  return e;
}

}  // namespace

TEST_CASE("Holevo information is non-negative and vanishes for a constant channel") {
  Rng rng(51);
  for (int t = 0; t < 20; ++t) {
    const Channel ch = random_channel({2}, {3}, 2, rng);
    CHECK(holevo_info(random_ensemble(2, 3, rng), ch) >= -1e-12);
  }
  CHECK(holevo_info(random_ensemble(2, 3, rng), fully_depolarizing({2}, {2})) == Approx(0.0).margin(1e-12));
  Ensemble basis{{0.5, 0.5}, {basis_state(2, 0), basis_state(2, 1)}};
  CHECK(holevo_info(basis, identity_channel({2})) == Approx(1.0).margin(1e-12));
  CHECK_THROWS_AS(holevo_info(basis, identity_channel({3})), ShapeError);
}

TEST_CASE("coherent information of the identity is log of the dimension") {
  CHECK(coherent_info(PureInput{max_entangled_vector(2), 2}, identity_channel({2})) == Approx(1.0).margin(1e-12));
  CHECK(coherent_info(PureInput{max_entangled_vector(2), 2}, fully_depolarizing({2}, {2})) ==
        Approx(-1.0).margin(1e-12));
}

TEST_CASE("product inputs on product channels add up") {
  Rng rng(52);
  for (int t = 0; t < 5; ++t) {
    const Channel ch = random_channel({2}, {2}, 2, rng);
    const Channel ch2 = tensor_power(ch, 2);
    const Ensemble e = random_ensemble(2, 2, rng);
    CHECK(holevo_info(tensor_power(e, 2), ch2) == Approx(2.0 * holevo_info(e, ch)).margin(1e-10));
    const PureInput phi{random_unit_vector(4, rng), 2};
    CHECK(coherent_info(tensor_power(phi, 2), ch2) == Approx(2.0 * coherent_info(phi, ch)).margin(1e-10));
  }
}

TEST_CASE("Blahut-Arimoto reproduces closed-form capacities") {
  CHECK(blahut_arimoto({{1, 0}, {0, 1}}) == Approx(1.0).margin(1e-9));
  for (double p : {0.05, 0.1, 0.2, 0.35}) CHECK(blahut_arimoto(bsc(p)) == Approx(1.0 - h2(p)).margin(1e-9));
  for (double e : {0.1, 0.4}) CHECK(blahut_arimoto({{1 - e, e, 0}, {0, e, 1 - e}}) == Approx(1.0 - e).margin(1e-9));
  CHECK(blahut_arimoto(bsc(0.5)) == Approx(0.0).margin(1e-12));
}

TEST_CASE("classical AVC oracle picks the worst mixture") {
  CHECK(classical_avc_oracle({bsc(0.1), bsc(0.2)}) == Approx(1.0 - h2(0.2)).margin(1e-9));
  CHECK(classical_avc_oracle({bsc(0.0), bsc(1.0)}) == Approx(0.0).margin(1e-9));
  CHECK(classical_avc_oracle({bsc(0.0)}) == Approx(1.0).margin(1e-9));
}

TEST_CASE("classical estimate matches the oracle on an embedded binary AVC") {
  const auto sc = make_scenario("bsc-family");
  const auto est = estimate_c_rand(sc.family.base, 1);
  const double oracle = classical_avc_oracle(*sc.classical);
  CHECK(est.value_bits_per_use == Approx(oracle).margin(1e-3));
  CHECK(est.value_bits_per_use == Approx(1.0 - h2(0.2)).margin(1e-3));
  CHECK_FALSE(est.trace.empty());
}

TEST_CASE("bit-flip jammer: basis inputs see the induced AVC, the X basis escapes it") {
  const Channel n = bitflip_jammer_channel();
  const double oracle = classical_avc_oracle({bsc(0.0), bsc(1.0)});
  CHECK(oracle == Approx(0.0).margin(1e-9));
  Ensemble basis{{0.5, 0.5}, {basis_state(2, 0), basis_state(2, 1)}};
  double basis_inf = std::numeric_limits<double>::infinity();
  for (const auto& s : state_grid(2, 200)) basis_inf = std::min(basis_inf, holevo_info(basis, fix_jammer(n, s)));
  CHECK(basis_inf == Approx(oracle).margin(1e-3));
  // |+> and |-> are fixed by X, so every jammer state leaves them distinguishable
  const auto est = estimate_c_rand(n, 1);
  CHECK(est.value_bits_per_use == Approx(1.0).margin(1e-3));
}

TEST_CASE("fully depolarizing channel has non-positive coherent information") {
  const auto est = estimate_q_rand(fully_depolarizing({2, 2}, {2}, 1), 1);
  CHECK(est.raw_bits_per_use <= 1e-9);
  CHECK(est.value_bits_per_use == 0.0);
}

TEST_CASE("jammer-ignoring identity channel transmits one qubit") {
  const auto est = estimate_q_rand(ignore_jammer(identity_channel({2}), 2), 1);
  CHECK(est.value_bits_per_use == Approx(1.0).margin(1e-6));
}

TEST_CASE("reported estimates survive a ten times finer jammer grid") {
  const auto sc = make_scenario("bsc-family");
  const auto est = estimate_c_rand(sc.family.base, 1);
  double fine = std::numeric_limits<double>::infinity();
  for (const auto& s : state_grid(2, 2000)) fine = std::min(fine, estimate_objective(est, sc.family.base, s));
  CHECK(est.value_bits_per_use - fine <= 1e-3);
}

TEST_CASE("two-use estimate does not fall below the single-use one") {
  const auto sc = make_scenario("bsc-family");
  const auto one = estimate_c_rand(sc.family.base, 1);
  CapacityConfig cfg;
  cfg.restarts = 1;
  cfg.warm_ensemble = tensor_power(std::get<Ensemble>(one.argmax), 2);
  const auto two = estimate_c_rand(sc.family.base, 2, cfg);
  CHECK(two.value_bits_per_use >= one.value_bits_per_use - 1e-6);
}

TEST_CASE("dephasing jammer: two-use coherent information does not fall below one use") {
  const Channel n = dephasing_jammer_channel();
  const auto one = estimate_q_rand(n, 1);
  CapacityConfig cfg;
  cfg.restarts = 1;
  cfg.warm_input = tensor_power(std::get<PureInput>(one.argmax), 2);
  const auto two = estimate_q_rand(n, 2, cfg);
  CHECK(two.raw_bits_per_use >= one.raw_bits_per_use - 1e-6);
}

TEST_CASE("estimators reject malformed requests") {
  CHECK_THROWS_AS(estimate_c_rand(identity_channel({2}), 1), ShapeError);
  CHECK_THROWS_AS(estimate_q_rand(bitflip_jammer_channel(), 0), DomainError);
  Ensemble bad{{0.7, 0.7}, {basis_state(2, 0), basis_state(2, 1)}};
  CHECK_THROWS_AS(bad.validate(), DomainError);
  CHECK_THROWS_AS((PureInput{CVector::Ones(3), 2}.validate()), ShapeError);
}
