#include "catch2/catch_amalgamated.hpp"
#include "qavc/qavc.hpp"

using namespace qavc;
using Catch::Approx;

namespace {

/// Index of |α_1 … α_ℓ⟩ after moving the system at position j to π(j).
std::size_t permuted_index(std::size_t idx, const Permutation& pi, std::size_t d) {
  const std::size_t ell = pi.size();
  std::vector<std::size_t> digits(ell), out(ell);
  for (std::size_t f = ell; f-- > 0;) {
    digits[f] = idx % d;
    idx /= d;
  }
  for (std::size_t j = 0; j < ell; ++j) out[pi[j]] = digits[j];
  std::size_t r = 0;
  for (auto v : out) r = r * d + v;
  return r;
}

}  // namespace

TEST_CASE("permutation unitaries move basis vectors as specified") {
  for (const auto& pi : all_permutations(3)) {
    const CMatrix u = perm_unitary(pi, 2, 3).matrix;
    for (std::size_t i = 0; i < 8; ++i) {
      const auto target = static_cast<Eigen::Index>(permuted_index(i, pi, 2));
      CHECK(std::abs(u(target, static_cast<Eigen::Index>(i)) - cplx(1.0)) < 1e-14);
    }
  }
}

TEST_CASE("permutation unitaries form a representation") {
  const auto perms = all_permutations(3);
  REQUIRE(perms.size() == 6);
  for (const auto& p : perms) {
    for (const auto& q : perms) {
      const CMatrix lhs = perm_unitary(p, 3, 3).matrix * perm_unitary(q, 3, 3).matrix;
      const CMatrix rhs = perm_unitary(compose(p, q), 3, 3).matrix;
      CHECK((lhs - rhs).norm() < 1e-12);
    }
  }
  CHECK_THROWS_AS(perm_unitary({0, 0, 1}, 2, 3), DomainError);
}

TEST_CASE("symmetrization enumerates small groups and samples large ones on request") {
  const ClassicalCode c = soft_repetition_code(3);
  const auto sym = symmetrize_classical(c);
  CHECK(sym.code.variants.size() == 6);
  CHECK_FALSE(sym.sampled);
  for (double w : sym.code.weights) CHECK(w == Approx(1.0 / 6.0));

  const ClassicalCode big = basis_code(7);
  CHECK_THROWS_AS(symmetrize_classical(big), SizeError);
  SymmetrizeOptions opts;
  opts.sampling = true;
  opts.samples = 12;
  opts.seed = 5;
  const auto sampled = symmetrize_classical(big, opts);
  CHECK(sampled.sampled);
  CHECK(sampled.code.variants.size() == 12);
}

TEST_CASE("symmetrized jammer states commute with every permutation") {
  Rng rng(41);
  for (int t = 0; t < 5; ++t) {
    const auto z = symmetrize_state(random_density(8, rng), 3);
    for (const auto& pi : all_permutations(3)) {
      const CMatrix u = perm_unitary(pi, 2, 3).matrix;
      CHECK((u * z.matrix() - z.matrix() * u).norm() < 1e-12);
    }
  }
}

TEST_CASE("covariance identity on random classical codes") {
  Rng rng(42);
  for (int t = 0; t < 20; ++t) {
    const std::size_t ell = 2 + t % 2;
    const Channel n = random_channel({2, 2}, {2}, 2, rng, 1);
    const ClassicalCode c = random_classical_code(ell, 2, 2, 2, rng);
    const auto z = random_density(std::size_t{1} << ell, rng);
    const auto chk = verify_covariance_identity(c, n, z);
    CHECK(chk.lhs == Approx(chk.rhs).margin(1e-10));
  }
}

TEST_CASE("covariance identity on random quantum codes") {
  Rng rng(43);
  for (int t = 0; t < 4; ++t) {
    const Channel n = random_channel({2, 2}, {2}, 2, rng, 1);
    const QuantumCode q = random_quantum_code(2, 2, 2, 2, rng);
    const auto chk = verify_covariance_identity(q, n, random_density(4, rng));
    CHECK(chk.lhs == Approx(chk.rhs).margin(1e-10));
  }
}

TEST_CASE("a jammer-ignoring channel makes both sides equal to the plain error") {
  Rng rng(44);
  const Channel n = ignore_jammer(random_channel({2}, {2}, 2, rng), 2);
  const ClassicalCode c = random_classical_code(2, 2, 2, 3, rng);
  const auto z = random_density(4, rng);
  const auto chk = verify_covariance_identity(c, n, z);
  CHECK(chk.lhs == Approx(p_err(c, n, z)).margin(1e-12));
  CHECK(chk.rhs == Approx(p_err(c, n, z)).margin(1e-12));
}

TEST_CASE("permutation-invariant jammer state: symmetrization changes nothing") {
  const Channel n = bitflip_jammer_channel();
  const ClassicalCode c = soft_repetition_code(3);
  const auto ghz = make_scenario("ghz-jammer-test").zeta.value();
  const auto chk = verify_covariance_identity(c, n, ghz);
  CHECK(chk.rhs == Approx(p_err(c, n, ghz)).margin(1e-12));
  CHECK(chk.lhs == Approx(chk.rhs).margin(1e-12));
}

TEST_CASE("de Finetti penalty on the GHZ jammer against the soft repetition code") {
  const Channel n = bitflip_jammer_channel();
  const ClassicalCode c = soft_repetition_code(3);
  const auto ghz = make_scenario("ghz-jammer-test").zeta.value();
  const auto compound = compound_error(c, n);
  // P_err = 1/4 + p/2 for flip probability p, maximal at p = 1
  CHECK(compound.value == Approx(0.75).margin(1e-6));
  CHECK(definetti_factor(3, 2) == Approx(256.0));
  const auto pen = verify_definetti_penalty(c, n, ghz, compound.value);
  CHECK(pen.ok);
  CHECK(pen.lhs <= pen.bound);
}

TEST_CASE("compound error search dominates random product states") {
  Rng rng(45);
  const Channel n = bitflip_jammer_channel();
  const ClassicalCode c = random_classical_code(2, 2, 2, 2, rng);
  const auto e = error_observable(c, n);
  const auto r = compound_error(e, 2);
  // no product state beats the reported supremum by more than search slack
  for (int t = 0; t < 300; ++t) {
    const auto s = random_density(2, rng);
    const double v = (kron(s.matrix(), s.matrix()) * e.matrix).trace().real();
    CHECK(v <= r.value + 1e-6);
  }
}
