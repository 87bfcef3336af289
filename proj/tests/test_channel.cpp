#include "catch2/catch_amalgamated.hpp"
#include "qavc/scenarios.hpp"

using namespace qavc;
using Catch::Approx;
using Catch::Matchers::ContainsSubstring;

namespace {

CMatrix pauli_x() {
  CMatrix x(2, 2);
  x << 0, 1, 1, 0;
  return x;
}

/// N(ρ) from the Choi matrix: tr_A[(ρᵀ ⊗ 1) J].
CMatrix apply_via_choi(const CMatrix& choi, const CMatrix& rho, std::size_t din, std::size_t dout) {
  const auto lift = kron(CMatrix(rho.transpose()), CMatrix::Identity(static_cast<Eigen::Index>(dout),
                                                                       static_cast<Eigen::Index>(dout)));
  return partial_trace(lift * choi, {din, dout}, {1});
}

}  // namespace

TEST_CASE("non trace preserving Kraus sets are rejected with the residual") {
  CMatrix k = 0.5 * CMatrix::Identity(2, 2);
  REQUIRE_THROWS_AS(Channel({2}, {2}, {k}), DomainError);
  REQUIRE_THROWS_WITH(Channel({2}, {2}, {k}), ContainsSubstring("residual"));
  CHECK_THROWS_AS(Channel({2}, {2}, {CMatrix::Identity(3, 2)}), ShapeError);
  CHECK_THROWS_AS(Channel({2, 2}, {2}, {CMatrix::Identity(2, 4)}, 3), ShapeError);
}

TEST_CASE("Choi matrix reproduces the channel action") {
  Rng rng(21);
  for (int t = 0; t < 10; ++t) {
    const Channel n = random_channel({3}, {2}, 3, rng);
    const CMatrix j = choi_matrix(n);
    const CMatrix rho = random_density(3, rng).matrix();
    CHECK((apply_via_choi(j, rho, 3, 2) - apply_matrix(n, rho)).norm() < 1e-12);
    CHECK(choi_state(n).trace().real() == Approx(1.0));
  }
}

TEST_CASE("adjoint satisfies tr(Y N(X)) = tr(N*(Y) X)") {
  Rng rng(22);
  for (int t = 0; t < 20; ++t) {
    const Channel n = random_channel({2, 2}, {3}, 2, rng, 1);
    const CMatrix x = ginibre(4, 4, rng), y = ginibre(3, 3, rng);
    const cplx lhs = (y * apply_matrix(n, x)).trace();
    const cplx rhs = (adjoint_apply_matrix(n, y) * x).trace();
    CHECK(std::abs(lhs - rhs) < 1e-11);
  }
}

TEST_CASE("compose and tensor act as expected on product inputs") {
  Rng rng(23);
  const Channel a = random_channel({2}, {2}, 2, rng), b = random_channel({2}, {3}, 2, rng);
  const CMatrix ra = random_density(2, rng).matrix(), rb = random_density(2, rng).matrix();
  const Channel ab = tensor(a, b);
  CHECK((apply_matrix(ab, kron(ra, rb)) - kron(apply_matrix(a, ra), apply_matrix(b, rb))).norm() < 1e-12);
  const Channel ba = compose(b, a);
  CHECK((apply_matrix(ba, ra) - apply_matrix(b, apply_matrix(a, ra))).norm() < 1e-12);
  CHECK_THROWS_AS(compose(a, b), ShapeError);
}

TEST_CASE("tensor power groups sender factors before jammer factors") {
  Rng rng(24);
  const Channel n = random_channel({2, 2}, {2}, 2, rng, 1);
  const Channel n2 = tensor_power(n, 2);
  REQUIRE(n2.jammer_factors() == 2);
  REQUIRE(n2.block_length() == 2);
  const CMatrix r1 = random_density(2, rng).matrix(), r2 = random_density(2, rng).matrix();
  const CMatrix s1 = random_density(2, rng).matrix(), s2 = random_density(2, rng).matrix();
  const CMatrix in = kron(kron(r1, r2), kron(s1, s2));
  const CMatrix expect = kron(apply_matrix(n, kron(r1, s1)), apply_matrix(n, kron(r2, s2)));
  CHECK((apply_matrix(n2, in) - expect).norm() < 1e-12);
}

TEST_CASE("fixing the jammer state matches feeding rho tensor sigma") {
  Rng rng(25);
  for (int t = 0; t < 10; ++t) {
    const Channel n = random_channel({2, 3}, {2}, 3, rng, 1);
    const auto sigma = random_density(3, rng, 1 + t % 3);
    const CMatrix rho = random_density(2, rng).matrix();
    const Channel ns = fix_jammer(n, sigma);
    CHECK((apply_matrix(ns, rho) - apply_matrix(n, kron(rho, sigma.matrix()))).norm() < 1e-12);
  }
  CHECK_THROWS_AS(fix_jammer(random_channel({2, 2}, {2}, 2, rng, 1), maximally_mixed(3)), ShapeError);
}

TEST_CASE("Kraus compression preserves the Choi matrix") {
  Rng rng(26);
  const Channel n = tensor_power(random_channel({2, 2}, {2}, 3, rng, 1), 2);
  const Channel c = compress_kraus(n);
  CHECK(c.kraus().size() <= n.kraus().size());
  CHECK((choi_matrix(c) - choi_matrix(n)).norm() < 1e-10);
}

TEST_CASE("Choi channel maps a jammer state to the Choi state of the induced channel") {
  Rng rng(27);
  const Channel n = random_channel({2, 2}, {2}, 2, rng, 1);
  const auto sigma = random_density(2, rng);
  const Channel gamma = choi_channel(n);
  CHECK((apply_matrix(gamma, sigma.matrix()) - choi_state(fix_jammer(n, sigma))).norm() < 1e-12);
}

TEST_CASE("embedded classical AVC reproduces transition probabilities") {
  const ClassicalAvc w{{{0.9, 0.1}, {0.1, 0.9}}, {{0.8, 0.2}, {0.2, 0.8}}};
  const Channel n = embed_classical_avc(w);
  for (std::size_t s = 0; s < 2; ++s) {
    for (std::size_t x = 0; x < 2; ++x) {
      const CMatrix out = apply_matrix(n, kron(basis_state(2, x).matrix(), basis_state(2, s).matrix()));
      for (std::size_t y = 0; y < 2; ++y) {
        CHECK(out(static_cast<Eigen::Index>(y), static_cast<Eigen::Index>(y)).real() == Approx(w[s][x][y]));
      }
    }
  }
  CHECK_THROWS_AS(validate_classical_avc({{{0.5, 0.6}}}), DomainError);
}

TEST_CASE("diamond distance: identity against a bit flip is 1") {
  const auto d = diamond_distance(identity_channel({2}), unitary_channel(pauli_x(), {2}));
  CHECK(d.lower == Approx(1.0).margin(1e-9));
  CHECK(d.upper == Approx(1.0).margin(1e-9));
}

TEST_CASE("diamond distance: identity against full depolarization is 3/4") {
  const auto d = diamond_distance(identity_channel({2}), fully_depolarizing({2}, {2}));
  CHECK(d.lower == Approx(0.75).margin(1e-8));
  CHECK(d.upper == Approx(0.75).margin(1e-8));
}

TEST_CASE("bit-flip jammer: induced distance is |p - p'|") {
  const Channel n = bitflip_jammer_channel();
  for (double p : {0.0, 0.2, 0.5}) {
    for (double q : {0.1, 0.9}) {
      const DensityOperator sp(qubit_from_bloch(0, 0, 1 - 2 * p)), sq(qubit_from_bloch(0, 0, 1 - 2 * q));
      const auto d = diamond_distance(fix_jammer(n, sp), fix_jammer(n, sq));
      CHECK(d.lower == Approx(std::abs(p - q)).margin(1e-8));
      CHECK(d.upper == Approx(std::abs(p - q)).margin(1e-8));
    }
  }
}

TEST_CASE("diamond interval is ordered and sandwiched by simple bounds") {
  Rng rng(28);
  for (int t = 0; t < 15; ++t) {
    const Channel a = random_channel({2}, {2}, 2, rng), b = random_channel({2}, {2}, 2, rng);
    const auto d = diamond_distance(a, b);
    const CMatrix j = hermitize(choi_matrix(a) - choi_matrix(b));
    // maximally entangled input gives a lower bound; |A|·½‖J‖₁ an upper bound
    CHECK(d.lower >= 0.5 * trace_norm(j) / 2.0 - 1e-10);
    CHECK(d.upper <= 0.5 * trace_norm(j) + 1e-10);
    CHECK(d.lower <= d.upper + 1e-12);
    CHECK(d.upper <= 1.0 + 1e-10);
  }
}

TEST_CASE("diamond distance of a channel with itself is zero") {
  Rng rng(29);
  const Channel a = random_channel({3}, {2}, 3, rng);
  const auto d = diamond_distance(a, a);
  CHECK(d.upper <= 1e-10);
  CHECK(d.converged());
}
