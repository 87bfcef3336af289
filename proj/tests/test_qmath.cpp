#include "catch2/catch_amalgamated.hpp"
#include "qavc/sampling.hpp"

using namespace qavc;
using Catch::Approx;

namespace {

/// Partial trace by explicit index arithmetic over all factors.
CMatrix partial_trace_oracle(const CMatrix& m, const Dims& dims, const std::vector<std::size_t>& keep) {
  const std::size_t n = dims.size();
  std::size_t kept_dim = 1;
  for (auto k : keep) kept_dim *= dims[k];
  CMatrix out = CMatrix::Zero(static_cast<Eigen::Index>(kept_dim), static_cast<Eigen::Index>(kept_dim));
  const std::size_t total = dims_product(dims);
  auto digits = [&](std::size_t idx) {
    std::vector<std::size_t> d(n);
    for (std::size_t f = n; f-- > 0;) {
      d[f] = idx % dims[f];
      idx /= dims[f];
    }
    return d;
  };
  for (std::size_t r = 0; r < total; ++r) {
    for (std::size_t c = 0; c < total; ++c) {
      const auto dr = digits(r), dc = digits(c);
      bool traced_equal = true;
      for (std::size_t f = 0; f < n; ++f) {
        if (std::find(keep.begin(), keep.end(), f) == keep.end() && dr[f] != dc[f]) traced_equal = false;
      }
      if (!traced_equal) continue;
      std::size_t kr = 0, kc = 0;
      for (auto k : keep) {
        kr = kr * dims[k] + dr[k];
        kc = kc * dims[k] + dc[k];
      }
      out(static_cast<Eigen::Index>(kr), static_cast<Eigen::Index>(kc)) +=
          m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    }
  }
  return out;
}

}  // namespace

TEST_CASE("kron of basis vectors indexes first factor most significantly") {
  CMatrix a = CMatrix::Zero(2, 2), b = CMatrix::Zero(3, 3);
  a(1, 0) = 1.0;
  b(2, 1) = 1.0;
  const CMatrix k = kron(a, b);
  REQUIRE(k.rows() == 6);
  CHECK(std::abs(k(1 * 3 + 2, 0 * 3 + 1) - cplx(1.0)) < 1e-15);
  CHECK(k.cwiseAbs().sum() == Approx(1.0));
}

TEST_CASE("kron respects the entry cap") {
  const CMatrix a = CMatrix::Identity(64, 64);
  CHECK_THROWS_AS(kron(a, a, 1000), SizeError);
}

TEST_CASE("partial trace agrees with index arithmetic on random operators") {
  Rng rng(11);
  const Dims dims{2, 3, 2};
  for (int t = 0; t < 10; ++t) {
    const CMatrix m = ginibre(12, 12, rng);
    for (const std::vector<std::size_t>& keep :
         {std::vector<std::size_t>{0}, {1}, {2}, {0, 2}, {1, 2}, {0, 1}}) {
      CHECK((partial_trace(m, dims, keep) - partial_trace_oracle(m, dims, keep)).norm() < 1e-12);
    }
  }
}

TEST_CASE("partial trace of a product state returns the factor") {
  Rng rng(12);
  const auto a = random_density(2, rng), b = random_density(3, rng);
  const CMatrix ab = kron(a.matrix(), b.matrix());
  CHECK((partial_trace(ab, {2, 3}, {0}) - a.matrix()).norm() < 1e-13);
  CHECK((partial_trace(ab, {2, 3}, {1}) - b.matrix()).norm() < 1e-13);
}

TEST_CASE("factor permutation swaps tensor factors") {
  Rng rng(13);
  const CMatrix a = ginibre(2, 2, rng), b = ginibre(3, 3, rng);
  const CMatrix p = factor_permutation_matrix({2, 3}, {1, 0});
  CHECK((p * kron(a, b) * p.adjoint() - kron(b, a)).norm() < 1e-12);
  CHECK((p.adjoint() * p - CMatrix::Identity(6, 6)).norm() < 1e-14);
}

TEST_CASE("eigen decomposition is sorted, reconstructs, and fixes phases") {
  Rng rng(14);
  const CMatrix g = ginibre(4, 4, rng);
  const CMatrix h = hermitize(g);
  const auto es = eig_hermitian(h);
  for (Eigen::Index i = 1; i < 4; ++i) CHECK(es.values(i - 1) >= es.values(i));
  const CMatrix rec = es.vectors * es.values.cast<cplx>().asDiagonal() * es.vectors.adjoint();
  CHECK((rec - h).norm() < 1e-12);
  for (Eigen::Index c = 0; c < 4; ++c) {
    Eigen::Index first = 0;
    while (std::abs(es.vectors(first, c)) <= 1e-12) ++first;
    CHECK(std::abs(es.vectors(first, c).imag()) < 1e-14);
    CHECK(es.vectors(first, c).real() > 0);
  }
}

TEST_CASE("trace norm, operator order and entropy") {
  CMatrix z(2, 2);
  z << 1, 0, 0, -1;
  CHECK(trace_norm(z) == Approx(2.0));
  CHECK(op_leq(0.5 * CMatrix::Identity(2, 2), CMatrix::Identity(2, 2)));
  CHECK_FALSE(op_leq(CMatrix::Identity(2, 2), 0.5 * CMatrix::Identity(2, 2)));
  CHECK(entropy_bits(maximally_mixed(4).matrix()) == Approx(2.0).margin(1e-12));
  CHECK(entropy_bits(basis_state(3, 1).matrix()) == Approx(0.0).margin(1e-12));
}

TEST_CASE("density operators reject non-states") {
  CMatrix bad = CMatrix::Identity(2, 2);
  CHECK_THROWS_AS(DensityOperator(bad), DomainError);  // trace 2
  CMatrix neg(2, 2);
  neg << 1.5, 0, 0, -0.5;
  CHECK_THROWS_AS(DensityOperator(neg), DomainError);
  CMatrix nonherm(2, 2);
  nonherm << 0.5, 0.3, 0, 0.5;
  CHECK_THROWS_AS(DensityOperator(nonherm), DomainError);
  CHECK_THROWS_AS(DensityOperator(CMatrix::Zero(2, 3)), ShapeError);
  CMatrix over(2, 2);
  over << 1.2, 0, 0, 0.2;
  CHECK_THROWS_AS(PovmElement(over), DomainError);
}

TEST_CASE("maximally entangled state has maximally mixed marginals") {
  const auto phi = max_entangled(3);
  CHECK((partial_trace(phi.matrix(), {3, 3}, {0}) - maximally_mixed(3).matrix()).norm() < 1e-14);
  CHECK(entropy_bits(phi.matrix()) == Approx(0.0).margin(1e-10));
}

TEST_CASE("exact_root accepts only perfect powers") {
  CHECK(exact_root(8, 3) == 2);
  CHECK(exact_root(81, 4) == 3);
  CHECK_THROWS_AS(exact_root(10, 2), ShapeError);
}

TEST_CASE("seed derivation is deterministic and separates streams") {
  CHECK(derive_seed(42, 0, 0) == derive_seed(42, 0, 0));
  CHECK(derive_seed(42, 0, 1) != derive_seed(42, 0, 0));
  CHECK(derive_seed(42, 1, 0) != derive_seed(42, 0, 1));
  CHECK(derive_seed(43, 0, 0) != derive_seed(42, 0, 0));
}

TEST_CASE("random objects satisfy their defining constraints") {
  Rng rng(15);
  for (int t = 0; t < 20; ++t) {
    const CMatrix v = random_isometry(6, 3, rng);
    CHECK((v.adjoint() * v - CMatrix::Identity(3, 3)).norm() < 1e-12);
    const auto povm = random_povm(4, 3, rng);
    CMatrix sum = CMatrix::Zero(4, 4);
    for (const auto& e : povm) sum += e.matrix();
    CHECK((sum - CMatrix::Identity(4, 4)).norm() < 1e-10);
    const auto rho = random_density(3, rng, 2);
    CHECK(rho.matrix().trace().real() == Approx(1.0));
    CHECK(min_eigenvalue(rho.matrix()) > -1e-12);
  }
}

TEST_CASE("qubit state grid holds valid distinct states") {
  const auto grid = state_grid(2, 200);
  REQUIRE(grid.size() == 200);
  for (const auto& s : grid) CHECK(min_eigenvalue(s.matrix()) > -1e-12);
  const auto grid3 = state_grid(3, 30);
  REQUIRE(grid3.size() == 30);
}

TEST_CASE("local state search finds the top eigenvector of a linear functional") {
  Rng rng(16);
  const CMatrix h = hermitize(ginibre(3, 3, rng));
  auto f = [&](const CMatrix& s) { return (s * h).trace().real(); };
  const auto r = local_state_search(f, maximally_mixed(3), true);
  CHECK(r.value == Approx(max_eigenvalue(h)).margin(1e-5));
}
