#include "catch2/catch_amalgamated.hpp"
#include "qavc/qavc.hpp"

#include <cmath>

using namespace qavc;
using Catch::Approx;

namespace {

std::uint64_t splitmix(std::uint64_t& s) {
  std::uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double unit(std::uint64_t& s) { return static_cast<double>(splitmix(s) >> 11) * 0x1.0p-53; }

ClassicalCode threshold_variant(double e) {
  ClassicalCode c{1, 2, 2, {basis_state(2, 0), basis_state(2, 1)}, {}};
  CMatrix d0(2, 2);
  d0 << 1.0 - e, 0, 0, e;
  c.povm.emplace_back(d0);
  c.povm.emplace_back(CMatrix(CMatrix::Identity(2, 2) - d0));
  return c;
}

}  // namespace

TEST_CASE("binary relative entropy edge cases") {
  CHECK(bin_rel_entropy(0.3, 0.3) == Approx(0.0).margin(1e-15));
  CHECK(bin_rel_entropy(0.0, 0.5) == Approx(std::log(2.0)));
  CHECK(std::isinf(bin_rel_entropy(0.5, 0.0)));
  CHECK(std::isinf(bin_rel_entropy(0.5, 1.0)));
  CHECK(bin_rel_entropy(0.15, 0.1) == Approx(0.0122351).margin(1e-6));
  CHECK_THROWS_AS(bin_rel_entropy(1.2, 0.5), DomainError);
  CHECK_THROWS_AS(bin_rel_entropy(0.5, -0.1), DomainError);
}

TEST_CASE("Pinsker lower bound holds on seeded random pairs") {
  std::uint64_t s = 0xd1ce;
  for (int t = 0; t < 5000; ++t) {
    const double u = unit(s), v = 0.001 + 0.998 * unit(s);
    CHECK(bin_rel_entropy(u, v) >= 2.0 * (u - v) * (u - v) - 1e-15);
  }
}

TEST_CASE("sample size reference values") {
  const auto ss = sample_size(0.05, 0.1, 2, 4);
  CHECK(ss.n_pinsker == 139);
  CHECK(ss.n_exact == 40);
  CHECK(tail_bound(40, 0.05, 0.1, 2, 4) < 1.0);
  CHECK(tail_bound(39, 0.05, 0.1, 2, 4) >= 1.0);
}

TEST_CASE("exact sample size never exceeds the Pinsker one and sits on the boundary") {
  std::uint64_t s = 0xbeef;
  for (int t = 0; t < 300; ++t) {
    const double eps = 0.5 * unit(s);
    const double delta = 0.01 + (0.98 - eps) * 0.5 * unit(s);
    const std::size_t jdim = 2 + splitmix(s) % 3, ell = 1 + splitmix(s) % 4;
    const auto ss = sample_size(eps, delta, jdim, ell);
    CHECK(ss.n_exact <= ss.n_pinsker);
    CHECK(tail_bound(ss.n_exact, eps, delta, jdim, ell) < 1.0);
    if (ss.n_exact > 1) CHECK(tail_bound(ss.n_exact - 1, eps, delta, jdim, ell) >= 1.0);
  }
}

TEST_CASE("sample size rejects invalid parameters") {
  CHECK_THROWS_AS(sample_size(0.5, 0.5, 2, 1), DomainError);
  CHECK_THROWS_AS(sample_size(0.1, 0.0, 2, 1), DomainError);
  CHECK_THROWS_AS(sample_size(-0.1, 0.1, 2, 1), DomainError);
  CHECK_THROWS_AS(sample_size(0.1, 0.1, 0, 1), DomainError);
}

TEST_CASE("zero-error codes need a single sample") {
  CHECK(sample_size(0.0, 0.1, 2, 3).n_exact == 1);
  CHECK(shared_bits_budget(0.1, 2, 3) ==
        Approx(std::log2(3.0) - 2.0 * std::log2(0.1) + std::log2(std::log(2.0))));
}

TEST_CASE("a deterministic code derandomizes on the first draw") {
  const Channel n = bitflip_jammer_channel();
  const auto res = derandomize(deterministic(soft_repetition_code(2)), n, 0.1, 11);
  CHECK(res.attempts == 1);
  CHECK(res.achieved == Approx(res.plan.epsilon).margin(1e-12));
  CHECK(res.reduced.variants.size() == res.plan.n);
}

TEST_CASE("derandomized symmetric code meets eps + delta") {
  const Channel n = bitflip_jammer_channel();
  const auto sym = symmetrize_classical(soft_repetition_code(3));
  const auto res = derandomize(sym.code, n, 0.1, 12);
  CHECK(res.plan.epsilon == Approx(0.75).margin(1e-9));
  CHECK(res.achieved <= res.plan.epsilon + 0.1 + 1e-9);
  CHECK(worst_case_error(res.reduced, n).value <= res.plan.epsilon + 0.1 + 1e-9);
  const auto again = derandomize(sym.code, n, 0.1, 12);
  CHECK(again.chosen == res.chosen);
}

TEST_CASE("single-sample failure rate matches the mass of the bad variant") {
  const Channel n = bitflip_jammer_channel();
  RandomCode<ClassicalCode> two{{0.8, 0.2}, {threshold_variant(0.55), threshold_variant(0.1)}};
  CHECK(worst_case_error(two, n).value == Approx(0.8 * 0.45 + 0.2 * 0.9));
  const double rate = empirical_failure_rate(two, n, 0.1, 1, 2000, 13);
  CHECK(std::abs(rate - 0.2) <= 3.0 * std::sqrt(0.16 / 2000.0));
}

TEST_CASE("derandomization errors carry the failure rate and reject bad inputs") {
  const DerandError err("all draws failed", 0.97);
  CHECK(err.failure_rate() == Approx(0.97));
  const VerificationError& base = err;
  CHECK(std::string(base.what()) == "all draws failed");
  const Channel n = bitflip_jammer_channel();
  RandomCode<ClassicalCode> bad{{0.5, 0.6}, {threshold_variant(0.0), threshold_variant(1.0)}};
  CHECK_THROWS_AS(derandomize(bad, n, 0.1, 14), DomainError);
  RandomCode<ClassicalCode> ok{{0.5, 0.5}, {threshold_variant(0.0), threshold_variant(1.0)}};
  CHECK_THROWS_AS(derandomize(ok, n, 0.6, 14), DomainError);
  CHECK_THROWS_AS(empirical_failure_rate(ok, n, 0.1, 0, 10, 14), DomainError);
}

TEST_CASE("quantum codes derandomize through the same path") {
  // jammer |1> dephases the qubit with probability 1/2
  const CMatrix id = CMatrix::Identity(2, 2);
  CMatrix z(2, 2);
  z << 1, 0, 0, -1;
  CMatrix bra0 = CMatrix::Zero(1, 2), bra1 = CMatrix::Zero(1, 2);
  bra0(0, 0) = 1.0;
  bra1(0, 1) = 1.0;
  const double r = std::sqrt(0.5);
  const Channel n({2, 2}, {2}, {kron(id, bra0), r * kron(id, bra1), r * kron(z, bra1)}, 1);
  const auto sym = symmetrize_quantum(first_qubit_code(2));
  const auto res = derandomize(sym.code, n, 0.1, 15);
  CHECK(res.achieved <= res.plan.epsilon + 0.1 + 1e-9);
  CHECK(res.plan.jdim == 2);
  CHECK(res.plan.ell == 2);
}
