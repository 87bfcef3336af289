#pragma once

// Permutation unitaries on tensor powers, symmetrisation of codes and
// jammer states, and numerical checks of the covariance identity and of
// the de Finetti penalty bound E_π err(C_π, ζ) ≤ (ℓ+1)^{|J|²} ε.

#include "qavc/code.hpp"

#include <numeric>

namespace qavc {

/// 0-based bijection: perm[j] = π(j).
using Permutation = std::vector<std::size_t>;

inline constexpr std::size_t kPermutationEnumerationCap = 6;

inline bool is_bijection(const Permutation& p) {
  std::vector<bool> seen(p.size(), false);
  for (auto v : p) {
    if (v >= p.size() || seen[v]) return false;
    seen[v] = true;
  }
  return true;
}

inline Permutation compose(const Permutation& pi, const Permutation& tau) {
  Permutation out(tau.size());
  for (std::size_t j = 0; j < tau.size(); ++j) out[j] = pi[tau[j]];
  return out;
}

inline Permutation inverse(const Permutation& pi) {
  Permutation out(pi.size());
  for (std::size_t j = 0; j < pi.size(); ++j) out[pi[j]] = j;
  return out;
}

/// All ℓ! permutations in lexicographic order.
inline std::vector<Permutation> all_permutations(std::size_t ell) {
  Permutation p(ell);
  std::iota(p.begin(), p.end(), std::size_t{0});
  std::vector<Permutation> out;
  do {
    out.push_back(p);
  } while (std::next_permutation(p.begin(), p.end()));
  return out;
}

struct PermutationOp {
  std::size_t ell = 0;
  std::size_t local_dim = 0;
  Permutation perm;
  CMatrix matrix;
};

/// U^π |α_1 … α_ℓ⟩ = |α_{π⁻¹(1)} … α_{π⁻¹(ℓ)}⟩: the system at position j
/// moves to position π(j).
inline PermutationOp perm_unitary(const Permutation& pi, std::size_t local_dim, std::size_t ell) {
  if (pi.size() != ell || !is_bijection(pi)) throw DomainError("perm_unitary: not a bijection of {1..ell}");
  if (local_dim == 0) throw DomainError("perm_unitary: local dimension 0");
  return {ell, local_dim, pi, factor_permutation_matrix(Dims(ell, local_dim), inverse(pi))};
}

struct SymmetrizeOptions {
  bool sampling = false;
  std::size_t samples = 720;
  std::uint64_t seed = 0;
};

template <class Code>
struct SymmetrizedCode {
  RandomCode<Code> code;
  std::vector<Permutation> permutations;
  bool sampled = false;
};

namespace detail {

inline std::vector<Permutation> permutation_support(std::size_t ell, const SymmetrizeOptions& opts) {
  if (ell <= kPermutationEnumerationCap) return all_permutations(ell);
  if (!opts.sampling) {
    throw SizeError(detail::concat("ell = ", ell, " exceeds the permutation enumeration cap of ",
                                   kPermutationEnumerationCap, "; enable sampling"));
  }
  Rng rng(opts.seed);
  std::vector<Permutation> out;
  Permutation p(ell);
  for (std::size_t s = 0; s < opts.samples; ++s) {
    std::iota(p.begin(), p.end(), std::size_t{0});
    std::shuffle(p.begin(), p.end(), rng);
    out.push_back(p);
  }
  return out;
}

template <class Code>
SymmetrizedCode<Code> uniform_over(std::vector<Code> variants, std::vector<Permutation> perms,
                                   bool sampled) {
  const double w = 1.0 / static_cast<double>(variants.size());
  return {RandomCode<Code>{std::vector<double>(variants.size(), w), std::move(variants)},
          std::move(perms), sampled};
}

}  // namespace detail

/// C_π = {(U^π ρ_m U^π†, U^π D_m U^π†)} for π uniform over S_ℓ.
inline SymmetrizedCode<ClassicalCode> symmetrize_classical(const ClassicalCode& c,
                                                           const SymmetrizeOptions& opts = {}) {
  c.validate();
  auto perms = detail::permutation_support(c.ell, opts);
  std::vector<ClassicalCode> variants;
  variants.reserve(perms.size());
  for (const auto& pi : perms) {
    const CMatrix ua = perm_unitary(pi, c.a_dim, c.ell).matrix;
    const CMatrix ub = perm_unitary(pi, c.b_dim, c.ell).matrix;
    ClassicalCode v{c.ell, c.a_dim, c.b_dim, {}, {}};
    for (const auto& s : c.states) v.states.emplace_back(ua * s.matrix() * ua.adjoint());
    for (const auto& d : c.povm) v.povm.emplace_back(ub * d.matrix() * ub.adjoint());
    variants.push_back(std::move(v));
  }
  return detail::uniform_over(std::move(variants), std::move(perms), c.ell > kPermutationEnumerationCap);
}

/// Q_π = (U_π ∘ E, D ∘ U_{π⁻¹}).
inline SymmetrizedCode<QuantumCode> symmetrize_quantum(const QuantumCode& q,
                                                       const SymmetrizeOptions& opts = {}) {
  q.validate();
  auto perms = detail::permutation_support(q.ell, opts);
  std::vector<QuantumCode> variants;
  for (const auto& pi : perms) {
    const CMatrix ua = perm_unitary(pi, q.a_dim(), q.ell).matrix;
    const CMatrix ub_inv = perm_unitary(inverse(pi), q.b_dim(), q.ell).matrix;
    const Channel enc = compose(unitary_channel(ua, q.encoder.out_dims()), q.encoder);
    const Channel dec = compose(q.decoder, unitary_channel(ub_inv, q.decoder.in_dims()));
    variants.push_back(QuantumCode{q.ell, q.L, enc, dec});
  }
  return detail::uniform_over(std::move(variants), std::move(perms), q.ell > kPermutationEnumerationCap);
}

/// ζ' = (1/ℓ!) Σ_π U^π ζ U^π†.
inline DensityOperator symmetrize_state(const DensityOperator& zeta, std::size_t ell) {
  if (ell > kPermutationEnumerationCap) {
    throw SizeError(detail::concat("symmetrize_state: ell = ", ell, " exceeds the enumeration cap"));
  }
  const std::size_t d = exact_root(zeta.dim(), ell);
  const auto perms = all_permutations(ell);
  CMatrix acc = CMatrix::Zero(zeta.matrix().rows(), zeta.matrix().cols());
  for (const auto& pi : perms) {
    const CMatrix u = perm_unitary(pi, d, ell).matrix;
    acc += u * zeta.matrix() * u.adjoint();
  }
  return DensityOperator(acc / static_cast<double>(perms.size()));
}

struct CovarianceCheck {
  double lhs = 0.0;  // E_π err(C_π, ζ)
  double rhs = 0.0;  // err(C, ζ')
};

/// Both sides of the S_ℓ-covariance identity, each evaluated directly.
template <class Code>
CovarianceCheck verify_covariance_identity(const Code& c, const Channel& n, const DensityOperator& zeta) {
  const std::size_t ell = block_length_of(c);
  const Channel block = detail::block_channel(n, ell);
  SymmetrizedCode<Code> sym;
  if constexpr (std::is_same_v<Code, ClassicalCode>) {
    sym = symmetrize_classical(c);
  } else {
    sym = symmetrize_quantum(c);
  }
  CovarianceCheck out;
  for (std::size_t i = 0; i < sym.code.variants.size(); ++i) {
    out.lhs += sym.code.weights[i] * code_error(sym.code.variants[i], block, zeta.matrix());
  }
  out.rhs = code_error(c, block, symmetrize_state(zeta, ell).matrix());
  return out;
}

/// (ℓ+1)^{|J|²}.
inline double definetti_factor(std::size_t ell, std::size_t jdim) {
  return std::pow(static_cast<double>(ell + 1), static_cast<double>(jdim * jdim));
}

struct PenaltyCheck {
  double lhs = 0.0;
  double bound = 0.0;
  bool ok = false;
};

/// lhs = E_π err(C_π, ζ); bound = compound_err·(ℓ+1)^{|J|²}. The caller
/// supplies compound_err ≥ sup_σ err(C, σ^{⊗ℓ}) (see compound_error).
template <class Code>
PenaltyCheck verify_definetti_penalty(const Code& c, const Channel& n, const DensityOperator& zeta,
                                      double compound_err) {
  const std::size_t ell = block_length_of(c);
  const Channel block = detail::block_channel(n, ell);
  const std::size_t jdim = exact_root(block.jammer_total(), ell);
  SymmetrizedCode<Code> sym;
  if constexpr (std::is_same_v<Code, ClassicalCode>) {
    sym = symmetrize_classical(c);
  } else {
    sym = symmetrize_quantum(c);
  }
  PenaltyCheck out;
  for (std::size_t i = 0; i < sym.code.variants.size(); ++i) {
    out.lhs += sym.code.weights[i] * code_error(sym.code.variants[i], block, zeta.matrix());
  }
  out.bound = compound_err * definetti_factor(ell, jdim);
  out.ok = out.lhs <= out.bound + 1e-9;
  return out;
}

struct CompoundSearch {
  double value = 0.0;
  DensityOperator sigma;
};

/// sup over σ ∈ S(J) of tr(σ^{⊗ℓ} E): grid scan followed by local ascent
/// from the best grid points.
inline CompoundSearch compound_error(const ErrorObservable& e, std::size_t ell,
                                     std::size_t grid_points = 200, std::size_t ascents = 3) {
  const std::size_t jdim = exact_root(e.jdim, ell);
  auto f = [&](const CMatrix& s) {
    CMatrix p = s;
    for (std::size_t i = 1; i < ell; ++i) p = kron(p, s);
    return (p * e.matrix).trace().real();
  };
  const auto grid = state_grid(jdim, grid_points);
  std::vector<std::pair<double, std::size_t>> scored;
  for (std::size_t i = 0; i < grid.size(); ++i) scored.emplace_back(f(grid[i].matrix()), i);
  std::stable_sort(scored.begin(), scored.end(), [](auto& a, auto& b) { return a.first > b.first; });
  CompoundSearch best{scored.front().first, grid[scored.front().second]};
  for (std::size_t k = 0; k < std::min(ascents, scored.size()); ++k) {
    const auto r = local_state_search(f, grid[scored[k].second], true);
    if (r.value > best.value) best = {r.value, r.state};
  }
  return best;
}

template <class Code>
CompoundSearch compound_error(const Code& c, const Channel& n, std::size_t grid_points = 200) {
  const std::size_t ell = block_length_of(c);
  return compound_error(observable(c, detail::block_channel(n, ell)), ell, grid_points);
}

}  // namespace qavc
