#pragma once

// Classical and quantum codes for a QAVC, their error functionals against
// arbitrary jammer states on J^ℓ, and the error observables E(C), G(Q)
// that turn those functionals into expectation values tr(ζ·E).

#include "qavc/channel.hpp"

namespace qavc {

/// Message states ρ_m on A^ℓ and decoding POVM {D_m} on B^ℓ.
struct ClassicalCode {
  std::size_t ell = 1;
  std::size_t a_dim = 2;
  std::size_t b_dim = 2;
  std::vector<DensityOperator> states;
  std::vector<PovmElement> povm;

  [[nodiscard]] std::size_t messages() const { return states.size(); }
  [[nodiscard]] double rate() const {
    return std::log2(static_cast<double>(messages())) / static_cast<double>(ell);
  }

  void validate() const {
    if (ell == 0) throw DomainError("code block length must be positive");
    if (states.empty()) throw DomainError("code has no messages");
    if (states.size() != povm.size()) {
      throw ShapeError(detail::concat("code has ", states.size(), " states but ", povm.size(),
                                      " POVM elements"));
    }
    std::size_t a_total = 1, b_total = 1;
    for (std::size_t i = 0; i < ell; ++i) {
      a_total *= a_dim;
      b_total *= b_dim;
    }
    for (const auto& s : states) {
      if (s.dim() != a_total) throw ShapeError("code state dimension does not match |A|^ell");
    }
    const auto b = static_cast<Eigen::Index>(b_total);
    CMatrix total = CMatrix::Zero(b, b);
    for (const auto& d : povm) {
      if (d.dim() != b_total) throw ShapeError("POVM element dimension does not match |B|^ell");
      total += d.matrix();
    }
    const double res = (total - CMatrix::Identity(b, b)).norm();
    if (res > 1e-9) throw DomainError(detail::concat("POVM does not sum to identity (residual ", res, ")"));
  }
};

/// Encoder C^L → A^ℓ and decoder B^ℓ → C^L.
struct QuantumCode {
  std::size_t ell = 1;
  std::size_t L = 2;
  Channel encoder;
  Channel decoder;

  [[nodiscard]] double rate() const {
    return std::log2(static_cast<double>(L)) / static_cast<double>(ell);
  }
  [[nodiscard]] std::size_t a_dim() const { return encoder.out_dims().front(); }
  [[nodiscard]] std::size_t b_dim() const { return decoder.in_dims().front(); }

  void validate() const {
    if (ell == 0) throw DomainError("code block length must be positive");
    if (encoder.in_total() != L || decoder.out_total() != L) {
      throw ShapeError("quantum code encoder/decoder do not match the code dimension L");
    }
  }
};

/// Finitely supported distribution over deterministic codes sharing (ℓ, M or L).
template <class Code>
struct RandomCode {
  std::vector<double> weights;
  std::vector<Code> variants;

  void validate() const {
    if (variants.empty()) throw DomainError("random code has no variants");
    if (weights.size() != variants.size()) throw ShapeError("random code weight count mismatch");
    double total = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0)) throw DomainError("random code has a negative weight");
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-12) throw DomainError(detail::concat("random code weights sum to ", total));
  }
};

template <class Code>
RandomCode<Code> deterministic(Code c) {
  return RandomCode<Code>{{1.0}, {std::move(c)}};
}

/// POVM element on J^ℓ whose expectation is the code's error.
struct ErrorObservable {
  std::size_t jdim = 0;  // |J|^ℓ
  CMatrix matrix;
};

namespace detail {

/// The channel for block length ℓ: `n` itself when already powered to ℓ,
/// otherwise its ℓ-th tensor power.
inline Channel block_channel(const Channel& n, std::size_t ell) {
  if (n.block_length() == ell) return n;
  if (n.block_length() != 1) {
    throw ShapeError(detail::concat("channel is powered to ", n.block_length(), ", code needs ", ell));
  }
  return tensor_power(n, ell);
}

inline void check_jammer_state(const Channel& block, const CMatrix& zeta) {
  if (static_cast<std::size_t>(zeta.rows()) != block.jammer_total()) {
    throw ShapeError(detail::concat("jammer state has dimension ", zeta.rows(), ", expected ",
                                    block.jammer_total()));
  }
}

/// T = D ∘ N^{⊗ℓ} ∘ (E ⊗ id_{J^ℓ}): the coded channel with jammer input.
inline Channel coded_channel(const QuantumCode& q, const Channel& block) {
  if (q.encoder.out_total() != block.user_in_total() || q.decoder.in_total() != block.out_total()) {
    throw ShapeError("quantum code does not fit the channel dimensions");
  }
  const Dims jd(block.in_dims().end() - static_cast<long>(block.jammer_factors()),
                block.in_dims().end());
  const Channel enc_j = tensor(q.encoder, identity_channel(jd));
  const Channel widened(enc_j.in_dims(), enc_j.out_dims(), enc_j.kraus(), jd.size());
  return compose(q.decoder, compose(block, widened));
}

inline double entanglement_overlap(const CMatrix& omega, std::size_t L) {
  const CVector phi = max_entangled_vector(L);
  return (phi.adjoint() * omega * phi)(0, 0).real();
}

}  // namespace detail

/// P_err(C, ζ) = (1/M) Σ_m tr N^{⊗ℓ}(ρ_m ⊗ ζ)(1 − D_m).
inline double p_err(const ClassicalCode& c, const Channel& n, const CMatrix& zeta) {
  const Channel block = detail::block_channel(n, c.ell);
  detail::check_jammer_state(block, zeta);
  if (c.states.front().dim() != block.user_in_total() || c.povm.front().dim() != block.out_total()) {
    throw ShapeError("code dimensions do not match the channel");
  }
  double acc = 0.0;
  for (std::size_t m = 0; m < c.messages(); ++m) {
    const CMatrix out = apply_matrix(block, kron(c.states[m].matrix(), zeta));
    acc += (out.trace() - (out * c.povm[m].matrix()).trace()).real();
  }
  return acc / static_cast<double>(c.messages());
}

inline double p_err(const ClassicalCode& c, const Channel& n, const DensityOperator& zeta) {
  return p_err(c, n, zeta.matrix());
}

/// F̂(Q, ζ) = 1 − tr((id ⊗ D∘N^{⊗ℓ}_ζ∘E) Φ_L)·Φ_L.
inline double infidelity(const QuantumCode& q, const Channel& n, const CMatrix& zeta) {
  const Channel block = detail::block_channel(n, q.ell);
  detail::check_jammer_state(block, zeta);
  const Channel t = detail::coded_channel(q, block);
  const Channel full = tensor(identity_channel({q.L}), t);
  const CMatrix omega = apply_matrix(full, kron(max_entangled(q.L).matrix(), zeta));
  return 1.0 - detail::entanglement_overlap(omega, q.L);
}

inline double infidelity(const QuantumCode& q, const Channel& n, const DensityOperator& zeta) {
  return infidelity(q, n, zeta.matrix());
}

/// E = (1/M) Σ_m tr_{A^ℓ} (ρ_m ⊗ 1)(N*^{⊗ℓ}(1 − D_m)).
inline ErrorObservable error_observable(const ClassicalCode& c, const Channel& n) {
  const Channel block = detail::block_channel(n, c.ell);
  const std::size_t a = block.user_in_total(), j = block.jammer_total();
  if (c.states.front().dim() != a || c.povm.front().dim() != block.out_total()) {
    throw ShapeError("code dimensions do not match the channel");
  }
  const auto bo = static_cast<Eigen::Index>(block.out_total());
  const CMatrix id_j = CMatrix::Identity(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j));
  CMatrix e = CMatrix::Zero(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j));
  for (std::size_t m = 0; m < c.messages(); ++m) {
    const CMatrix heis = adjoint_apply_matrix(block, CMatrix::Identity(bo, bo) - c.povm[m].matrix());
    e += partial_trace(kron(c.states[m].matrix(), id_j) * heis, {a, j}, {1});
  }
  e /= static_cast<double>(c.messages());
  return {j, hermitize(e)};
}

/// G = tr_{RL} (Φ_L ⊗ 1)((id ⊗ E*∘N*^{⊗ℓ}∘D*)(1 − Φ_L)).
inline ErrorObservable infidelity_observable(const QuantumCode& q, const Channel& n) {
  const Channel block = detail::block_channel(n, q.ell);
  const Channel t = detail::coded_channel(q, block);
  const Channel full = tensor(identity_channel({q.L}), t);
  const std::size_t j = block.jammer_total();
  const auto ll = static_cast<Eigen::Index>(q.L * q.L);
  const CMatrix phi = max_entangled(q.L).matrix();
  const CMatrix heis = adjoint_apply_matrix(full, CMatrix::Identity(ll, ll) - phi);
  const CMatrix id_j = CMatrix::Identity(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j));
  const CMatrix g = partial_trace(kron(phi, id_j) * heis, {q.L * q.L, j}, {1});
  return {j, hermitize(g)};
}

inline ErrorObservable observable(const ClassicalCode& c, const Channel& n) {
  return error_observable(c, n);
}
inline ErrorObservable observable(const QuantumCode& q, const Channel& n) {
  return infidelity_observable(q, n);
}
inline double code_error(const ClassicalCode& c, const Channel& n, const CMatrix& zeta) {
  return p_err(c, n, zeta);
}
inline double code_error(const QuantumCode& q, const Channel& n, const CMatrix& zeta) {
  return infidelity(q, n, zeta);
}

inline std::size_t block_length_of(const ClassicalCode& c) { return c.ell; }
inline std::size_t block_length_of(const QuantumCode& q) { return q.ell; }

/// Ē = Σ_λ w_λ E_λ from precomputed per-variant observables.
inline CMatrix mixed_observable(const std::vector<double>& weights,
                                const std::vector<ErrorObservable>& obs) {
  CMatrix acc = CMatrix::Zero(obs.front().matrix.rows(), obs.front().matrix.cols());
  for (std::size_t i = 0; i < obs.size(); ++i) acc += weights[i] * obs[i].matrix;
  return acc;
}

template <class Code>
std::vector<ErrorObservable> variant_observables(const RandomCode<Code>& rc, const Channel& n) {
  if (rc.variants.empty()) throw DomainError("random code has no variants");
  const Channel block = detail::block_channel(n, block_length_of(rc.variants.front()));
  std::vector<ErrorObservable> obs;
  obs.reserve(rc.variants.size());
  for (const auto& v : rc.variants) obs.push_back(observable(v, block));
  return obs;
}

struct WorstCase {
  double value = 0.0;
  DensityOperator witness;
};

inline WorstCase worst_case_from_observable(const CMatrix& mean) {
  const auto es = eig_hermitian(hermitize(mean));
  return {es.values(0), pure_state(es.vectors.col(0))};
}

/// sup_ζ E_λ err(C_λ, ζ) = λ_max(Ē), attained at the top eigenvector.
template <class Code>
WorstCase worst_case_error(const RandomCode<Code>& rc, const Channel& n) {
  rc.validate();
  return worst_case_from_observable(mixed_observable(rc.weights, variant_observables(rc, n)));
}

}  // namespace qavc
