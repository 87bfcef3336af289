#pragma once

// Named qubit QAVCs (|A| = |B| = |J| = 2) with a default classical code
// and, where one exists, the induced classical AVC.

#include "qavc/code.hpp"

#include <algorithm>

namespace qavc {

struct Scenario {
  std::string name;
  std::string description;
  JammerFamily family;
  std::optional<ClassicalAvc> classical;  // set when the channel is this AVC embedded, w[s][x][y]
  std::optional<DensityOperator> zeta;    // distinguished jammer state on J^ℓ
  std::size_t ell = 3;
};

namespace detail {

inline CMatrix pauli_x() {
  CMatrix m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}

inline CMatrix pauli_z() {
  CMatrix m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}

inline std::vector<DensityOperator> qubit_basis() { return {basis_state(2, 0), basis_state(2, 1)}; }

inline ClassicalAvc bsc_avc(const std::vector<double>& flips) {
  ClassicalAvc w;
  for (double p : flips) w.push_back({{1.0 - p, p}, {p, 1.0 - p}});
  return w;
}

/// (|0…0⟩ + |1…1⟩)/√2 on ℓ qubits.
inline DensityOperator ghz_state(std::size_t ell) {
  const std::size_t d = std::size_t{1} << ell;
  CVector v = CVector::Zero(static_cast<Eigen::Index>(d));
  v(0) = 1.0;
  v(static_cast<Eigen::Index>(d - 1)) = 1.0;
  return pure_state(v);
}

}  // namespace detail

/// The jammer qubit controls a bit flip on the sender qubit.
inline Channel bitflip_jammer_channel() { return jammer_controlled_unitary(detail::pauli_x()); }
/// The jammer qubit controls a phase flip on the sender qubit.
inline Channel dephasing_jammer_channel() { return jammer_controlled_unitary(detail::pauli_z()); }

inline std::vector<std::string> list_scenarios() {
  std::vector<std::string> names{"bitflip-jammer", "bsc-family",      "dephasing-jammer",
                                 "depolarizing",   "ghz-jammer-test", "jammer-ignoring"};
  std::sort(names.begin(), names.end());
  return names;
}

inline Scenario make_scenario(const std::string& name) {
  Scenario s;
  s.name = name;
  if (name == "bitflip-jammer" || name == "ghz-jammer-test") {
    s.family = {bitflip_jammer_channel(), detail::qubit_basis()};
    if (name == "ghz-jammer-test") {
      s.description = "bit-flip jammer facing a GHZ-entangled jammer state on J^3";
      s.zeta = detail::ghz_state(3);
    } else {
      s.description = "jammer qubit controls X on the sender qubit";
    }
  } else if (name == "bsc-family") {
    s.description = "embedded classical AVC {BSC(0.1), BSC(0.2)}";
    s.classical = detail::bsc_avc({0.1, 0.2});
    s.family = {embed_classical_avc(*s.classical), detail::qubit_basis()};
  } else if (name == "dephasing-jammer") {
    s.description = "jammer qubit controls Z on the sender qubit";
    s.family = {dephasing_jammer_channel(), detail::qubit_basis()};
  } else if (name == "depolarizing") {
    s.description = "fully depolarizing channel, jammer input ignored";
    s.family = {fully_depolarizing({2, 2}, {2}, 1), std::nullopt};
  } else if (name == "jammer-ignoring") {
    s.description = "identity on A, jammer input ignored";
    s.family = {ignore_jammer(identity_channel({2}), 2), std::nullopt};
  } else {
    throw DomainError(detail::concat("unknown scenario '", name, "'"));
  }
  return s;
}

/// Two-codeword repetition code 0^ℓ, 1^ℓ. The decoder reads the first
/// output qubit softly: D_0 = ½·|0⟩⟨0|_1 ⊗ 1 + ¼·1, D_1 = 1 − D_0.
inline ClassicalCode soft_repetition_code(std::size_t ell) {
  const std::size_t d = std::size_t{1} << ell;
  ClassicalCode c{ell, 2, 2, {basis_state(d, 0), basis_state(d, d - 1)}, {}};
  CMatrix d0 = CMatrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (std::size_t y = 0; y < d; ++y) {
    const bool first_zero = ((y >> (ell - 1)) & 1u) == 0;
    d0(static_cast<Eigen::Index>(y), static_cast<Eigen::Index>(y)) = (first_zero ? 0.5 : 0.0) + 0.25;
  }
  c.povm.emplace_back(d0);
  c.povm.emplace_back(CMatrix(CMatrix::Identity(d0.rows(), d0.cols()) - d0));
  return c;
}

/// Computational-basis code on A^ℓ with the matching projective decoder.
inline ClassicalCode basis_code(std::size_t ell, std::size_t messages = 2) {
  const std::size_t d = std::size_t{1} << ell;
  if (messages > d) throw DomainError("basis_code: more messages than basis states");
  ClassicalCode c{ell, 2, 2, {}, {}};
  const auto di = static_cast<Eigen::Index>(d);
  CMatrix rest = CMatrix::Identity(di, di);
  for (std::size_t m = 0; m < messages; ++m) {
    c.states.push_back(basis_state(d, m));
    CMatrix p = CMatrix::Zero(di, di);
    p(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m)) = 1.0;
    rest -= p;
    if (m + 1 == messages) p += rest;
    c.povm.emplace_back(p);
  }
  return c;
}

/// Encodes a qubit into the first of ℓ qubits (others |0⟩) and decodes by
/// discarding all but the first output qubit.
inline QuantumCode first_qubit_code(std::size_t ell) {
  const std::size_t d = std::size_t{1} << ell;
  const auto di = static_cast<Eigen::Index>(d), half = di / 2;
  CMatrix v = CMatrix::Zero(di, 2);
  v(0, 0) = 1.0;
  v(half, 1) = 1.0;
  std::vector<CMatrix> dec;
  for (Eigen::Index r = 0; r < half; ++r) {
    CMatrix k = CMatrix::Zero(2, di);
    k(0, r) = 1.0;
    k(1, half + r) = 1.0;
    dec.push_back(k);
  }
  return QuantumCode{ell, 2, Channel({2}, Dims(ell, 2), {v}), Channel(Dims(ell, 2), {2}, dec)};
}

/// Random mixed message states on A^ℓ and a random M-outcome POVM on B^ℓ.
inline ClassicalCode random_classical_code(std::size_t ell, std::size_t a, std::size_t b, std::size_t messages,
                                           Rng& rng) {
  std::size_t da = 1, db = 1;
  for (std::size_t i = 0; i < ell; ++i) {
    da *= a;
    db *= b;
  }
  ClassicalCode c{ell, a, b, {}, random_povm(db, messages, rng)};
  for (std::size_t m = 0; m < messages; ++m) c.states.push_back(random_density(da, rng));
  return c;
}

/// Random encoder C^L → A^ℓ and decoder B^ℓ → C^L.
inline QuantumCode random_quantum_code(std::size_t ell, std::size_t L, std::size_t a, std::size_t b, Rng& rng) {
  const std::size_t db = dims_product(Dims(ell, b));
  const std::size_t dec_kraus = std::max<std::size_t>(2, (db + L - 1) / L);
  return QuantumCode{ell, L, random_channel({L}, Dims(ell, a), 2, rng),
                     random_channel(Dims(ell, b), {L}, dec_kraus, rng)};
}

}  // namespace qavc
