#pragma once

// Completely positive trace-preserving maps in Kraus form with factored
// input and output spaces. A QAVC is a channel whose trailing input factors
// are fed by the jammer.

#include "qavc/qmath.hpp"
#include "qavc/sampling.hpp"

#include <optional>

namespace qavc {

class Channel {
 public:
  Channel() = default;

  /// Validates shapes and trace preservation: ‖Σ K†K − 1‖_F ≤ tp_tolerance.
  Channel(Dims in_dims, Dims out_dims, std::vector<CMatrix> kraus, std::size_t jammer_factors = 0,
          std::size_t block_length = 1, double tp_tolerance = tol::trace_preserving)
      : in_dims_(std::move(in_dims)),
        out_dims_(std::move(out_dims)),
        kraus_(std::move(kraus)),
        jammer_factors_(jammer_factors),
        block_length_(block_length) {
    if (in_dims_.empty() || out_dims_.empty()) throw ShapeError("channel needs input and output factors");
    for (auto d : in_dims_) {
      if (d == 0) throw ShapeError("channel input factor of dimension 0");
    }
    for (auto d : out_dims_) {
      if (d == 0) throw ShapeError("channel output factor of dimension 0");
    }
    if (jammer_factors_ > in_dims_.size()) throw ShapeError("more jammer factors than input factors");
    if (block_length_ == 0) throw ShapeError("block length must be positive");
    if (kraus_.empty()) throw DomainError("channel has no Kraus operators");
    const auto in = static_cast<Eigen::Index>(in_total());
    const auto out = static_cast<Eigen::Index>(out_total());
    for (const auto& k : kraus_) {
      if (k.rows() != out || k.cols() != in) {
        throw ShapeError(detail::concat("Kraus operator is ", k.rows(), "x", k.cols(), ", expected ",
                                        out, "x", in));
      }
      if (!detail::all_finite(k)) throw DomainError("Kraus operator has non-finite entries");
    }
    const double res = tp_residual();
    if (res > tp_tolerance) {
      throw DomainError(detail::concat("channel is not trace preserving: ||sum K^dag K - 1|| residual = ",
                                       res));
    }
  }

  [[nodiscard]] const Dims& in_dims() const { return in_dims_; }
  [[nodiscard]] const Dims& out_dims() const { return out_dims_; }
  [[nodiscard]] const std::vector<CMatrix>& kraus() const { return kraus_; }
  [[nodiscard]] std::size_t in_total() const { return dims_product(in_dims_); }
  [[nodiscard]] std::size_t out_total() const { return dims_product(out_dims_); }
  [[nodiscard]] std::size_t jammer_factors() const { return jammer_factors_; }
  [[nodiscard]] std::size_t block_length() const { return block_length_; }

  /// Product of the sender-side (non-jammer) input factors.
  [[nodiscard]] std::size_t user_in_total() const {
    return dims_product(Dims(in_dims_.begin(), in_dims_.end() - static_cast<long>(jammer_factors_)));
  }
  [[nodiscard]] std::size_t jammer_total() const {
    return dims_product(Dims(in_dims_.end() - static_cast<long>(jammer_factors_), in_dims_.end()));
  }

  [[nodiscard]] double tp_residual() const {
    const auto in = static_cast<Eigen::Index>(in_total());
    CMatrix s = CMatrix::Zero(in, in);
    for (const auto& k : kraus_) s += k.adjoint() * k;
    return (s - CMatrix::Identity(in, in)).norm();
  }

 private:
  Dims in_dims_;
  Dims out_dims_;
  std::vector<CMatrix> kraus_;
  std::size_t jammer_factors_ = 0;
  std::size_t block_length_ = 1;
};

/// A QAVC together with an optional finite set S of classical jammer states.
struct JammerFamily {
  Channel base;
  std::optional<std::vector<DensityOperator>> classical_states;
};

// ---------------------------------------------------------------------------
// Action

inline CMatrix apply_matrix(const Channel& n, const CMatrix& rho) {
  if (static_cast<std::size_t>(rho.rows()) != n.in_total() || rho.rows() != rho.cols()) {
    throw ShapeError(detail::concat("apply: input is ", rho.rows(), "x", rho.cols(),
                                    ", channel expects dimension ", n.in_total()));
  }
  const auto out = static_cast<Eigen::Index>(n.out_total());
  CMatrix acc = CMatrix::Zero(out, out);
  for (const auto& k : n.kraus()) acc.noalias() += k * rho * k.adjoint();
  return acc;
}

inline DensityOperator apply(const Channel& n, const DensityOperator& rho) {
  return DensityOperator(apply_matrix(n, rho.matrix()), 1e-9);
}

/// Heisenberg picture: N*(X) = Σ K† X K.
inline CMatrix adjoint_apply_matrix(const Channel& n, const CMatrix& x) {
  if (static_cast<std::size_t>(x.rows()) != n.out_total() || x.rows() != x.cols()) {
    throw ShapeError(detail::concat("adjoint_apply: operator is ", x.rows(), "x", x.cols(),
                                    ", channel output dimension is ", n.out_total()));
  }
  const auto in = static_cast<Eigen::Index>(n.in_total());
  CMatrix acc = CMatrix::Zero(in, in);
  for (const auto& k : n.kraus()) acc.noalias() += k.adjoint() * x * k;
  return acc;
}

inline PovmElement adjoint_apply(const Channel& n, const PovmElement& x) {
  return PovmElement(adjoint_apply_matrix(n, x.matrix()), 1e-9);
}

// ---------------------------------------------------------------------------
// Constructors

inline Channel identity_channel(const Dims& dims) {
  const auto d = static_cast<Eigen::Index>(dims_product(dims));
  return Channel(dims, dims, {CMatrix::Identity(d, d)});
}

inline Channel unitary_channel(const CMatrix& u, const Dims& dims) {
  return Channel(dims, dims, {u});
}

/// ρ ↦ tr(ρ)·1/|out|.
inline Channel fully_depolarizing(const Dims& in_dims, const Dims& out_dims,
                                  std::size_t jammer_factors = 0) {
  const auto in = static_cast<Eigen::Index>(dims_product(in_dims));
  const auto out = static_cast<Eigen::Index>(dims_product(out_dims));
  std::vector<CMatrix> ks;
  const double s = 1.0 / std::sqrt(static_cast<double>(out));
  for (Eigen::Index b = 0; b < out; ++b) {
    for (Eigen::Index a = 0; a < in; ++a) {
      CMatrix k = CMatrix::Zero(out, in);
      k(b, a) = s;
      ks.push_back(std::move(k));
    }
  }
  return Channel(in_dims, out_dims, std::move(ks), jammer_factors);
}

/// Composition outer ∘ inner.
inline Channel compose(const Channel& outer, const Channel& inner) {
  if (outer.in_total() != inner.out_total()) {
    throw ShapeError(detail::concat("compose: outer input ", outer.in_total(), " != inner output ",
                                    inner.out_total()));
  }
  std::vector<CMatrix> ks;
  ks.reserve(outer.kraus().size() * inner.kraus().size());
  for (const auto& ko : outer.kraus()) {
    for (const auto& ki : inner.kraus()) ks.push_back(ko * ki);
  }
  return Channel(inner.in_dims(), outer.out_dims(), std::move(ks), inner.jammer_factors(),
                 inner.block_length());
}

/// a ⊗ b; jammer factors of b remain trailing, a must carry none.
inline Channel tensor(const Channel& a, const Channel& b, std::size_t cap = kDefaultEntryCap) {
  if (a.jammer_factors() != 0) throw ShapeError("tensor: left factor must not carry jammer inputs");
  Dims in = a.in_dims();
  in.insert(in.end(), b.in_dims().begin(), b.in_dims().end());
  Dims out = a.out_dims();
  out.insert(out.end(), b.out_dims().begin(), b.out_dims().end());
  std::vector<CMatrix> ks;
  for (const auto& ka : a.kraus()) {
    for (const auto& kb : b.kraus()) ks.push_back(kron(ka, kb, cap));
  }
  return Channel(std::move(in), std::move(out), std::move(ks), b.jammer_factors());
}

/// Unnormalised Choi matrix Σ_ij |i⟩⟨j| ⊗ N(|i⟩⟨j|), reference factor first.
inline CMatrix choi_matrix(const Channel& n) {
  const auto din = static_cast<Eigen::Index>(n.in_total());
  const auto dout = static_cast<Eigen::Index>(n.out_total());
  CMatrix j = CMatrix::Zero(din * dout, din * dout);
  CVector v(din * dout);
  for (const auto& k : n.kraus()) {
    for (Eigen::Index i = 0; i < din; ++i) v.segment(i * dout, dout) = k.col(i);
    j.noalias() += v * v.adjoint();
  }
  return j;
}

/// Choi state (id ⊗ N)(Φ_in).
inline CMatrix choi_state(const Channel& n) {
  return choi_matrix(n) / static_cast<double>(n.in_total());
}

/// Minimal Kraus representation recovered from the Choi matrix.
inline Channel compress_kraus(const Channel& n) {
  const auto din = static_cast<Eigen::Index>(n.in_total());
  const auto dout = static_cast<Eigen::Index>(n.out_total());
  if (n.kraus().size() <= 1) return n;
  const auto es = eig_hermitian(choi_matrix(n));
  const double cutoff = 1e-13 * std::max(1.0, es.values(0));
  std::vector<CMatrix> ks;
  for (Eigen::Index c = 0; c < es.values.size(); ++c) {
    if (es.values(c) <= cutoff) break;
    const CVector v = std::sqrt(es.values(c)) * es.vectors.col(c);
    CMatrix k(dout, din);
    for (Eigen::Index i = 0; i < din; ++i) k.col(i) = v.segment(i * dout, dout);
    ks.push_back(std::move(k));
  }
  if (ks.size() >= n.kraus().size()) return n;
  return Channel(n.in_dims(), n.out_dims(), std::move(ks), n.jammer_factors(), n.block_length());
}

/// ℓ-fold tensor power. Input factors are regrouped by factor index: a
/// channel on (A, J) yields input order (A_1..A_ℓ, J_1..J_ℓ) rather than
/// the interleaved (A_1 J_1 .. A_ℓ J_ℓ); outputs are regrouped likewise.
inline Channel tensor_power(const Channel& n, std::size_t ell, std::size_t cap = kDefaultEntryCap) {
  if (ell == 0) throw DomainError("tensor_power: block length must be at least 1");
  if (ell == 1) return n;
  std::size_t in_total = 1, out_total = 1, count = 1;
  for (std::size_t i = 0; i < ell; ++i) {
    in_total *= n.in_total();
    out_total *= n.out_total();
    count *= n.kraus().size();
    check_entry_cap(out_total, in_total, cap);
    if (count > cap) throw SizeError("tensor_power: Kraus count exceeds cap");
  }

  auto grouped = [ell](const Dims& dims) {
    const std::size_t k = dims.size();
    Dims naive, sorted;
    std::vector<std::size_t> order;  // new position p holds naive factor order[p]
    for (std::size_t c = 0; c < ell; ++c) naive.insert(naive.end(), dims.begin(), dims.end());
    for (std::size_t f = 0; f < k; ++f) {
      for (std::size_t c = 0; c < ell; ++c) {
        order.push_back(c * k + f);
        sorted.push_back(dims[f]);
      }
    }
    return std::tuple{naive, sorted, order};
  };
  const auto [in_naive, in_sorted, in_order] = grouped(n.in_dims());
  const auto [out_naive, out_sorted, out_order] = grouped(n.out_dims());
  const auto in_map = factor_reorder_index(in_naive, in_order);
  const auto out_map = factor_reorder_index(out_naive, out_order);

  std::vector<CMatrix> ks{CMatrix::Ones(1, 1)};
  for (std::size_t c = 0; c < ell; ++c) {
    std::vector<CMatrix> next;
    next.reserve(ks.size() * n.kraus().size());
    for (const auto& a : ks) {
      for (const auto& b : n.kraus()) next.push_back(kron(a, b, cap));
    }
    ks = std::move(next);
  }
  for (auto& k : ks) {
    CMatrix r(k.rows(), k.cols());
    for (Eigen::Index j = 0; j < k.cols(); ++j) {
      for (Eigen::Index i = 0; i < k.rows(); ++i) {
        r(static_cast<Eigen::Index>(out_map[i]), static_cast<Eigen::Index>(in_map[j])) = k(i, j);
      }
    }
    k = std::move(r);
  }
  return Channel(in_sorted, out_sorted, std::move(ks), n.jammer_factors() * ell,
                 n.block_length() * ell);
}

/// N_σ(ρ) = N(ρ ⊗ σ). The eigen-decomposition σ = Σ p_k |v_k⟩⟨v_k| is
/// absorbed into the Kraus operators √p_k K (1 ⊗ |v_k⟩).
inline Channel fix_jammer(const Channel& n, const DensityOperator& sigma) {
  if (n.jammer_factors() == 0) throw ShapeError("fix_jammer: channel has no jammer input");
  if (sigma.dim() != n.jammer_total()) {
    throw ShapeError(detail::concat("fix_jammer: jammer state has dimension ", sigma.dim(),
                                    ", channel jammer input is ", n.jammer_total()));
  }
  const auto a = static_cast<Eigen::Index>(n.user_in_total());
  const auto es = eig_hermitian(sigma.matrix());
  const CMatrix id = CMatrix::Identity(a, a);
  std::vector<CMatrix> ks;
  for (Eigen::Index c = 0; c < es.values.size(); ++c) {
    const double p = es.values(c);
    if (p <= 1e-15) continue;
    const CMatrix lift = std::sqrt(p) * kron(id, CMatrix(es.vectors.col(c)));
    for (const auto& k : n.kraus()) ks.push_back(k * lift);
  }
  const Dims user(n.in_dims().begin(), n.in_dims().end() - static_cast<long>(n.jammer_factors()));
  // Eigenvalues are clipped at zero, so trace preservation holds to eigen accuracy.
  return Channel(user, n.out_dims(), std::move(ks), 0, n.block_length(), 1e-8);
}

/// ρ⊗σ ↦ Σ_s ⟨s|σ|s⟩ U_s ρ U_s† for a two-valued control: the jammer
/// qubit controls `u` on the sender system and is then discarded.
inline Channel jammer_controlled_unitary(const CMatrix& u) {
  const auto a = u.rows();
  const CMatrix id = CMatrix::Identity(a, a);
  CMatrix bra0(1, 2), bra1(1, 2);
  bra0 << 1, 0;
  bra1 << 0, 1;
  return Channel({static_cast<std::size_t>(a), 2}, {static_cast<std::size_t>(a)},
                 {kron(id, bra0), kron(u, bra1)}, 1);
}

/// Applies `inner` to the sender system and discards the jammer input.
inline Channel ignore_jammer(const Channel& inner, std::size_t jdim) {
  if (inner.jammer_factors() != 0) throw ShapeError("ignore_jammer: inner channel already has a jammer");
  std::vector<CMatrix> ks;
  const auto j = static_cast<Eigen::Index>(jdim);
  for (const auto& k : inner.kraus()) {
    for (Eigen::Index s = 0; s < j; ++s) {
      CMatrix bra = CMatrix::Zero(1, j);
      bra(0, s) = 1.0;
      ks.push_back(kron(k, bra));
    }
  }
  Dims in = inner.in_dims();
  in.push_back(jdim);
  return Channel(std::move(in), inner.out_dims(), std::move(ks), 1);
}

/// Transition probabilities N(y|x,s) stored as w[s][x][y].
using ClassicalAvc = std::vector<std::vector<std::vector<double>>>;

inline void validate_classical_avc(const ClassicalAvc& w) {
  if (w.empty() || w.front().empty() || w.front().front().empty()) {
    throw DomainError("classical AVC: empty alphabet");
  }
  const std::size_t nx = w.front().size(), ny = w.front().front().size();
  for (const auto& ws : w) {
    if (ws.size() != nx) throw DomainError("classical AVC: ragged input alphabet");
    for (const auto& row : ws) {
      if (row.size() != ny) throw DomainError("classical AVC: ragged output alphabet");
      double total = 0.0;
      for (double p : row) {
        if (!(p >= 0.0)) throw DomainError("classical AVC: negative transition probability");
        total += p;
      }
      if (std::abs(total - 1.0) > 1e-12) {
        throw DomainError(detail::concat("classical AVC: row sums to ", total));
      }
    }
  }
}

/// Classical AVC as a QAVC: inputs (x, s) are dephased in the computational
/// basis and mapped to |y⟩ with probability N(y|x,s).
inline Channel embed_classical_avc(const ClassicalAvc& w) {
  validate_classical_avc(w);
  const std::size_t ns = w.size(), nx = w.front().size(), ny = w.front().front().size();
  std::vector<CMatrix> ks;
  for (std::size_t s = 0; s < ns; ++s) {
    for (std::size_t x = 0; x < nx; ++x) {
      for (std::size_t y = 0; y < ny; ++y) {
        const double p = w[s][x][y];
        if (p == 0.0) continue;
        CMatrix k = CMatrix::Zero(static_cast<Eigen::Index>(ny), static_cast<Eigen::Index>(nx * ns));
        k(static_cast<Eigen::Index>(y), static_cast<Eigen::Index>(x * ns + s)) = std::sqrt(p);
        ks.push_back(std::move(k));
      }
    }
  }
  return Channel({nx, ns}, {ny}, std::move(ks), 1);
}

/// Random channel from a Haar isometry into out ⊗ environment.
inline Channel random_channel(const Dims& in_dims, const Dims& out_dims, std::size_t kraus_count,
                              Rng& rng, std::size_t jammer_factors = 0) {
  const std::size_t in = dims_product(in_dims), out = dims_product(out_dims);
  if (out * kraus_count < in) throw ShapeError("random_channel: too few Kraus operators");
  const CMatrix v = random_isometry(out * kraus_count, in, rng);
  std::vector<CMatrix> ks;
  for (std::size_t k = 0; k < kraus_count; ++k) {
    ks.push_back(v.block(static_cast<Eigen::Index>(k * out), 0, static_cast<Eigen::Index>(out),
                         static_cast<Eigen::Index>(in)));
  }
  return Channel(in_dims, out_dims, std::move(ks), jammer_factors);
}

/// Γ(σ) = (id_A ⊗ N)(Φ^{AA'} ⊗ σ): maps jammer states to Choi states of N_σ.
/// Output factors are (A, B...).
inline Channel choi_channel(const Channel& n) {
  if (n.jammer_factors() == 0) throw ShapeError("choi_channel: channel has no jammer input");
  const auto a = static_cast<Eigen::Index>(n.user_in_total());
  const auto j = static_cast<Eigen::Index>(n.jammer_total());
  const CVector phi = max_entangled_vector(static_cast<std::size_t>(a));
  // V|s⟩ = |Φ⟩_{AA'} ⊗ |s⟩
  const CMatrix v = kron(CMatrix(phi), CMatrix::Identity(j, j));
  const CMatrix id_a = CMatrix::Identity(a, a);
  std::vector<CMatrix> ks;
  for (const auto& k : n.kraus()) ks.push_back(kron(id_a, k) * v);
  Dims out{static_cast<std::size_t>(a)};
  out.insert(out.end(), n.out_dims().begin(), n.out_dims().end());
  const Dims jd(n.in_dims().end() - static_cast<long>(n.jammer_factors()), n.in_dims().end());
  return Channel(jd, std::move(out), std::move(ks));
}

// ---------------------------------------------------------------------------
// Diamond distance

/// Certified bracket of ½‖N₁ − N₂‖_◊.
struct DiamondInterval {
  double lower = 0.0;
  double upper = 0.0;
  double gap_target = 1e-6;

  [[nodiscard]] bool converged() const { return upper - lower <= gap_target; }
  [[nodiscard]] double value() const { return 0.5 * (lower + upper); }
};

struct DiamondOptions {
  std::size_t restarts = 8;
  std::size_t max_iters = 300;
  std::uint64_t seed = 0xd1a3;
  double gap_target = 1e-6;
};

namespace detail {

/// ½ λ_max( W^{-1/2} tr_out|K| W^{-1/2} ) with K = (√ρ ⊗ 1) J (√ρ ⊗ 1),
/// a feasible point of the dual program for any positive ρ on the reference.
inline double diamond_dual_bound(const CMatrix& j, std::size_t din, std::size_t dout,
                                 const CMatrix* ref_state) {
  const Dims dims{din, dout};
  if (ref_state == nullptr) {
    const CMatrix abs_j = matrix_function(j, [](double x) { return std::abs(x); });
    return 0.5 * max_eigenvalue(hermitize(partial_trace(abs_j, dims, {0})));
  }
  const auto d = static_cast<Eigen::Index>(din);
  const CMatrix reg = hermitize(*ref_state + 1e-7 * CMatrix::Identity(d, d));
  const CMatrix sq = matrix_function(reg, [](double x) { return std::sqrt(x); });
  const CMatrix isq = matrix_function(reg, [](double x) { return 1.0 / std::sqrt(x); });
  const CMatrix lift = kron(sq, CMatrix::Identity(static_cast<Eigen::Index>(dout),
                                                  static_cast<Eigen::Index>(dout)));
  const CMatrix k = hermitize(lift * j * lift);
  const CMatrix abs_k = matrix_function(k, [](double x) { return std::abs(x); });
  const CMatrix red = hermitize(isq * partial_trace(abs_k, dims, {0}) * isq);
  return 0.5 * max_eigenvalue(red);
}

/// B = (id ⊗ Δ*)(S) evaluated from the Choi matrix of Δ:
/// B[(r,i),(r',i')] = Σ_{o,o'} S[(r,o),(r',o')] · J[(i',o'),(i,o)].
inline CMatrix adjoint_on_reference(const CMatrix& s, const CMatrix& j, Eigen::Index din,
                                    Eigen::Index dout) {
  CMatrix b = CMatrix::Zero(din * din, din * din);
  for (Eigen::Index r = 0; r < din; ++r) {
    for (Eigen::Index rp = 0; rp < din; ++rp) {
      const CMatrix s_blk = s.block(r * dout, rp * dout, dout, dout);
      for (Eigen::Index i = 0; i < din; ++i) {
        for (Eigen::Index ip = 0; ip < din; ++ip) {
          const auto j_blk = j.block(ip * dout, i * dout, dout, dout);
          // Σ_{o,o'} s_blk(o,o') j_blk(o',o) = tr(s_blk · j_blk)
          b(r * din + i, rp * din + ip) = (s_blk.cwiseProduct(j_blk.transpose())).sum();
        }
      }
    }
  }
  return b;
}

}  // namespace detail

/// Upper bound on ½‖Δ‖_◊ from the Choi matrix alone.
inline double diamond_upper_bound(const CMatrix& choi_difference, std::size_t din, std::size_t dout) {
  return detail::diamond_dual_bound(choi_difference, din, dout, nullptr);
}

/// Bracket on ½‖N₁ − N₂‖_◊: see-saw ascent over pure inputs with a
/// reference of the input dimension gives the lower end; dual-feasible
/// points built from the best input give the upper end.
inline DiamondInterval diamond_distance(const Channel& n1, const Channel& n2,
                                        const DiamondOptions& opts = {}) {
  if (n1.in_total() != n2.in_total() || n1.out_total() != n2.out_total()) {
    throw ShapeError("diamond_distance: channels have different dimensions");
  }
  const std::size_t din = n1.in_total(), dout = n1.out_total();
  const auto di = static_cast<Eigen::Index>(din), dO = static_cast<Eigen::Index>(dout);
  const CMatrix j = hermitize(choi_matrix(n1) - choi_matrix(n2));
  DiamondInterval result{0.0, diamond_upper_bound(j, din, dout), opts.gap_target};
  if (result.upper <= opts.gap_target) {
    result.upper = std::max(result.upper, 0.0);
    return result;
  }
  const CMatrix id_out = CMatrix::Identity(dO, dO);

  auto evaluate = [&](const CVector& psi, CMatrix* sign) {
    CMatrix x(di, di);
    for (Eigen::Index r = 0; r < di; ++r) {
      for (Eigen::Index i = 0; i < di; ++i) x(r, i) = psi(r * di + i);
    }
    const CMatrix lift = kron(x, id_out);
    const auto es = eig_hermitian(hermitize(lift * j * lift.adjoint()));
    if (sign != nullptr) {
      RVector sg = es.values.unaryExpr([](double v) { return v >= 0 ? 1.0 : -1.0; });
      *sign = es.vectors * sg.cast<cplx>().asDiagonal() * es.vectors.adjoint();
    }
    return std::pair{0.5 * es.values.cwiseAbs().sum(), CMatrix(x.adjoint() * x)};
  };

  Rng rng(opts.seed);
  CVector best_psi;
  for (std::size_t restart = 0; restart <= opts.restarts; ++restart) {
    CVector psi = restart == 0 ? max_entangled_vector(din) : random_unit_vector(din * din, rng);
    CMatrix sign;
    double value = evaluate(psi, &sign).first;
    for (std::size_t it = 0; it < opts.max_iters; ++it) {
      const CMatrix b = hermitize(detail::adjoint_on_reference(sign, j, di, dO));
      psi = eig_hermitian(b).vectors.col(0);
      const double next = evaluate(psi, &sign).first;
      const bool stalled = next - value <= 1e-13 * std::max(1.0, value);
      value = std::max(value, next);
      if (stalled) break;
    }
    if (value > result.lower) {
      result.lower = value;
      best_psi = psi;
    }
    const CMatrix ref = evaluate(best_psi, nullptr).second;
    result.upper = std::min(result.upper, detail::diamond_dual_bound(j, din, dout, &ref));
    if (result.converged()) break;
  }
  result.upper = std::max(result.upper, result.lower);
  return result;
}

}  // namespace qavc
