#pragma once

// Finite-ℓ maximin estimates for the compound channel {N_σ}: Holevo
// information maximised over input ensembles and coherent information over
// pure inputs, each minimised over jammer states σ on J. All entropies are
// in bits. A classical Blahut–Arimoto oracle gives independent ground truth
// for embedded classical AVCs.

#include "qavc/channel.hpp"

#include <functional>
#include <optional>
#include <variant>

namespace qavc {

struct Ensemble {
  std::vector<double> probs;
  std::vector<DensityOperator> states;

  void validate() const {
    if (probs.empty() || probs.size() != states.size()) throw ShapeError("ensemble size mismatch");
    double total = 0.0;
    for (double p : probs) {
      if (!(p >= 0.0)) throw DomainError("ensemble has a negative probability");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-10) throw DomainError(detail::concat("ensemble probabilities sum to ", total));
    for (const auto& s : states) {
      if (s.dim() != states.front().dim()) throw ShapeError("ensemble states differ in dimension");
    }
  }
};

/// Unit vector on R ⊗ A^ℓ, reference first.
struct PureInput {
  CVector vector;
  std::size_t ref_dim = 1;

  [[nodiscard]] std::size_t input_dim() const {
    return static_cast<std::size_t>(vector.size()) / ref_dim;
  }
  void validate() const {
    if (ref_dim == 0 || vector.size() == 0 || static_cast<std::size_t>(vector.size()) % ref_dim != 0) {
      throw ShapeError("pure input dimension is not a multiple of the reference dimension");
    }
    if (std::abs(vector.norm() - 1.0) > 1e-12) throw DomainError("pure input is not a unit vector");
  }
};

/// I(X:B) = S(Σ p_x ω_x) − Σ p_x S(ω_x), ω_x = ch(ρ_x).
inline double holevo_info(const Ensemble& e, const Channel& ch) {
  e.validate();
  if (e.states.front().dim() != ch.in_total()) throw ShapeError("holevo_info: ensemble does not fit channel input");
  const auto dout = static_cast<Eigen::Index>(ch.out_total());
  CMatrix avg = CMatrix::Zero(dout, dout);
  double cond = 0.0;
  for (std::size_t x = 0; x < e.probs.size(); ++x) {
    if (e.probs[x] == 0.0) continue;
    const CMatrix w = hermitize(apply_matrix(ch, e.states[x].matrix()));
    avg += e.probs[x] * w;
    cond += e.probs[x] * entropy_bits(w);
  }
  return entropy_bits(hermitize(avg)) - cond;
}

/// I(R⟩B) = S(Ω_B) − S(Ω_RB), Ω = (id_R ⊗ ch)(φ).
inline double coherent_info(const PureInput& phi, const Channel& ch) {
  phi.validate();
  if (phi.input_dim() != ch.in_total()) throw ShapeError("coherent_info: input does not fit channel");
  const Channel full = tensor(identity_channel({phi.ref_dim}), ch);
  const CMatrix omega = hermitize(apply_matrix(full, phi.vector * phi.vector.adjoint()));
  const CMatrix omega_b = hermitize(partial_trace(omega, {phi.ref_dim, ch.out_total()}, {1}));
  return entropy_bits(omega_b) - entropy_bits(omega);
}

/// All ℓ-fold products of ensemble members.
inline Ensemble tensor_power(const Ensemble& e, std::size_t ell) {
  Ensemble out{{1.0}, {DensityOperator(CMatrix::Ones(1, 1))}};
  for (std::size_t c = 0; c < ell; ++c) {
    Ensemble next;
    for (std::size_t i = 0; i < out.probs.size(); ++i) {
      for (std::size_t x = 0; x < e.probs.size(); ++x) {
        next.probs.push_back(out.probs[i] * e.probs[x]);
        next.states.push_back(tensor(out.states[i], e.states[x]));
      }
    }
    out = std::move(next);
  }
  return out;
}

/// φ^{⊗ℓ} with factors regrouped as (R_1..R_ℓ, A_1..A_ℓ).
inline PureInput tensor_power(const PureInput& phi, std::size_t ell) {
  CVector v = CVector::Ones(1);
  for (std::size_t c = 0; c < ell; ++c) v = kron(v, phi.vector);
  Dims naive;
  std::vector<std::size_t> order;
  for (std::size_t c = 0; c < ell; ++c) {
    naive.push_back(phi.ref_dim);
    naive.push_back(phi.input_dim());
  }
  for (std::size_t c = 0; c < ell; ++c) order.push_back(2 * c);
  for (std::size_t c = 0; c < ell; ++c) order.push_back(2 * c + 1);
  const auto map = factor_reorder_index(naive, order);
  CVector out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(map[i])) = v(i);
  std::size_t r = 1;
  for (std::size_t c = 0; c < ell; ++c) r *= phi.ref_dim;
  return {out, r};
}

struct CapacityConfig {
  std::size_t grid_points = 200;
  std::size_t inner_descents = 3;
  std::size_t restarts = 3;
  std::size_t max_iters = 120;
  std::size_t active_set = 6;
  std::size_t refresh_every = 15;
  double softmin_beta = 400.0;
  std::size_t ensemble_cap = 0;  // 0 selects |A|^ℓ
  std::uint64_t seed = 7;
  std::optional<Ensemble> warm_ensemble;
  std::optional<PureInput> warm_input;
};

struct TraceEntry {
  std::size_t restart = 0;
  std::size_t iteration = 0;
  double value = 0.0;  // certified inner infimum (bits per block) when iteration is a refresh
};

struct CapacityEstimate {
  std::size_t ell = 1;
  double value_bits_per_use = 0.0;  // max(raw, 0) for coherent information
  double raw_bits_per_use = 0.0;
  std::variant<Ensemble, PureInput> argmax;
  DensityOperator arginf;
  double grid_gap = 0.0;  // grid minimum minus refined minimum, bits per block
  std::vector<TraceEntry> trace;
};

struct InnerInfimum {
  double value = 0.0;
  DensityOperator sigma;
  double grid_min = 0.0;
  std::vector<std::pair<double, std::size_t>> ranked;  // (value, grid index), ascending
};

/// inf over σ ∈ S(J) of objective(σ): grid scan plus local descent from the
/// lowest grid points.
inline InnerInfimum inner_infimum(const std::function<double(const DensityOperator&)>& objective,
                                  const std::vector<DensityOperator>& grid, std::size_t descents) {
  InnerInfimum out;
  for (std::size_t i = 0; i < grid.size(); ++i) out.ranked.emplace_back(objective(grid[i]), i);
  std::stable_sort(out.ranked.begin(), out.ranked.end(),
                   [](auto& a, auto& b) { return a.first < b.first; });
  out.grid_min = out.ranked.front().first;
  out.value = out.grid_min;
  out.sigma = grid[out.ranked.front().second];
  auto f = [&](const CMatrix& s) { return objective(DensityOperator(s, 1e-9)); };
  for (std::size_t k = 0; k < std::min(descents, out.ranked.size()); ++k) {
    const auto r = local_state_search(f, grid[out.ranked[k].second], false);
    if (r.value < out.value) {
      out.value = r.value;
      out.sigma = r.state;
    }
  }
  return out;
}

namespace detail {

inline Channel compound_member(const Channel& n, const DensityOperator& sigma, std::size_t ell) {
  return compress_kraus(tensor_power(compress_kraus(fix_jammer(n, sigma)), ell));
}

/// Maximin driver shared by the classical and quantum estimators. `decode`
/// maps a real parameter vector to the outer variable, `objective` scores it
/// against one compound member.
template <class Outer>
CapacityEstimate maximin(const Channel& n, std::size_t ell, const CapacityConfig& cfg,
                         const std::vector<RVector>& starts,
                         const std::function<Outer(const RVector&)>& decode,
                         const std::function<double(const Outer&, const Channel&)>& objective) {
  const auto grid = state_grid(n.jammer_total(), cfg.grid_points);
  CapacityEstimate best;
  best.ell = ell;
  double best_value = -std::numeric_limits<double>::infinity();

  for (std::size_t restart = 0; restart < starts.size(); ++restart) {
    RVector x = starts[restart];
    std::vector<Channel> active;
    auto refresh = [&](std::size_t iter) {
      const Outer outer = decode(x);
      auto inner = inner_infimum(
          [&](const DensityOperator& s) { return objective(outer, compound_member(n, s, ell)); }, grid,
          cfg.inner_descents);
      active.clear();
      active.push_back(compound_member(n, inner.sigma, ell));
      for (std::size_t k = 0; k < std::min(cfg.active_set, inner.ranked.size()); ++k) {
        active.push_back(compound_member(n, grid[inner.ranked[k].second], ell));
      }
      best.trace.push_back({restart, iter, inner.value});
      return inner;
    };
    auto softmin = [&](const RVector& p) {
      const Outer outer = decode(p);
      std::vector<double> vals;
      double lo = std::numeric_limits<double>::infinity();
      for (const auto& ch : active) {
        vals.push_back(objective(outer, ch));
        lo = std::min(lo, vals.back());
      }
      double acc = 0.0;
      for (double v : vals) acc += std::exp(-cfg.softmin_beta * (v - lo));
      return lo - std::log(acc) / cfg.softmin_beta;
    };

    auto inner = refresh(0);
    double cur = softmin(x);
    double step = 0.2;
    for (std::size_t it = 1; it <= cfg.max_iters; ++it) {
      RVector grad(x.size());
      const double h = 1e-6;
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        RVector xp = x, xm = x;
        xp(i) += h;
        xm(i) -= h;
        grad(i) = (softmin(xp) - softmin(xm)) / (2 * h);
      }
      const double gn = grad.norm();
      if (gn < 1e-9) break;
      bool moved = false;
      while (step > 1e-8) {
        const RVector cand = x + (step / gn) * grad;
        const double v = softmin(cand);
        if (v > cur + 1e-12) {
          x = cand;
          cur = v;
          moved = true;
          step = std::min(1.0, step * 1.5);
          break;
        }
        step *= 0.5;
      }
      if (!moved) break;
      if (it % cfg.refresh_every == 0) {
        inner = refresh(it);
        cur = softmin(x);
      }
    }
    inner = refresh(cfg.max_iters + 1);
    if (inner.value > best_value) {
      best_value = inner.value;
      best.argmax = decode(x);
      best.arginf = inner.sigma;
      best.grid_gap = inner.grid_min - inner.value;
    }
  }
  best.raw_bits_per_use = best_value / static_cast<double>(ell);
  best.value_bits_per_use = best.raw_bits_per_use;
  return best;
}

inline CVector unit_from(const RVector& x, Eigen::Index offset, Eigen::Index d) {
  CVector v(d);
  for (Eigen::Index i = 0; i < d; ++i) v(i) = cplx(x(offset + 2 * i), x(offset + 2 * i + 1));
  const double nv = v.norm();
  if (nv < 1e-300) {
    v.setZero();
    v(0) = 1.0;
    return v;
  }
  return v / nv;
}

inline void write_vector(RVector& x, Eigen::Index offset, const CVector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    x(offset + 2 * i) = v(i).real();
    x(offset + 2 * i + 1) = v(i).imag();
  }
}

}  // namespace detail

/// (1/ℓ) max over ensembles of inf_σ I(X:B^ℓ) for the compound channel
/// {(N_σ)^{⊗ℓ}}. Ensembles consist of at most `ensemble_cap` pure states.
inline CapacityEstimate estimate_c_rand(const Channel& n, std::size_t ell, const CapacityConfig& cfg = {}) {
  if (n.jammer_factors() == 0) throw ShapeError("estimate_c_rand: channel has no jammer input");
  if (ell == 0) throw DomainError("estimate_c_rand: ell must be positive");
  std::size_t d = 1;
  for (std::size_t i = 0; i < ell; ++i) d *= n.user_in_total();
  check_entry_cap(d * n.out_total(), d * n.out_total());
  const std::size_t m = cfg.ensemble_cap == 0 ? d : cfg.ensemble_cap;
  const auto di = static_cast<Eigen::Index>(d);
  const auto stride = 2 * di + 1;

  auto decode = [=](const RVector& x) {
    Ensemble e;
    double total = 0.0;
    std::vector<double> w(m);
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < m; ++k) hi = std::max(hi, x(static_cast<Eigen::Index>(k) * stride));
    for (std::size_t k = 0; k < m; ++k) {
      w[k] = std::exp(x(static_cast<Eigen::Index>(k) * stride) - hi);
      total += w[k];
    }
    for (std::size_t k = 0; k < m; ++k) {
      e.probs.push_back(w[k] / total);
      e.states.push_back(pure_state(detail::unit_from(x, static_cast<Eigen::Index>(k) * stride + 1, di)));
    }
    return e;
  };

  std::vector<RVector> starts;
  auto encode = [&](const Ensemble& e) {
    if (e.states.size() > m) throw DomainError("warm-start ensemble exceeds the ensemble cap");
    RVector x = RVector::Constant(static_cast<Eigen::Index>(m) * stride, 0.0);
    for (std::size_t k = 0; k < m; ++k) {
      const auto off = static_cast<Eigen::Index>(k) * stride;
      if (k < e.states.size()) {
        x(off) = std::log(std::max(e.probs[k], 1e-12));
        detail::write_vector(x, off + 1, eig_hermitian(e.states[k].matrix()).vectors.col(0));
      } else {
        x(off) = std::log(1e-12);
        CVector v = CVector::Zero(di);
        v(0) = 1.0;
        detail::write_vector(x, off + 1, v);
      }
    }
    return x;
  };
  if (cfg.warm_ensemble) starts.push_back(encode(*cfg.warm_ensemble));
  {
    Ensemble basis;
    for (std::size_t k = 0; k < std::min(m, d); ++k) {
      basis.probs.push_back(1.0 / static_cast<double>(std::min(m, d)));
      basis.states.push_back(basis_state(d, k));
    }
    starts.push_back(encode(basis));
  }
  Rng rng(cfg.seed);
  std::normal_distribution<double> g(0.0, 1.0);
  for (std::size_t r = 0; r < cfg.restarts; ++r) {
    RVector x(static_cast<Eigen::Index>(m) * stride);
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = g(rng);
    starts.push_back(x);
  }
  return detail::maximin<Ensemble>(n, ell, cfg, starts, decode,
                                   [](const Ensemble& e, const Channel& ch) { return holevo_info(e, ch); });
}

/// (1/ℓ) max over pure inputs |φ⟩ on R ⊗ A^ℓ (|R| = |A|^ℓ) of
/// inf_σ I(R⟩B^ℓ). The reported value is clipped at zero; the raw value is kept.
inline CapacityEstimate estimate_q_rand(const Channel& n, std::size_t ell, const CapacityConfig& cfg = {}) {
  if (n.jammer_factors() == 0) throw ShapeError("estimate_q_rand: channel has no jammer input");
  if (ell == 0) throw DomainError("estimate_q_rand: ell must be positive");
  std::size_t d = 1;
  for (std::size_t i = 0; i < ell; ++i) d *= n.user_in_total();
  check_entry_cap(d * d, d * d);
  const auto dd = static_cast<Eigen::Index>(d * d);
  auto decode = [=](const RVector& x) { return PureInput{detail::unit_from(x, 0, dd), d}; };
  std::vector<RVector> starts;
  auto encode = [&](const PureInput& p) {
    RVector x(2 * dd);
    detail::write_vector(x, 0, p.vector);
    return x;
  };
  if (cfg.warm_input) starts.push_back(encode(*cfg.warm_input));
  starts.push_back(encode(PureInput{max_entangled_vector(d), d}));
  Rng rng(cfg.seed);
  for (std::size_t r = 0; r < cfg.restarts; ++r) starts.push_back(encode(PureInput{random_unit_vector(d * d, rng), d}));
  auto est = detail::maximin<PureInput>(
      n, ell, cfg, starts, decode, [](const PureInput& p, const Channel& ch) { return coherent_info(p, ch); });
  est.value_bits_per_use = std::max(est.raw_bits_per_use, 0.0);
  return est;
}

/// Objective of a finished estimate against one jammer state (bits per block).
inline double estimate_objective(const CapacityEstimate& est, const Channel& n, const DensityOperator& sigma) {
  const Channel ch = detail::compound_member(n, sigma, est.ell);
  if (const auto* e = std::get_if<Ensemble>(&est.argmax)) return holevo_info(*e, ch);
  return coherent_info(std::get<PureInput>(est.argmax), ch);
}

// ---------------------------------------------------------------------------
// Classical oracle

/// Channel capacity max_p I(p, W) in bits by Blahut–Arimoto; W[x][y].
inline double blahut_arimoto(const std::vector<std::vector<double>>& w, double tolerance = 1e-12,
                             std::size_t max_iters = 100000) {
  const std::size_t nx = w.size(), ny = w.front().size();
  std::vector<double> p(nx, 1.0 / static_cast<double>(nx)), c(nx), q(ny);
  double lower = 0.0;
  for (std::size_t it = 0; it < max_iters; ++it) {
    std::fill(q.begin(), q.end(), 0.0);
    for (std::size_t x = 0; x < nx; ++x) {
      for (std::size_t y = 0; y < ny; ++y) q[y] += p[x] * w[x][y];
    }
    double total = 0.0, hi = 0.0;
    for (std::size_t x = 0; x < nx; ++x) {
      double e = 0.0;
      for (std::size_t y = 0; y < ny; ++y) {
        if (w[x][y] > 0.0) e += w[x][y] * std::log(w[x][y] / q[y]);
      }
      c[x] = std::exp(e);
      total += p[x] * c[x];
      hi = std::max(hi, c[x]);
    }
    lower = std::log(total);
    const double upper = std::log(hi);
    for (std::size_t x = 0; x < nx; ++x) p[x] *= c[x] / total;
    if (upper - lower < tolerance) break;
  }
  return std::max(lower, 0.0) / std::log(2.0);
}

struct OracleConfig {
  std::size_t grid_steps = 100;     // simplex resolution per jammer symbol
  std::size_t refine_rounds = 60;
};

/// max_p min_q I(p, W_q) = min_q C(W_q) with W_q = Σ_s q(s) W_s (the
/// objective is concave in p and convex in q). Grid over the simplex of q
/// followed by pairwise-exchange refinement.
inline double classical_avc_oracle(const ClassicalAvc& w, const OracleConfig& cfg = {}) {
  validate_classical_avc(w);
  const std::size_t ns = w.size(), nx = w.front().size(), ny = w.front().front().size();
  auto capacity_at = [&](const std::vector<double>& q) {
    std::vector<std::vector<double>> wq(nx, std::vector<double>(ny, 0.0));
    for (std::size_t s = 0; s < ns; ++s) {
      for (std::size_t x = 0; x < nx; ++x) {
        for (std::size_t y = 0; y < ny; ++y) wq[x][y] += q[s] * w[s][x][y];
      }
    }
    return blahut_arimoto(wq);
  };
  std::vector<double> best_q(ns, 0.0);
  best_q[0] = 1.0;
  double best = capacity_at(best_q);
  // enumerate compositions of grid_steps into ns parts
  std::vector<std::size_t> comp(ns, 0);
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t idx, std::size_t left) {
    if (idx + 1 == ns) {
      comp[idx] = left;
      std::vector<double> q(ns);
      for (std::size_t s = 0; s < ns; ++s) q[s] = static_cast<double>(comp[s]) / static_cast<double>(cfg.grid_steps);
      const double v = capacity_at(q);
      if (v < best) {
        best = v;
        best_q = q;
      }
      return;
    }
    for (std::size_t k = 0; k <= left; ++k) {
      comp[idx] = k;
      rec(idx + 1, left - k);
    }
  };
  rec(0, cfg.grid_steps);
  double step = 1.0 / static_cast<double>(cfg.grid_steps);
  for (std::size_t round = 0; round < cfg.refine_rounds && step > 1e-12; ++round) {
    bool improved = false;
    for (std::size_t a = 0; a < ns; ++a) {
      for (std::size_t b = 0; b < ns; ++b) {
        if (a == b) continue;
        std::vector<double> q = best_q;
        const double t = std::min(step, q[b]);
        if (t <= 0.0) continue;
        q[a] += t;
        q[b] -= t;
        const double v = capacity_at(q);
        if (v < best - 1e-15) {
          best = v;
          best_q = q;
          improved = true;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  return best;
}

}  // namespace qavc
