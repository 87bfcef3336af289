#pragma once

// Seeded random states, unitaries and POVMs; deterministic jammer-state
// grids; local search over the state space S(J).

#include "qavc/qmath.hpp"

#include <cstdint>
#include <functional>
#include <random>

namespace qavc {

using Rng = std::mt19937_64;

/// SplitMix64 finaliser; the published mixing function used for all seed
/// derivation.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// seed(root, stage, trial) = splitmix64(splitmix64(splitmix64(root) ^ stage) ^ trial)
constexpr std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stage,
                                    std::uint64_t trial = 0) {
  return splitmix64(splitmix64(splitmix64(root) ^ stage) ^ trial);
}

inline CMatrix ginibre(std::size_t rows, std::size_t cols, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  CMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = cplx(g(rng), g(rng));
  }
  return m;
}

/// Haar-random isometry of shape rows×cols (rows ≥ cols).
inline CMatrix random_isometry(std::size_t rows, std::size_t cols, Rng& rng) {
  if (rows < cols) throw ShapeError("random_isometry: needs rows >= cols");
  const CMatrix g = ginibre(rows, cols, rng);
  Eigen::HouseholderQR<CMatrix> qr(g);
  CMatrix q = qr.householderQ() * CMatrix::Identity(g.rows(), g.cols());
  const CMatrix r = qr.matrixQR();
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    const cplx d = r(j, j);
    if (std::abs(d) > 0) q.col(j) *= d / std::abs(d);
  }
  return q;
}

inline CMatrix random_unitary(std::size_t d, Rng& rng) { return random_isometry(d, d, rng); }

inline CVector random_unit_vector(std::size_t d, Rng& rng) {
  CVector v = ginibre(d, 1, rng).col(0);
  return v / v.norm();
}

inline DensityOperator random_pure_state(std::size_t d, Rng& rng) {
  return pure_state(random_unit_vector(d, rng));
}

/// Hilbert–Schmidt-type random state of the given rank (0 means full rank).
inline DensityOperator random_density(std::size_t d, Rng& rng, std::size_t rank = 0) {
  if (rank == 0) rank = d;
  const CMatrix w = ginibre(d, rank, rng);
  CMatrix m = w * w.adjoint();
  m /= m.trace().real();
  return DensityOperator(hermitize(m));
}

/// Random M-outcome POVM on dimension d.
inline std::vector<PovmElement> random_povm(std::size_t d, std::size_t outcomes, Rng& rng) {
  std::vector<CMatrix> g;
  const auto n = static_cast<Eigen::Index>(d);
  CMatrix total = CMatrix::Zero(n, n);
  for (std::size_t m = 0; m < outcomes; ++m) {
    const CMatrix w = ginibre(d, d, rng);
    g.push_back(w * w.adjoint());
    total += g.back();
  }
  const CMatrix inv_sqrt = matrix_function(total, [](double x) { return 1.0 / std::sqrt(x); });
  std::vector<PovmElement> out;
  for (const auto& gm : g) out.emplace_back(hermitize(inv_sqrt * gm * inv_sqrt), 1e-9);
  return out;
}

/// Bloch-ball state (1 + r·σ)/2.
inline CMatrix qubit_from_bloch(double x, double y, double z) {
  CMatrix m(2, 2);
  m << cplx(1 + z, 0), cplx(x, -y), cplx(x, y), cplx(1 - z, 0);
  return 0.5 * m;
}

/// Deterministic covering grid of S(J). For |J| = 2 the grid is a Fibonacci
/// sphere on Bloch radii 1, 2/3 and 1/3 plus the maximally mixed state; for
/// larger |J| it consists of basis states, the maximally mixed state and
/// seeded random pure and mixed states.
inline std::vector<DensityOperator> state_grid(std::size_t jdim, std::size_t points,
                                               std::uint64_t seed = 0x5eed) {
  std::vector<DensityOperator> grid;
  if (points == 0) return grid;
  grid.push_back(maximally_mixed(jdim));
  if (jdim == 1) return grid;
  if (jdim == 2) {
    const std::size_t rest = points - 1;
    const std::size_t n_outer = (rest + 1) / 2;
    const std::size_t n_mid = (rest - n_outer + 1) / 2;
    const std::size_t n_inner = rest - n_outer - n_mid;
    const double golden = M_PI * (3.0 - std::sqrt(5.0));
    auto shell = [&](std::size_t n, double radius) {
      for (std::size_t i = 0; i < n; ++i) {
        const double z = 1.0 - 2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(n);
        const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double phi = golden * static_cast<double>(i);
        grid.emplace_back(qubit_from_bloch(radius * rho * std::cos(phi),
                                           radius * rho * std::sin(phi), radius * z));
      }
    };
    shell(n_outer, 1.0);
    shell(n_mid, 2.0 / 3.0);
    shell(n_inner, 1.0 / 3.0);
    return grid;
  }
  for (std::size_t i = 0; i < jdim && grid.size() < points; ++i) grid.push_back(basis_state(jdim, i));
  Rng rng(seed);
  while (grid.size() < points) {
    if (grid.size() % 2 == 0) {
      grid.push_back(random_pure_state(jdim, rng));
    } else {
      grid.push_back(random_density(jdim, rng));
    }
  }
  return grid;
}

struct StateSearchOptions {
  std::size_t max_iters = 200;
  double fd_step = 1e-6;
  double min_improvement = 1e-13;
};

struct StateSearchResult {
  DensityOperator state;
  double value = 0.0;
  std::size_t iterations = 0;
};

/// Local ascent (or descent) of f over S(d), parametrised as WW†/tr(WW†)
/// with a finite-difference gradient and backtracking step control.
inline StateSearchResult local_state_search(const std::function<double(const CMatrix&)>& f,
                                            const DensityOperator& start, bool maximize,
                                            const StateSearchOptions& opts = {}) {
  const auto d = static_cast<Eigen::Index>(start.dim());
  const double sign = maximize ? 1.0 : -1.0;
  // W = sqrt(start) plus a small full-rank perturbation keeps all directions open.
  CMatrix w = matrix_function(start.matrix(), [](double x) { return std::sqrt(std::max(x, 0.0)); });
  w += 1e-4 * CMatrix::Identity(d, d);
  auto to_state = [](const CMatrix& wm) {
    CMatrix s = wm * wm.adjoint();
    return CMatrix(hermitize(s / s.trace().real()));
  };
  double best = sign * f(to_state(w));
  double step = 0.1;
  std::size_t it = 0;
  for (; it < opts.max_iters; ++it) {
    CMatrix grad(d, d);
    for (Eigen::Index j = 0; j < d; ++j) {
      for (Eigen::Index i = 0; i < d; ++i) {
        for (int part = 0; part < 2; ++part) {
          const cplx delta = part == 0 ? cplx(opts.fd_step, 0) : cplx(0, opts.fd_step);
          CMatrix wp = w, wm = w;
          wp(i, j) += delta;
          wm(i, j) -= delta;
          const double g = sign * (f(to_state(wp)) - f(to_state(wm))) / (2 * opts.fd_step);
          if (part == 0) {
            grad(i, j) = cplx(g, 0);
          } else {
            grad(i, j) += cplx(0, g);
          }
        }
      }
    }
    const double gnorm = grad.norm();
    if (gnorm < 1e-12) break;
    bool improved = false;
    while (step > 1e-10) {
      const CMatrix cand = w + (step / gnorm) * grad * w.norm();
      const double v = sign * f(to_state(cand));
      if (v > best + opts.min_improvement) {
        w = cand / cand.norm();
        const double gain = v - best;
        best = v;
        improved = true;
        step *= 1.5;
        if (gain < opts.min_improvement * 10) step = 0;  // converged
        break;
      }
      step *= 0.5;
    }
    if (!improved || step == 0) break;
  }
  return {DensityOperator(to_state(w), 1e-9), sign * best, it};
}

}  // namespace qavc
