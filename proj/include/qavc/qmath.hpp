#pragma once

// Dense complex-matrix substrate: tensor products, partial traces,
// Hermitian eigendecomposition, operator order and canonical states.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qavc {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;
using Dims = std::vector<std::size_t>;

/// Default limit on the number of entries in any single matrix.
inline constexpr std::size_t kDefaultEntryCap = std::size_t{1} << 20;

namespace tol {
inline constexpr double structural = 1e-10;  // Hermiticity, trace, unit norm
inline constexpr double hermitian_input = 1e-8;
inline constexpr double eigen_residual = 1e-9;  // multiplied by dimension
inline constexpr double inequality = 1e-8;
inline constexpr double trace_preserving = 1e-9;
}  // namespace tol

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
/// Operand dimensions do not fit together.
class ShapeError : public Error {
 public:
  using Error::Error;
};
/// Argument outside the mathematical domain of the operation.
class DomainError : public Error {
 public:
  using Error::Error;
};
/// A dimension or enumeration cap would be exceeded.
class SizeError : public Error {
 public:
  using Error::Error;
};
/// A numerically verified inequality or identity failed.
class VerificationError : public Error {
 public:
  using Error::Error;
};

namespace detail {

template <class... Args>
std::string concat(const Args&... args) {
  std::ostringstream os;
  (os << ... << args);
  return os.str();
}

inline bool all_finite(const CMatrix& m) {
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const cplx z = m.data()[i];
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
  }
  return true;
}

}  // namespace detail

inline std::size_t dims_product(const Dims& dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1},
                         std::multiplies<>());
}

inline void check_entry_cap(std::size_t rows, std::size_t cols,
                            std::size_t cap = kDefaultEntryCap) {
  if (rows != 0 && cols > cap / rows) {
    throw SizeError(detail::concat("matrix of ", rows, "x", cols,
                                   " exceeds the entry cap of ", cap));
  }
}

inline double hermiticity_defect(const CMatrix& m) {
  if (m.rows() != m.cols()) return std::numeric_limits<double>::infinity();
  if (m.size() == 0) return 0.0;
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

inline CMatrix hermitize(const CMatrix& m) { return 0.5 * (m + m.adjoint()); }

inline CMatrix kron(const CMatrix& a, const CMatrix& b,
                    std::size_t cap = kDefaultEntryCap) {
  const auto rows = static_cast<std::size_t>(a.rows() * b.rows());
  const auto cols = static_cast<std::size_t>(a.cols() * b.cols());
  check_entry_cap(rows, cols, cap);
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

inline CVector kron(const CVector& a, const CVector& b) {
  CVector out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    out.segment(i * b.size(), b.size()) = a(i) * b;
  }
  return out;
}

/// Maps each linear index of a tensor product with factor sizes `dims`
/// to its index after reordering the factors so that new position p holds
/// old factor `order[p]`.
inline std::vector<std::size_t> factor_reorder_index(const Dims& dims,
                                                     const std::vector<std::size_t>& order) {
  const std::size_t k = dims.size();
  if (order.size() != k) throw ShapeError("factor order length mismatch");
  std::vector<bool> seen(k, false);
  for (auto o : order) {
    if (o >= k || seen[o]) throw DomainError("factor order is not a permutation");
    seen[o] = true;
  }
  Dims new_dims(k);
  for (std::size_t p = 0; p < k; ++p) new_dims[p] = dims[order[p]];
  // stride of each new position
  std::vector<std::size_t> new_stride(k, 1);
  for (std::size_t p = k; p-- > 1;) new_stride[p - 1] = new_stride[p] * new_dims[p];
  std::vector<std::size_t> pos_of_old(k);
  for (std::size_t p = 0; p < k; ++p) pos_of_old[order[p]] = p;

  const std::size_t total = dims_product(dims);
  std::vector<std::size_t> map(total);
  std::vector<std::size_t> digit(k, 0);
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t target = 0;
    for (std::size_t f = 0; f < k; ++f) target += digit[f] * new_stride[pos_of_old[f]];
    map[idx] = target;
    for (std::size_t f = k; f-- > 0;) {
      if (++digit[f] < dims[f]) break;
      digit[f] = 0;
    }
  }
  return map;
}

/// Permutation matrix P with P|old⟩ = |reordered⟩ (see factor_reorder_index).
inline CMatrix factor_permutation_matrix(const Dims& dims,
                                         const std::vector<std::size_t>& order) {
  const auto map = factor_reorder_index(dims, order);
  const auto n = static_cast<Eigen::Index>(map.size());
  CMatrix p = CMatrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) p(static_cast<Eigen::Index>(map[i]), i) = 1.0;
  return p;
}

/// Reduces `m` onto the factors listed in `keep` (in ascending factor order).
inline CMatrix partial_trace(const CMatrix& m, const Dims& factor_dims,
                             std::vector<std::size_t> keep) {
  const std::size_t total = dims_product(factor_dims);
  if (m.rows() != m.cols() || static_cast<std::size_t>(m.rows()) != total) {
    throw ShapeError(detail::concat("partial_trace: matrix is ", m.rows(), "x", m.cols(),
                                    " but factor dims multiply to ", total));
  }
  std::sort(keep.begin(), keep.end());
  keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
  const std::size_t k = factor_dims.size();
  for (auto f : keep) {
    if (f >= k) throw ShapeError("partial_trace: kept factor index out of range");
  }
  std::vector<bool> kept(k, false);
  for (auto f : keep) kept[f] = true;

  std::vector<std::size_t> stride(k, 1);
  for (std::size_t f = k; f-- > 1;) stride[f - 1] = stride[f] * factor_dims[f];

  // Linear offsets contributed by kept and traced digit combinations.
  auto offsets = [&](bool want_kept) {
    std::vector<std::size_t> out{0};
    for (std::size_t f = 0; f < k; ++f) {
      if (kept[f] != want_kept) continue;
      std::vector<std::size_t> next;
      next.reserve(out.size() * factor_dims[f]);
      for (auto base : out) {
        for (std::size_t d = 0; d < factor_dims[f]; ++d) next.push_back(base + d * stride[f]);
      }
      out = std::move(next);
    }
    return out;
  };
  const auto kept_off = offsets(true);
  const auto traced_off = offsets(false);

  const auto kd = static_cast<Eigen::Index>(kept_off.size());
  CMatrix out = CMatrix::Zero(kd, kd);
  for (Eigen::Index r = 0; r < kd; ++r) {
    for (Eigen::Index c = 0; c < kd; ++c) {
      cplx acc = 0.0;
      for (auto t : traced_off) {
        acc += m(static_cast<Eigen::Index>(kept_off[r] + t),
                 static_cast<Eigen::Index>(kept_off[c] + t));
      }
      out(r, c) = acc;
    }
  }
  return out;
}

struct EigenSystem {
  RVector values;   // descending
  CMatrix vectors;  // columns, unit norm, first significant entry real-positive
};

/// Eigendecomposition of a Hermitian matrix with a reproducible ordering and
/// phase convention.
inline EigenSystem eig_hermitian(const CMatrix& m) {
  if (m.rows() != m.cols()) throw ShapeError("eig_hermitian: matrix is not square");
  if (!detail::all_finite(m)) throw DomainError("eig_hermitian: non-finite entries");
  const double defect = hermiticity_defect(m);
  if (defect > tol::hermitian_input) {
    throw DomainError(detail::concat("eig_hermitian: input is not Hermitian (defect ", defect, ")"));
  }
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(hermitize(m));
  if (solver.info() != Eigen::Success) throw DomainError("eig_hermitian: solver failed");
  const auto n = m.rows();
  EigenSystem es{RVector(n), CMatrix(n, n)};
  // Eigen returns ascending order.
  for (Eigen::Index i = 0; i < n; ++i) {
    es.values(i) = solver.eigenvalues()(n - 1 - i);
    CVector v = solver.eigenvectors().col(n - 1 - i);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (std::abs(v(j)) > 1e-12) {
        v *= std::conj(v(j)) / std::abs(v(j));
        break;
      }
    }
    es.vectors.col(i) = v;
  }
  return es;
}

inline double max_eigenvalue(const CMatrix& m) { return eig_hermitian(m).values(0); }

inline double min_eigenvalue(const CMatrix& m) {
  const auto es = eig_hermitian(m);
  return es.values(es.values.size() - 1);
}

/// a ≤ b in the operator order, up to `tolerance`.
inline bool op_leq(const CMatrix& a, const CMatrix& b, double tolerance = tol::inequality) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError("op_leq: operands have different dimensions");
  }
  return min_eigenvalue(b - a) >= -tolerance;
}

/// Trace norm of a Hermitian matrix.
inline double trace_norm(const CMatrix& m) {
  return eig_hermitian(m).values.cwiseAbs().sum();
}

/// Apply f to the eigenvalues of a Hermitian matrix.
template <class F>
CMatrix matrix_function(const CMatrix& m, F&& f) {
  const auto es = eig_hermitian(m);
  RVector fv = es.values.unaryExpr(f);
  return es.vectors * fv.cast<cplx>().asDiagonal() * es.vectors.adjoint();
}

/// Von Neumann entropy in bits; eigenvalues below 1e-12 count as zero.
inline double entropy_bits(const CMatrix& rho) {
  const auto es = eig_hermitian(rho);
  double s = 0.0;
  for (Eigen::Index i = 0; i < es.values.size(); ++i) {
    const double p = es.values(i);
    if (p > 1e-12) s -= p * std::log2(p);
  }
  return s;
}

/// Positive, unit-trace operator.
class DensityOperator {
 public:
  DensityOperator() = default;

  explicit DensityOperator(CMatrix m, double tolerance = tol::structural)
      : matrix_(std::move(m)) {
    if (matrix_.rows() != matrix_.cols() || matrix_.rows() == 0) {
      throw ShapeError("density operator must be a non-empty square matrix");
    }
    if (!detail::all_finite(matrix_)) throw DomainError("density operator has non-finite entries");
    const double defect = hermiticity_defect(matrix_);
    if (defect > tolerance) {
      throw DomainError(detail::concat("density operator is not Hermitian (defect ", defect, ")"));
    }
    matrix_ = hermitize(matrix_);
    const double tr = matrix_.trace().real();
    if (std::abs(tr - 1.0) > tolerance) {
      throw DomainError(detail::concat("density operator trace is ", tr));
    }
    const double lo = min_eigenvalue(matrix_);
    if (lo < -tolerance) {
      throw DomainError(detail::concat("density operator has eigenvalue ", lo));
    }
  }

  [[nodiscard]] std::size_t dim() const { return static_cast<std::size_t>(matrix_.rows()); }
  [[nodiscard]] const CMatrix& matrix() const { return matrix_; }

 private:
  CMatrix matrix_;
};

/// Operator 0 ≤ D ≤ 1.
class PovmElement {
 public:
  PovmElement() = default;

  explicit PovmElement(CMatrix m, double tolerance = tol::structural) : matrix_(std::move(m)) {
    if (matrix_.rows() != matrix_.cols() || matrix_.rows() == 0) {
      throw ShapeError("POVM element must be a non-empty square matrix");
    }
    const double defect = hermiticity_defect(matrix_);
    if (defect > tolerance) {
      throw DomainError(detail::concat("POVM element is not Hermitian (defect ", defect, ")"));
    }
    matrix_ = hermitize(matrix_);
    const auto es = eig_hermitian(matrix_);
    if (es.values(es.values.size() - 1) < -tolerance || es.values(0) > 1.0 + tolerance) {
      throw DomainError(detail::concat("POVM element spectrum [", es.values(es.values.size() - 1),
                                       ", ", es.values(0), "] leaves [0,1]"));
    }
  }

  [[nodiscard]] std::size_t dim() const { return static_cast<std::size_t>(matrix_.rows()); }
  [[nodiscard]] const CMatrix& matrix() const { return matrix_; }

 private:
  CMatrix matrix_;
};

inline DensityOperator pure_state(const CVector& v) {
  const double n = v.norm();
  if (n < 1e-300) throw DomainError("pure_state: zero vector");
  const CVector u = v / n;
  return DensityOperator(u * u.adjoint());
}

inline DensityOperator basis_state(std::size_t dim, std::size_t index) {
  if (index >= dim) throw DomainError("basis_state: index out of range");
  CVector v = CVector::Zero(static_cast<Eigen::Index>(dim));
  v(static_cast<Eigen::Index>(index)) = 1.0;
  return pure_state(v);
}

inline DensityOperator maximally_mixed(std::size_t dim) {
  if (dim == 0) throw DomainError("maximally_mixed: dimension 0");
  const auto d = static_cast<Eigen::Index>(dim);
  return DensityOperator(CMatrix::Identity(d, d) / static_cast<double>(dim));
}

/// Unit vector (1/√L) Σ_i |i⟩|i⟩.
inline CVector max_entangled_vector(std::size_t L) {
  if (L == 0) throw DomainError("max_entangled: L must be at least 1");
  const auto d = static_cast<Eigen::Index>(L);
  CVector v = CVector::Zero(d * d);
  for (Eigen::Index i = 0; i < d; ++i) v(i * d + i) = 1.0 / std::sqrt(static_cast<double>(L));
  return v;
}

inline DensityOperator max_entangled(std::size_t L) { return pure_state(max_entangled_vector(L)); }

inline DensityOperator tensor(const DensityOperator& a, const DensityOperator& b) {
  return DensityOperator(kron(a.matrix(), b.matrix()));
}

inline DensityOperator tensor_power(const DensityOperator& a, std::size_t n) {
  if (n == 0) throw DomainError("tensor_power: exponent must be at least 1");
  CMatrix m = a.matrix();
  for (std::size_t i = 1; i < n; ++i) m = kron(m, a.matrix());
  return DensityOperator(m);
}

/// Integer k-th root of `value`, throwing if `value` is not a perfect power.
inline std::size_t exact_root(std::size_t value, std::size_t k) {
  if (k == 0) throw DomainError("exact_root: k must be positive");
  auto d = static_cast<std::size_t>(std::llround(std::pow(static_cast<double>(value), 1.0 / k)));
  for (std::size_t cand : {d - 1, d, d + 1}) {
    if (cand == 0) continue;
    std::size_t p = 1;
    for (std::size_t i = 0; i < k; ++i) p *= cand;
    if (p == value) return cand;
  }
  throw ShapeError(detail::concat(value, " is not a perfect ", k, "-th power"));
}

}  // namespace qavc
