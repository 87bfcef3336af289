#pragma once

// Elimination of correlation: i.i.d. sampling of code variants until the
// empirical mean observable satisfies (1/n) Σ E_{λ_ν} ≤ (ε+δ)·1, with the
// matrix tail bound |J|^ℓ exp(−n D(ε+δ‖ε)) governing the sample size.
// Tail-bound arithmetic is in nats; shared randomness is counted in bits.

#include "qavc/code.hpp"

#include <limits>

namespace qavc {

/// D(u‖v) = u ln(u/v) + (1−u) ln((1−u)/(1−v)) in nats. Returns +inf when
/// v ∈ {0, 1} and u ≠ v.
inline double bin_rel_entropy(double u, double v) {
  if (!(u >= 0.0 && u <= 1.0 && v >= 0.0 && v <= 1.0)) {
    throw DomainError(detail::concat("bin_rel_entropy: arguments (", u, ", ", v, ") outside [0,1]"));
  }
  auto term = [](double a, double b) {
    if (a == 0.0) return 0.0;
    if (b == 0.0) return std::numeric_limits<double>::infinity();
    return a * std::log(a / b);
  };
  return term(u, v) + term(1.0 - u, 1.0 - v);
}

/// |J|^ℓ · exp(−n D(ε+δ‖ε)).
inline double tail_bound(std::size_t n, double epsilon, double delta, std::size_t jdim,
                         std::size_t ell) {
  const double d = bin_rel_entropy(epsilon + delta, epsilon);
  const double prefactor = std::pow(static_cast<double>(jdim), static_cast<double>(ell));
  if (n == 0) return prefactor;
  return prefactor * std::exp(-static_cast<double>(n) * d);
}

struct SampleSize {
  std::size_t n_pinsker = 0;  // floor(ℓ ln|J| / (2δ²)) + 1
  std::size_t n_exact = 0;    // least n with tail bound < 1
};

inline SampleSize sample_size(double epsilon, double delta, std::size_t jdim, std::size_t ell) {
  if (!(epsilon >= 0.0) || !(delta > 0.0) || epsilon + delta >= 1.0) {
    throw DomainError(detail::concat("sample_size: need eps >= 0, delta > 0, eps + delta < 1 (got ",
                                     epsilon, ", ", delta, ")"));
  }
  if (jdim == 0 || ell == 0) throw DomainError("sample_size: |J| and ell must be positive");
  const double log_states = static_cast<double>(ell) * std::log(static_cast<double>(jdim));
  SampleSize out;
  out.n_pinsker = static_cast<std::size_t>(std::floor(log_states / (2.0 * delta * delta))) + 1;
  const double d = bin_rel_entropy(epsilon + delta, epsilon);
  if (std::isinf(d) || log_states == 0.0) {
    out.n_exact = 1;
  } else {
    auto n = static_cast<std::size_t>(std::floor(log_states / d)) + 1;
    // guard the boundary against rounding in log_states / d
    while (n > 1 && tail_bound(n - 1, epsilon, delta, jdim, ell) < 1.0) --n;
    while (tail_bound(n, epsilon, delta, jdim, ell) >= 1.0) ++n;
    out.n_exact = n;
  }
  return out;
}

/// log₂ℓ − 2 log₂δ + log₂ ln|J|.
inline double shared_bits_budget(double delta, std::size_t jdim, std::size_t ell) {
  return std::log2(static_cast<double>(ell)) - 2.0 * std::log2(delta) +
         std::log2(std::log(static_cast<double>(jdim)));
}

struct DerandPlan {
  double epsilon = 0.0;
  double delta = 0.0;
  std::size_t ell = 0;
  std::size_t jdim = 0;
  std::size_t n = 0;
  std::size_t n_pinsker = 0;
  double tail_bound = 0.0;   // dimensionless, exponent in nats
  double shared_bits = 0.0;  // log₂ n
};

inline DerandPlan make_plan(double epsilon, double delta, std::size_t jdim, std::size_t ell) {
  const auto ss = sample_size(epsilon, delta, jdim, ell);
  return {epsilon,       delta, ell, jdim, ss.n_exact, ss.n_pinsker,
          tail_bound(ss.n_exact, epsilon, delta, jdim, ell), std::log2(static_cast<double>(ss.n_exact))};
}

template <class Code>
struct DerandResult {
  DerandPlan plan;
  std::vector<std::size_t> chosen;
  RandomCode<Code> reduced;
  double achieved = 0.0;  // λ_max of the empirical mean
  std::size_t attempts = 0;
};

/// Raised when 100 independent draws all fail the operator-order test.
class DerandError : public VerificationError {
 public:
  DerandError(const std::string& what, double failure_rate)
      : VerificationError(what), failure_rate_(failure_rate) {}
  [[nodiscard]] double failure_rate() const { return failure_rate_; }

 private:
  double failure_rate_;
};

inline constexpr std::size_t kDerandMaxAttempts = 100;

namespace detail {

inline std::vector<std::size_t> draw_indices(const std::vector<double>& weights, std::size_t n,
                                             std::uint64_t seed) {
  Rng rng(seed);
  std::discrete_distribution<std::size_t> dist(weights.begin(), weights.end());
  std::vector<std::size_t> out(n);
  for (auto& i : out) i = dist(rng);
  return out;
}

inline CMatrix empirical_mean(const std::vector<ErrorObservable>& obs,
                              const std::vector<std::size_t>& idx) {
  CMatrix acc = CMatrix::Zero(obs.front().matrix.rows(), obs.front().matrix.cols());
  for (auto i : idx) acc += obs[i].matrix;
  return acc / static_cast<double>(idx.size());
}

}  // namespace detail

/// Draws n = n_exact i.i.d. variants and accepts once the empirical mean
/// passes the operator-order test against (ε+δ)·1; attempt k uses the seed
/// derive_seed(rng_seed, 0, k).
template <class Code>
DerandResult<Code> derandomize(const RandomCode<Code>& rc, const Channel& n_channel, double delta,
                               std::uint64_t rng_seed) {
  rc.validate();
  const auto obs = variant_observables(rc, n_channel);
  const double epsilon = worst_case_from_observable(mixed_observable(rc.weights, obs)).value;
  const std::size_t ell = block_length_of(rc.variants.front());
  const std::size_t jdim = exact_root(obs.front().jdim, ell);
  DerandResult<Code> res;
  res.plan = make_plan(std::max(epsilon, 0.0), delta, jdim, ell);
  const auto threshold = static_cast<Eigen::Index>(obs.front().jdim);
  const CMatrix bound = (epsilon + delta) * CMatrix::Identity(threshold, threshold);
  std::size_t failures = 0;
  for (std::size_t attempt = 0; attempt < kDerandMaxAttempts; ++attempt) {
    auto idx = detail::draw_indices(rc.weights, res.plan.n, derive_seed(rng_seed, 0, attempt));
    const CMatrix mean = detail::empirical_mean(obs, idx);
    if (op_leq(mean, bound, 1e-9)) {
      res.attempts = attempt + 1;
      res.achieved = max_eigenvalue(hermitize(mean));
      const double w = 1.0 / static_cast<double>(idx.size());
      for (auto i : idx) {
        res.reduced.weights.push_back(w);
        res.reduced.variants.push_back(rc.variants[i]);
      }
      res.chosen = std::move(idx);
      return res;
    }
    ++failures;
  }
  throw DerandError(detail::concat("derandomize: all ", kDerandMaxAttempts,
                                   " draws violated the operator-order test (n = ", res.plan.n, ")"),
                    static_cast<double>(failures) / kDerandMaxAttempts);
}

/// Fraction of `trials` independent n-draws whose empirical mean fails
/// (1/n) Σ E ≤ (ε+δ)·1; trial t uses derive_seed(rng_seed, 1, t).
template <class Code>
double empirical_failure_rate(const RandomCode<Code>& rc, const Channel& n_channel, double delta,
                              std::size_t n, std::size_t trials, std::uint64_t rng_seed) {
  rc.validate();
  if (trials == 0) throw DomainError("empirical_failure_rate: trials must be positive");
  if (n == 0) throw DomainError("empirical_failure_rate: n must be positive");
  const auto obs = variant_observables(rc, n_channel);
  const double epsilon = worst_case_from_observable(mixed_observable(rc.weights, obs)).value;
  const auto d = static_cast<Eigen::Index>(obs.front().jdim);
  const CMatrix bound = (epsilon + delta) * CMatrix::Identity(d, d);
  std::size_t failures = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    const auto idx = detail::draw_indices(rc.weights, n, derive_seed(rng_seed, 1, t));
    if (!op_leq(detail::empirical_mean(obs, idx), bound, 1e-9)) ++failures;
  }
  return static_cast<double>(failures) / static_cast<double>(trials);
}

}  // namespace qavc
