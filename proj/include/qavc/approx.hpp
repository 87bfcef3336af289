#pragma once

// Discretisation of the jammer: finite state nets in the induced
// half-diamond metric, the block-length lift of a net, and the telescoping
// replacement of a multi-letter jammer state one letter at a time.

#include "qavc/code.hpp"

#include <functional>
#include <optional>

namespace qavc {

struct StateNet {
  double eta = 0.0;
  std::vector<DensityOperator> points;
  Channel channel;
  double radius = 0.0;  // largest distance to the net over all validation samples
  std::size_t rounds = 0;
  std::size_t samples_checked = 0;
};

struct NetOptions {
  std::size_t validation_samples = 1000;
  std::size_t max_rounds = 30;
  std::size_t grid_points = 200;
  std::uint64_t seed = 0x4e37;
};

/// (10|A|²/η)^{2|A|²|B|²} as log10; the value itself overflows quickly.
inline double net_size_bound_log10(std::size_t a, std::size_t b, double eta, std::size_t ell = 1) {
  if (!(eta > 0.0)) throw DomainError("net bound needs eta > 0");
  const double base = 10.0 * static_cast<double>(a * a * ell) / eta;
  return 2.0 * static_cast<double>(a * a * b * b) * std::log10(base);
}

inline double net_size_bound(std::size_t a, std::size_t b, double eta, std::size_t ell = 1) {
  return std::pow(10.0, net_size_bound_log10(a, b, eta, ell));
}

/// η̃ = η/|A|², the trace-distance target for the Choi channel.
inline double choi_eta(double eta, std::size_t a) { return eta / static_cast<double>(a * a); }

namespace detail {

/// Choi matrix of N_σ for each state, computed once.
inline std::vector<CMatrix> induced_chois(const Channel& n, const std::vector<DensityOperator>& states) {
  std::vector<CMatrix> out;
  out.reserve(states.size());
  for (const auto& s : states) out.push_back(choi_matrix(fix_jammer(n, s)));
  return out;
}

/// Certified upper bound on ½‖N_s − N_s'‖_◊ from the two Choi matrices.
inline double induced_distance(const CMatrix& ja, const CMatrix& jb, std::size_t a, std::size_t b) {
  return diamond_upper_bound(hermitize(ja - jb), a, b);
}

inline DensityOperator mixture(const std::vector<DensityOperator>& states, const std::vector<double>& w) {
  CMatrix acc = CMatrix::Zero(states.front().matrix().rows(), states.front().matrix().cols());
  for (std::size_t k = 0; k < states.size(); ++k) acc += w[k] * states[k].matrix();
  return DensityOperator(hermitize(acc), 1e-9);
}

}  // namespace detail

/// One random member of the family: a uniform mixture weight (flat
/// Dirichlet) over the classical states when present, otherwise a Haar
/// pure state or a Hilbert–Schmidt mixed state with equal probability.
inline DensityOperator sample_family_member(const JammerFamily& family, Rng& rng) {
  if (family.classical_states) {
    const auto& cs = *family.classical_states;
    std::exponential_distribution<double> ex(1.0);
    std::vector<double> w(cs.size());
    double total = 0.0;
    for (auto& x : w) total += (x = ex(rng));
    for (auto& x : w) x /= total;
    return detail::mixture(cs, w);
  }
  const std::size_t j = family.base.jammer_total();
  std::bernoulli_distribution coin(0.5);
  return coin(rng) ? random_pure_state(j, rng) : random_density(j, rng);
}

namespace detail {

inline std::vector<DensityOperator> net_candidates(const JammerFamily& family, double eta,
                                                   std::size_t grid_points) {
  if (!family.classical_states) return state_grid(family.base.jammer_total(), grid_points);
  const auto& cs = *family.classical_states;
  std::vector<DensityOperator> out(cs.begin(), cs.end());
  if (cs.size() > 3) return out;
  const auto steps = static_cast<std::size_t>(std::max(10.0, std::ceil(4.0 / eta)));
  std::vector<double> w(cs.size());
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t idx, std::size_t left) {
    if (idx + 1 == cs.size()) {
      w[idx] = static_cast<double>(left) / static_cast<double>(steps);
      out.push_back(mixture(cs, w));
      return;
    }
    for (std::size_t k = 0; k <= left; ++k) {
      w[idx] = static_cast<double>(k) / static_cast<double>(steps);
      rec(idx + 1, left - k);
    }
  };
  rec(0, steps);
  return out;
}

}  // namespace detail

/// Greedy set cover: candidates are picked by how many not-yet-covered
/// universe points they bring within η. The net is then checked against
/// fresh random members; uncovered ones join the universe and the cover is
/// rebuilt until a validation round passes.
inline StateNet build_state_net(const JammerFamily& family, double eta, const NetOptions& opts = {}) {
  if (!(eta > 0.0)) throw DomainError("build_state_net: eta must be positive");
  const Channel& n = family.base;
  if (n.jammer_factors() == 0) throw ShapeError("build_state_net: channel has no jammer input");
  if (!family.classical_states && n.jammer_total() > 3) {
    throw SizeError("build_state_net: quantum jammer nets are limited to |J| <= 3");
  }
  const std::size_t a = n.user_in_total(), b = n.out_total();

  std::vector<DensityOperator> cands = detail::net_candidates(family, eta, opts.grid_points);
  std::vector<DensityOperator> universe;
  Rng rng(derive_seed(opts.seed, 0, 0));
  if (family.classical_states) universe = *family.classical_states;
  for (std::size_t i = 0; i < opts.validation_samples; ++i) universe.push_back(sample_family_member(family, rng));
  std::vector<CMatrix> cand_choi = detail::induced_chois(n, cands);
  std::vector<CMatrix> uni_choi = detail::induced_chois(n, universe);
  // cover[c][u] = candidate c covers universe point u
  std::vector<std::vector<char>> cover(cands.size());
  auto extend_cover = [&](std::size_t from_cand, std::size_t from_uni) {
    for (std::size_t c = 0; c < cands.size(); ++c) {
      const std::size_t start = c < from_cand ? from_uni : 0;
      cover[c].resize(universe.size(), 0);
      for (std::size_t u = start; u < universe.size(); ++u) {
        cover[c][u] = detail::induced_distance(cand_choi[c], uni_choi[u], a, b) <= eta ? 1 : 0;
      }
    }
  };
  extend_cover(0, 0);
  // universe points that no candidate covers become candidates themselves
  {
    const std::size_t old_c = cands.size();
    for (std::size_t u = 0; u < universe.size(); ++u) {
      bool hit = false;
      for (std::size_t c = 0; c < old_c && !hit; ++c) hit = cover[c][u] != 0;
      if (!hit) {
        cands.push_back(universe[u]);
        cand_choi.push_back(uni_choi[u]);
      }
    }
    cover.resize(cands.size());
    extend_cover(old_c, universe.size());
  }

  StateNet net;
  net.eta = eta;
  net.channel = n;
  double best_radius = std::numeric_limits<double>::infinity();
  for (std::size_t round = 0; round < opts.max_rounds; ++round) {
    std::vector<char> covered(universe.size(), 0);
    std::size_t remaining = universe.size();
    std::vector<std::size_t> chosen;
    while (remaining > 0) {
      std::size_t best_c = 0, best_gain = 0;
      for (std::size_t c = 0; c < cands.size(); ++c) {
        std::size_t gain = 0;
        for (std::size_t u = 0; u < universe.size(); ++u) gain += (cover[c][u] && !covered[u]) ? 1 : 0;
        if (gain > best_gain) {
          best_gain = gain;
          best_c = c;
        }
      }
      chosen.push_back(best_c);
      for (std::size_t u = 0; u < universe.size(); ++u) {
        if (cover[best_c][u] && !covered[u]) {
          covered[u] = 1;
          --remaining;
        }
      }
    }
    // local improvement: drop redundant points, then replace pairs by one
    // candidate covering everything only the pair covered
    auto count_cover = [&](const std::vector<std::size_t>& sel) {
      std::vector<int> cnt(universe.size(), 0);
      for (auto c : sel) {
        for (std::size_t u = 0; u < universe.size(); ++u) cnt[u] += cover[c][u];
      }
      return cnt;
    };
    for (bool changed = true; changed;) {
      changed = false;
      auto cnt = count_cover(chosen);
      for (std::size_t i = chosen.size(); i-- > 0;) {
        bool needed = false;
        for (std::size_t u = 0; u < universe.size() && !needed; ++u) needed = cover[chosen[i]][u] && cnt[u] == 1;
        if (!needed) {
          for (std::size_t u = 0; u < universe.size(); ++u) cnt[u] -= cover[chosen[i]][u];
          chosen.erase(chosen.begin() + static_cast<long>(i));
          changed = true;
        }
      }
      for (std::size_t i = 0; i < chosen.size() && !changed; ++i) {
        for (std::size_t k = i + 1; k < chosen.size() && !changed; ++k) {
          std::vector<std::size_t> exclusive;
          for (std::size_t u = 0; u < universe.size(); ++u) {
            const int own = cover[chosen[i]][u] + cover[chosen[k]][u];
            if (own > 0 && cnt[u] == own) exclusive.push_back(u);
          }
          for (std::size_t c = 0; c < cands.size(); ++c) {
            bool all = true;
            for (auto u : exclusive) {
              if (!cover[c][u]) {
                all = false;
                break;
              }
            }
            if (all) {
              chosen.erase(chosen.begin() + static_cast<long>(k));
              chosen[i] = c;
              changed = true;
              break;
            }
          }
        }
      }
    }
    std::vector<CMatrix> net_choi;
    for (auto c : chosen) net_choi.push_back(cand_choi[c]);

    // validation on fresh members
    Rng vrng(derive_seed(opts.seed, 1, round));
    double radius = 0.0;
    std::vector<DensityOperator> violators;
    for (std::size_t i = 0; i < opts.validation_samples; ++i) {
      DensityOperator s = sample_family_member(family, vrng);
      const CMatrix js = choi_matrix(fix_jammer(n, s));
      double d = std::numeric_limits<double>::infinity();
      for (const auto& jn : net_choi) d = std::min(d, detail::induced_distance(js, jn, a, b));
      radius = std::max(radius, d);
      if (d > eta) violators.push_back(std::move(s));
    }
    net.samples_checked += opts.validation_samples;
    best_radius = std::min(best_radius, radius);
    if (violators.empty()) {
      net.points.clear();
      for (auto c : chosen) net.points.push_back(cands[c]);
      net.radius = radius;
      net.rounds = round + 1;
      return net;
    }
    const std::size_t old_c = cands.size(), old_u = universe.size();
    for (auto& v : violators) {
      cand_choi.push_back(choi_matrix(fix_jammer(n, v)));
      uni_choi.push_back(cand_choi.back());
      cands.push_back(v);
      universe.push_back(std::move(v));
    }
    cover.resize(cands.size());
    extend_cover(old_c, old_u);
  }
  throw VerificationError(detail::concat("build_state_net: no validated net within ", opts.max_rounds,
                                         " rounds; best radius ", best_radius, " for eta ", eta));
}

/// Half-diamond distance from N_s to the nearest net point (upper bound).
inline std::pair<double, std::size_t> distance_to_net(const StateNet& net, const DensityOperator& s) {
  const std::size_t a = net.channel.user_in_total(), b = net.channel.out_total();
  const CMatrix js = choi_matrix(fix_jammer(net.channel, s));
  double best = std::numeric_limits<double>::infinity();
  std::size_t arg = 0;
  for (std::size_t i = 0; i < net.points.size(); ++i) {
    const double d = detail::induced_distance(js, choi_matrix(fix_jammer(net.channel, net.points[i])), a, b);
    if (d < best) {
      best = d;
      arg = i;
    }
  }
  return {best, arg};
}

struct LiftedGap {
  double sup_net = 0.0;      // max over net^ℓ product tuples
  double sup_sampled = 0.0;  // max over sampled family tuples
  double slack = 0.0;        // ℓ·η
  bool net_sampled = false;  // net^ℓ exceeded the enumeration cap
  [[nodiscard]] bool within_slack() const { return sup_sampled <= sup_net + slack + 1e-6; }
};

inline constexpr std::size_t kLiftedEnumerationCap = 1u << 14;

/// Compares the worst product jammer drawn from net^ℓ with the worst of
/// `trials` random product jammers from the family, for the random code's
/// average error E_λ err(C_λ, s_1 ⊗ … ⊗ s_ℓ).
template <class Code>
LiftedGap lifted_net_gap(const StateNet& net, const JammerFamily& family, const RandomCode<Code>& rc,
                         std::size_t ell, std::size_t trials, std::uint64_t seed, bool allow_sampling = false) {
  rc.validate();
  if (block_length_of(rc.variants.front()) != ell) throw ShapeError("lifted_net_gap: code block length differs");
  const auto obs = variant_observables(rc, net.channel);
  const CMatrix mean = mixed_observable(rc.weights, obs);
  auto value = [&](const std::vector<const CMatrix*>& letters) {
    CMatrix p = *letters.front();
    for (std::size_t i = 1; i < letters.size(); ++i) p = kron(p, *letters[i]);
    return (p * mean).trace().real();
  };
  LiftedGap out;
  out.slack = static_cast<double>(ell) * net.eta;
  double tuples = std::pow(static_cast<double>(net.points.size()), static_cast<double>(ell));
  std::vector<const CMatrix*> letters(ell);
  out.sup_net = -std::numeric_limits<double>::infinity();
  if (tuples <= static_cast<double>(kLiftedEnumerationCap)) {
    std::vector<std::size_t> idx(ell, 0);
    while (true) {
      for (std::size_t i = 0; i < ell; ++i) letters[i] = &net.points[idx[i]].matrix();
      out.sup_net = std::max(out.sup_net, value(letters));
      std::size_t k = 0;
      while (k < ell && ++idx[k] == net.points.size()) idx[k++] = 0;
      if (k == ell) break;
    }
  } else {
    if (!allow_sampling) {
      throw SizeError(detail::concat("lifted_net_gap: |net|^ell = ", tuples, " exceeds the enumeration cap"));
    }
    out.net_sampled = true;
    Rng rng(derive_seed(seed, 0, 0));
    std::uniform_int_distribution<std::size_t> pick(0, net.points.size() - 1);
    for (std::size_t t = 0; t < kLiftedEnumerationCap; ++t) {
      for (std::size_t i = 0; i < ell; ++i) letters[i] = &net.points[pick(rng)].matrix();
      out.sup_net = std::max(out.sup_net, value(letters));
    }
  }
  Rng rng(derive_seed(seed, 1, 0));
  std::vector<DensityOperator> drawn(ell);
  out.sup_sampled = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < trials; ++t) {
    for (std::size_t i = 0; i < ell; ++i) {
      drawn[i] = sample_family_member(family, rng);
      letters[i] = &drawn[i].matrix();
    }
    out.sup_sampled = std::max(out.sup_sampled, value(letters));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Telescoping

/// Σ_t q_t σ_{t,1} ⊗ … ⊗ σ_{t,ℓ}: a classical jammer on J^ℓ.
struct ClassicalJammerState {
  std::vector<double> weights;
  std::vector<std::vector<DensityOperator>> letters;

  [[nodiscard]] std::size_t ell() const { return letters.empty() ? 0 : letters.front().size(); }

  [[nodiscard]] DensityOperator density() const {
    CMatrix acc;
    for (std::size_t t = 0; t < weights.size(); ++t) {
      CMatrix p = letters[t].front().matrix();
      for (std::size_t i = 1; i < letters[t].size(); ++i) p = kron(p, letters[t][i].matrix());
      if (t == 0) acc = CMatrix::Zero(p.rows(), p.cols());
      acc += weights[t] * p;
    }
    return DensityOperator(hermitize(acc), 1e-9);
  }
};

/// True when N(ρ ⊗ |s⟩⟨s'|) = 0 for s ≠ s', i.e. the channel only reads the
/// computational-basis diagonal of the jammer input.
inline bool jammer_dephased(const Channel& n, double tolerance = 1e-10) {
  const auto a = static_cast<Eigen::Index>(n.user_in_total());
  const auto j = static_cast<Eigen::Index>(n.jammer_total());
  for (Eigen::Index s = 0; s < j; ++s) {
    for (Eigen::Index sp = 0; sp < j; ++sp) {
      if (s == sp) continue;
      CMatrix off = CMatrix::Zero(j, j);
      off(s, sp) = 1.0;
      for (Eigen::Index x = 0; x < a; ++x) {
        for (Eigen::Index xp = 0; xp < a; ++xp) {
          CMatrix in = CMatrix::Zero(a, a);
          in(x, xp) = 1.0;
          if (apply_matrix(n, kron(in, off)).norm() > tolerance) return false;
        }
      }
    }
  }
  return true;
}

/// Reads σ on J^ℓ as a mixture of computational-basis product states. The
/// off-diagonal part must be invisible to the channel.
inline ClassicalJammerState decompose_classical(const DensityOperator& sigma, const Channel& n, std::size_t ell) {
  const std::size_t j = n.jammer_total();
  std::size_t total = 1;
  for (std::size_t i = 0; i < ell; ++i) total *= j;
  if (sigma.dim() != total) throw ShapeError("decompose_classical: state does not live on J^ell");
  const CMatrix& m = sigma.matrix();
  const double off = (m - CMatrix(m.diagonal().asDiagonal())).norm();
  if (off > 1e-10 && !jammer_dephased(n)) {
    throw DomainError("decompose_classical: state carries coherences that the channel can see");
  }
  ClassicalJammerState out;
  for (std::size_t idx = 0; idx < total; ++idx) {
    const double p = m(static_cast<Eigen::Index>(idx), static_cast<Eigen::Index>(idx)).real();
    if (p <= 1e-15) continue;
    std::vector<DensityOperator> word(ell);
    std::size_t rest = idx;
    for (std::size_t i = ell; i-- > 0;) {
      word[i] = basis_state(j, rest % j);
      rest /= j;
    }
    out.weights.push_back(p);
    out.letters.push_back(std::move(word));
  }
  double sum = 0.0;
  for (double w : out.weights) sum += w;
  for (double& w : out.weights) w /= sum;
  return out;
}

/// Random mixture of `terms` product states whose letters are family members.
inline ClassicalJammerState random_classical_jammer(const JammerFamily& family, std::size_t ell, std::size_t terms,
                                                    Rng& rng) {
  ClassicalJammerState out;
  std::exponential_distribution<double> ex(1.0);
  double total = 0.0;
  for (std::size_t t = 0; t < terms; ++t) {
    out.weights.push_back(ex(rng));
    total += out.weights.back();
    std::vector<DensityOperator> word;
    for (std::size_t i = 0; i < ell; ++i) word.push_back(sample_family_member(family, rng));
    out.letters.push_back(std::move(word));
  }
  for (double& w : out.weights) w /= total;
  return out;
}

struct StepOutcome {
  ClassicalJammerState next;
  double bound = 0.0;  // upper bound on ½‖(N^{⊗ℓ})_prev − (N^{⊗ℓ})_next‖_◊
};

/// Replaces letter i of every term; receives the current state and i.
using StepApprox = std::function<StepOutcome(const ClassicalJammerState&, std::size_t)>;

class TelescopeError : public VerificationError {
 public:
  TelescopeError(const std::string& what, std::size_t step) : VerificationError(what), step_(step) {}
  [[nodiscard]] std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

/// Letter i of each term moves to its nearest net point; the step bound is
/// Σ_t q_t d(σ_{t,i}, net), since only one tensor factor changes per term.
inline StepApprox net_projection_step(const StateNet& net) {
  return [&net](const ClassicalJammerState& cur, std::size_t i) {
    StepOutcome out{cur, 0.0};
    for (std::size_t t = 0; t < cur.weights.size(); ++t) {
      const auto [d, arg] = distance_to_net(net, cur.letters[t][i]);
      out.next.letters[t][i] = net.points[arg];
      out.bound += cur.weights[t] * d;
    }
    return out;
  };
}

struct TelescopeResult {
  DensityOperator sigma_prime;
  ClassicalJammerState approximant;
  std::vector<double> step_bounds;
  [[nodiscard]] double total_bound() const {
    double s = 0.0;
    for (double b : step_bounds) s += b;
    return s;
  }
};

/// σ^{(0)} = σ, σ^{(i)} = step(σ^{(i−1)}, i); returns σ' = σ^{(ℓ)} and the
/// per-step bounds. A step whose bound exceeds `step_limit` raises
/// TelescopeError carrying its 1-based index.
inline TelescopeResult telescope_approx(const ClassicalJammerState& sigma, const StepApprox& step,
                                        std::size_t ell,
                                        std::optional<double> step_limit = std::nullopt) {
  if (sigma.ell() != ell) throw ShapeError("telescope_approx: state has the wrong number of letters");
  TelescopeResult res;
  ClassicalJammerState cur = sigma;
  for (std::size_t i = 0; i < ell; ++i) {
    StepOutcome o = step(cur, i);
    if (step_limit && o.bound > *step_limit + 1e-12) {
      throw TelescopeError(detail::concat("telescope_approx: step ", i + 1, " bound ", o.bound,
                                          " exceeds ", *step_limit),
                           i + 1);
    }
    res.step_bounds.push_back(o.bound);
    cur = std::move(o.next);
  }
  res.sigma_prime = cur.density();
  res.approximant = std::move(cur);
  return res;
}

/// ½‖(N^{⊗ℓ})_σ − (N^{⊗ℓ})_σ'‖_◊ bracket; composite Choi dimension capped at 64.
inline DiamondInterval telescope_distance(const Channel& n, std::size_t ell, const DensityOperator& sigma,
                                          const DensityOperator& sigma_prime, const DiamondOptions& opts = {}) {
  std::size_t a = 1, b = 1;
  for (std::size_t i = 0; i < ell; ++i) {
    a *= n.user_in_total();
    b *= n.out_total();
  }
  if (a * b > 64) throw SizeError(detail::concat("telescope_distance: composite dimension ", a * b, " > 64"));
  const Channel block = tensor_power(n, ell);
  return diamond_distance(fix_jammer(block, sigma), fix_jammer(block, sigma_prime), opts);
}

}  // namespace qavc
