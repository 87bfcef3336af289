#pragma once

// JSON encoding of matrices, channels and result records. Complex entries
// are [re, im] pairs; every reported number is wrapped as
// {"value": x, "unit": "..."}.

#include "qavc/approx.hpp"
#include "qavc/capacity.hpp"
#include "qavc/derand.hpp"

#include <fstream>
#include <nlohmann/json.hpp>

namespace qavc {

using json = nlohmann::json;

namespace units {
inline constexpr const char* bits = "bits";
inline constexpr const char* bits_per_use = "bits per channel use";
inline constexpr const char* nats = "nats";
inline constexpr const char* probability = "probability";
inline constexpr const char* half_diamond = "half diamond norm";
inline constexpr const char* count = "count";
inline constexpr const char* dimensionless = "dimensionless";
inline constexpr const char* log10 = "log10";
}  // namespace units

inline json quantity(double value, const char* unit) { return json{{"value", value}, {"unit", unit}}; }
inline json quantity(std::size_t value, const char* unit) { return json{{"value", value}, {"unit", unit}}; }

inline json matrix_to_json(const CMatrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back({m(r, c).real(), m(r, c).imag()});
    rows.push_back(std::move(row));
  }
  return rows;
}

inline CMatrix matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty() || !j.front().is_array()) throw ShapeError("matrix must be a non-empty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j.front().size());
  CMatrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) throw ShapeError("matrix rows differ in length");
    for (Eigen::Index c = 0; c < cols; ++c) {
      const auto& e = row[static_cast<std::size_t>(c)];
      if (e.is_number()) {
        m(r, c) = e.get<double>();
      } else if (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number()) {
        m(r, c) = cplx(e[0].get<double>(), e[1].get<double>());
      } else {
        throw ShapeError("matrix entry must be a number or an [re, im] pair");
      }
    }
  }
  return m;
}

inline json vector_to_json(const CVector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back({v(i).real(), v(i).imag()});
  return out;
}

/// {"in_dims": [...], "out_dims": [...], "kraus": [...], "jammer_factors": k}.
/// jammer_factors defaults to 1 when the input has two or more factors.
inline json channel_to_json(const Channel& n) {
  json ks = json::array();
  for (const auto& k : n.kraus()) ks.push_back(matrix_to_json(k));
  return json{{"in_dims", n.in_dims()}, {"out_dims", n.out_dims()}, {"kraus", ks},
              {"jammer_factors", n.jammer_factors()}};
}

inline Channel channel_from_json(const json& j) {
  if (!j.is_object()) throw ShapeError("channel must be a JSON object");
  for (const char* key : {"in_dims", "out_dims", "kraus"}) {
    if (!j.contains(key)) throw ShapeError(detail::concat("channel is missing \"", key, "\""));
  }
  Dims in, out;
  try {
    in = j.at("in_dims").get<Dims>();
    out = j.at("out_dims").get<Dims>();
  } catch (const json::exception&) {
    throw ShapeError("channel dims must be arrays of positive integers");
  }
  std::vector<CMatrix> ks;
  if (!j.at("kraus").is_array()) throw ShapeError("\"kraus\" must be an array of matrices");
  for (const auto& k : j.at("kraus")) ks.push_back(matrix_from_json(k));
  const std::size_t jf = j.contains("jammer_factors") ? j.at("jammer_factors").get<std::size_t>()
                                                      : (in.size() >= 2 ? 1 : 0);
  return Channel(std::move(in), std::move(out), std::move(ks), jf);
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError(detail::concat("cannot open '", path, "'"));
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ShapeError(detail::concat("'", path, "' is not valid JSON: ", e.what()));
  }
}

inline json state_to_json(const DensityOperator& s) { return matrix_to_json(s.matrix()); }

inline json plan_to_json(const DerandPlan& p) {
  return json{{"epsilon", quantity(p.epsilon, units::probability)},
              {"delta", quantity(p.delta, units::probability)},
              {"ell", quantity(p.ell, units::count)},
              {"jammer_dim", quantity(p.jdim, units::count)},
              {"n", quantity(p.n, units::count)},
              {"n_pinsker", quantity(p.n_pinsker, units::count)},
              {"tail_bound", quantity(p.tail_bound, "dimensionless (exponent base e)")},
              {"shared_bits", quantity(p.shared_bits, units::bits)},
              {"shared_bits_budget", quantity(shared_bits_budget(p.delta, p.jdim, p.ell), units::bits)}};
}

template <class Code>
json derand_to_json(const DerandResult<Code>& r) {
  return json{{"plan", plan_to_json(r.plan)},
              {"chosen", r.chosen},
              {"achieved", quantity(r.achieved, units::probability)},
              {"attempts", quantity(r.attempts, units::count)}};
}

inline json ensemble_to_json(const Ensemble& e) {
  json states = json::array();
  for (const auto& s : e.states) states.push_back(state_to_json(s));
  return json{{"probs", e.probs}, {"states", states}};
}

inline json capacity_to_json(const CapacityEstimate& est) {
  json argmax;
  if (const auto* e = std::get_if<Ensemble>(&est.argmax)) {
    argmax = json{{"kind", "ensemble"}, {"ensemble", ensemble_to_json(*e)}};
  } else {
    const auto& p = std::get<PureInput>(est.argmax);
    argmax = json{{"kind", "pure_input"}, {"ref_dim", p.ref_dim}, {"vector", vector_to_json(p.vector)}};
  }
  json trace = json::array();
  for (const auto& t : est.trace) trace.push_back({t.restart, t.iteration, t.value});
  return json{{"ell", quantity(est.ell, units::count)},
              {"value", quantity(est.value_bits_per_use, units::bits_per_use)},
              {"raw_value", quantity(est.raw_bits_per_use, units::bits_per_use)},
              {"grid_gap", quantity(est.grid_gap, units::bits)},
              {"argmax", argmax},
              {"arginf", state_to_json(est.arginf)},
              {"trace_columns", {"restart", "iteration", "inner infimum (bits per block)"}},
              {"trace", trace}};
}

inline json net_to_json(const StateNet& net) {
  const std::size_t a = net.channel.user_in_total(), b = net.channel.out_total();
  json pts = json::array();
  for (const auto& p : net.points) pts.push_back(state_to_json(p));
  return json{{"eta", quantity(net.eta, units::half_diamond)},
              {"size", quantity(net.points.size(), units::count)},
              {"radius", quantity(net.radius, units::half_diamond)},
              {"rounds", quantity(net.rounds, units::count)},
              {"samples_checked", quantity(net.samples_checked, units::count)},
              {"cardinality_bound", quantity(net_size_bound_log10(a, b, net.eta), units::log10)},
              {"choi_eta", quantity(choi_eta(net.eta, a), "half trace norm")},
              {"points", pts}};
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DomainError(detail::concat("cannot write '", path, "'"));
  out << text;
}

}  // namespace qavc
