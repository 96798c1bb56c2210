#ifndef TNU_JSON_IO_HPP
#define TNU_JSON_IO_HPP

// JSON serialization of results, wrapped in a versioned envelope. Doubles are
// written in shortest round-trip form, so re-parsing recovers them exactly;
// non-finite values become null.

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

#include "json.hpp"
#include "tnu/asymptotics.hpp"
#include "tnu/domain.hpp"
#include "tnu/locscatter.hpp"
#include "tnu/oned.hpp"
#include "tnu/scatter.hpp"
#include "tnu/simlab.hpp"
#include "tnu/symspace.hpp"

namespace tnu {

inline constexpr const char* kSchemaVersion = "v1";

using json = nlohmann::json;

namespace io {

inline json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

inline json vector(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number(v(i)));
  return a;
}

inline json matrix(const Matrix& m) {
  json a = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(vector(m.row(i).transpose()));
  return a;
}

inline Matrix matrix_from(const json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows ? static_cast<Eigen::Index>(j.at(0).size()) : 0;
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = j.at(i).at(c).get<double>();
  return m;
}

inline Vector vector_from(const json& j) {
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = j.at(i).get<double>();
  return v;
}

}  // namespace io

inline json to_json(const DomainReport& r) {
  json j;
  j["kind"] = r.kind == DomainReport::Kind::scatter ? "scatter" : "locscatter";
  j["member"] = r.member;
  j["a0"] = r.a0;
  j["worst_subspace_dim"] = r.worst_subspace_dim ? json(*r.worst_subspace_dim) : json(nullptr);
  j["worst_mass"] = r.worst_mass;
  j["threshold"] = r.threshold;
  j["margin"] = r.margin();
  j["witness_points"] = r.witness_points;
  j["exact"] = r.exact;
  return j;
}

inline const char* stop_name(ScatterResult::Stop s) {
  switch (s) {
    case ScatterResult::Stop::gradient: return "gradient";
    case ScatterResult::Stop::step: return "step";
    case ScatterResult::Stop::max_iter: return "max_iter";
  }
  return "max_iter";
}

inline json to_json(const ScatterResult& r) {
  json j;
  j["A"] = io::matrix(r.A.matrix());
  j["iterations"] = r.iterations;
  j["objective"] = io::number(r.objective);
  j["grad_norm"] = io::number(r.grad_norm);
  j["step_norm"] = io::number(r.step_norm);
  j["converged"] = r.converged;
  j["stop"] = stop_name(r.stop);
  return j;
}

inline json to_json(const LocScatEstimate& e) {
  json j;
  j["mu"] = io::vector(e.mu);
  j["Sigma"] = io::matrix(e.Sigma.matrix());
  j["nu"] = e.nu;
  j["gamma_check"] = io::number(e.gamma_check);
  j["weight_check"] = io::number(e.weight_check);
  j["converged"] = e.converged;
  j["iterations"] = e.scatter_diag.iterations;
  j["grad_norm"] = io::number(e.scatter_diag.grad_norm);
  return j;
}

inline json to_json(const AsymptoticCov& c) {
  json j;
  j["parametrization"] = c.parametrization == AsymptoticCov::Parametrization::scatter_A ? "scatter_A"
                                                                                        : "locscatter_muSigma";
  j["d"] = c.d;
  j["S"] = io::matrix(c.S);
  j["rank"] = c.rank;
  j["eigenvalues"] = io::vector(c.eigenvalues);
  if (c.parametrization == AsymptoticCov::Parametrization::locscatter_muSigma) j["mu_rank"] = c.mu_rank;
  return j;
}

inline json to_json(const OneDEstimate& e) {
  json j;
  j["mu"] = e.mu;
  j["sigma"] = e.sigma;
  j["boundary"] = e.boundary;
  if (e.atom) {
    j["atom"] = {{"location", e.atom->first}, {"mass", e.atom->second}};
  } else {
    j["atom"] = nullptr;
  }
  return j;
}

inline json to_json(const McReport& r) {
  json j;
  j["estimator"] = r.estimator == EstimatorKind::scatter ? "scatter" : "locscatter";
  j["n"] = r.n;
  j["reps"] = r.reps;
  j["functional"] = io::vector(r.functional);
  j["empirical_cov"] = io::matrix(r.empirical_cov);
  j["target_cov"] = to_json(r.target_cov);
  j["max_rel_err"] = io::number(r.max_rel_err);
  j["normality_stat"] = io::vector(r.normality_stat);
  j["existence_rate"] = r.existence_rate;
  j["solver_failures"] = r.solver_failures;
  j["flagged"] = r.flagged;
  j["surrogate_truth"] = r.surrogate_truth;
  return j;
}

struct Envelope {
  std::string command;
  std::string status = "ok";
  double timing_ms = 0.0;
  json payload = json::object();
  std::vector<std::string> warnings;
  std::string error;
};

inline json to_json(const Envelope& e) {
  json j;
  j["version"] = kSchemaVersion;
  j["command"] = e.command;
  j["status"] = e.status;
  j["timing_ms"] = e.timing_ms;
  j["payload"] = e.payload;
  j["warnings"] = e.warnings;
  if (!e.error.empty()) j["error"] = e.error;
  return j;
}

}  // namespace tnu

#endif  // TNU_JSON_IO_HPP
