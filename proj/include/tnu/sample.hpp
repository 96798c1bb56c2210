#ifndef TNU_SAMPLE_HPP
#define TNU_SAMPLE_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "tnu/errors.hpp"
#include "tnu/symspace.hpp"

namespace tnu {

/// A discrete law: n weighted points in R^d, weights summing to one.
class EmpiricalSample {
 public:
  static constexpr double kWeightSumTolerance = 1e-12;

  EmpiricalSample() = default;

  /// Rows of `points` are observations; weights are normalized to sum to one.
  EmpiricalSample(Matrix points, Vector weights) : points_(std::move(points)), weights_(std::move(weights)) {
    if (points_.rows() < 1 || points_.cols() < 1) throw ParameterError("EmpiricalSample: empty sample");
    if (weights_.size() != points_.rows()) throw ParameterError("EmpiricalSample: weight count mismatch");
    if (!points_.allFinite()) throw ParameterError("EmpiricalSample: non-finite point");
    if (!weights_.allFinite() || weights_.minCoeff() < 0.0) {
      throw ParameterError("EmpiricalSample: weights must be finite and nonnegative");
    }
    const double total = weights_.sum();
    if (!(total > 0.0)) throw ParameterError("EmpiricalSample: total weight is zero");
    weights_ /= total;
  }

  static EmpiricalSample uniform(Matrix points) {
    const Eigen::Index n = points.rows();
    return EmpiricalSample(std::move(points), Vector::Constant(n, 1.0 / static_cast<double>(n)));
  }

  /// One-dimensional convenience constructor.
  static EmpiricalSample from_values(const std::vector<double>& xs, std::vector<double> ws = {}) {
    Matrix pts(static_cast<Eigen::Index>(xs.size()), 1);
    for (std::size_t i = 0; i < xs.size(); ++i) pts(static_cast<Eigen::Index>(i), 0) = xs[i];
    if (ws.empty()) return uniform(std::move(pts));
    if (ws.size() != xs.size()) throw ParameterError("from_values: weight count mismatch");
    return EmpiricalSample(std::move(pts), Eigen::Map<const Vector>(ws.data(), static_cast<Eigen::Index>(ws.size())));
  }

  Eigen::Index dim() const { return points_.cols(); }
  Eigen::Index size() const { return points_.rows(); }
  const Matrix& points() const { return points_; }
  const Vector& weights() const { return weights_; }
  Vector point(Eigen::Index i) const { return points_.row(i).transpose(); }
  double weight(Eigen::Index i) const { return weights_(i); }

  /// Image law under y -> M y + v.
  EmpiricalSample affine_image(const Matrix& m, const Vector& v) const {
    if (m.cols() != dim() || v.size() != m.rows()) throw ParameterError("affine_image: dimension mismatch");
    Matrix out = (points_ * m.transpose()).rowwise() + v.transpose();
    return EmpiricalSample(std::move(out), weights_);
  }
  EmpiricalSample linear_image(const Matrix& m) const { return affine_image(m, Vector::Zero(m.rows())); }

  /// (1 - eps) * this + eps * delta_y
  EmpiricalSample contaminated(double eps, const Vector& y) const {
    if (!(eps >= 0.0 && eps <= 1.0)) throw ParameterError("contaminated: eps outside [0,1]");
    if (y.size() != dim()) throw ParameterError("contaminated: point dimension mismatch");
    Matrix pts(size() + 1, dim());
    pts.topRows(size()) = points_;
    pts.row(size()) = y.transpose();
    Vector w(size() + 1);
    w.head(size()) = (1.0 - eps) * weights_;
    w(size()) = eps;
    return EmpiricalSample(std::move(pts), std::move(w));
  }

  /// Merges exactly coincident points, drops zero weights, sorts points
  /// lexicographically. `origin` (optional) receives, for each output atom,
  /// the smallest input index mapped to it.
  EmpiricalSample compressed(std::vector<Eigen::Index>* origin = nullptr) const {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < size(); ++i)
      if (weights_(i) > 0.0) idx.push_back(i);
    auto less = [&](Eigen::Index a, Eigen::Index b) {
      for (Eigen::Index c = 0; c < dim(); ++c) {
        if (points_(a, c) != points_(b, c)) return points_(a, c) < points_(b, c);
      }
      return a < b;
    };
    std::sort(idx.begin(), idx.end(), less);
    std::vector<Eigen::Index> heads;
    std::vector<double> mass;
    std::vector<Eigen::Index> first;
    for (Eigen::Index i : idx) {
      if (!heads.empty() && points_.row(heads.back()) == points_.row(i)) {
        mass.back() += weights_(i);
        first.back() = std::min(first.back(), i);
      } else {
        heads.push_back(i);
        mass.push_back(weights_(i));
        first.push_back(i);
      }
    }
    Matrix pts(static_cast<Eigen::Index>(heads.size()), dim());
    Vector w(static_cast<Eigen::Index>(heads.size()));
    for (std::size_t k = 0; k < heads.size(); ++k) {
      pts.row(static_cast<Eigen::Index>(k)) = points_.row(heads[k]);
      w(static_cast<Eigen::Index>(k)) = mass[k];
    }
    if (origin) *origin = std::move(first);
    return EmpiricalSample(std::move(pts), std::move(w));
  }

  /// Weighted mean and (uncentered) second moment.
  Vector mean() const { return points_.transpose() * weights_; }
  Matrix second_moment() const { return points_.transpose() * weights_.asDiagonal() * points_; }

 private:
  Matrix points_;
  Vector weights_;
};

}  // namespace tnu

#endif  // TNU_SAMPLE_HPP
