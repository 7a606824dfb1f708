#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace nhocp {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Dense rank-3 array with row-major flat storage, indexed (a, b, c).
class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(int d0, int d1, int d2)
      : d0_(d0), d1_(d1), d2_(d2),
        data_(static_cast<std::size_t>(d0) * d1 * d2, 0.0) {}

  double& operator()(int a, int b, int c) {
    return data_[(static_cast<std::size_t>(a) * d1_ + b) * d2_ + c];
  }
  double operator()(int a, int b, int c) const {
    return data_[(static_cast<std::size_t>(a) * d1_ + b) * d2_ + c];
  }

  int dim0() const { return d0_; }
  int dim1() const { return d1_; }
  int dim2() const { return d2_; }

  double max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
  }
  Tensor3& operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
  }
  friend Tensor3 operator*(Tensor3 lhs, double s) { return lhs *= s; }
  friend Tensor3 operator-(Tensor3 lhs, const Tensor3& rhs) {
    for (std::size_t i = 0; i < lhs.data_.size(); ++i) lhs.data_[i] -= rhs.data_[i];
    return lhs;
  }

 private:
  int d0_ = 0, d1_ = 0, d2_ = 0;
  std::vector<double> data_;
};

/// Configuration outside the model's declared coordinate chart.
class ChartError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// The induced metric on the distribution is not positive definite.
class SingularMetricError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The Legendre map could not be inverted at a point.
class LegendreError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Failure during time stepping; carries the time of the last good sample.
class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& what, double time, bool chart_exit)
      : std::runtime_error(what), time_(time), chart_exit_(chart_exit) {}
  double time() const { return time_; }
  bool chart_exit() const { return chart_exit_; }

 private:
  double time_;
  bool chart_exit_;
};

/// Invalid model, cost or solver parameters.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline bool all_finite(const Vec& v) { return v.allFinite(); }

}  // namespace nhocp
