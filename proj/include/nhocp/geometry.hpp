#pragma once

#include "nhocp/core.hpp"

#include <Eigen/Cholesky>

#include <functional>
#include <random>
#include <string>
#include <vector>

namespace nhocp {

/// How the inputs u^A enter the adapted equations of motion.
///
/// Normalized:     ydot = f(q, y) + B u
/// EulerLagrange:  G^D (ydot - f(q, y)) = B u
///
/// where f is the free acceleration and B is the model's input map.
enum class ControlMode { Normalized, EulerLagrange };

/// A nonholonomic mechanical system (G, V, D) in one coordinate chart,
/// with the distribution D spanned by the columns of rho(q).
///
/// Derivative callbacks are optional; missing ones fall back to
/// fourth-order central differences.
struct MechanicalModel {
  std::string name;
  int n = 0;  ///< dim Q
  int k = 0;  ///< rank D

  std::function<Mat(const Vec&)> metric;              ///< n x n, G_ij
  std::function<Tensor3(const Vec&)> metric_jacobian;  ///< (i, j, l) = dG_ij/dq^l
  std::function<Mat(const Vec&)> basis;               ///< n x k, column A = e_A
  std::function<Tensor3(const Vec&)> basis_jacobian;  ///< (i, A, j) = d rho_A^i / dq^j
  std::function<double(const Vec&)> potential;        ///< V(q); empty means V = 0
  std::function<Vec(const Vec&)> potential_gradient;  ///< dV/dq^i

  ControlMode control_mode = ControlMode::Normalized;
  Mat input_map;  ///< k x k invertible; empty means identity

  std::function<bool(const Vec&)> chart_guard;                ///< empty means everywhere
  std::function<Vec(std::mt19937_64&)> sample_configuration;  ///< draws q inside the chart

  std::vector<std::string> coordinate_names;  ///< size n
  std::vector<std::string> velocity_names;    ///< size k

  bool in_chart(const Vec& q) const { return !chart_guard || chart_guard(q); }
  Mat inputs() const { return input_map.size() == 0 ? Mat(Mat::Identity(k, k)) : input_map; }
};

/// Configuration plus adapted velocities, coordinates (q^i, y^A) on D.
struct AdaptedState {
  Vec q;
  Vec y;
};

/// Throws ChartError if q is outside the model chart or has the wrong size.
void require_chart(const MechanicalModel& model, const Vec& q);

/// Analytic basis derivative if the model has one, else central differences.
Tensor3 basis_jacobian(const MechanicalModel& model, const Vec& q);
Tensor3 metric_jacobian(const MechanicalModel& model, const Vec& q);
double potential(const MechanicalModel& model, const Vec& q);
Vec potential_gradient(const MechanicalModel& model, const Vec& q);

struct InducedMetric {
  Mat metric;   ///< (G^D)_AB = rho^T M rho
  Mat inverse;  ///< (G^D)^AB
  Eigen::LLT<Mat> factor;
};

InducedMetric induced_metric(const MechanicalModel& model, const Vec& q);

/// G-orthogonal projector onto D: P = rho (rho^T M rho)^{-1} rho^T M.
Mat orthogonal_projector(const MechanicalModel& model, const Vec& q);
/// Q = I - P.
Mat complementary_projector(const MechanicalModel& model, const Vec& q);

/// Adapted components c^C of [[e_A, e_B]] = P[e_A, e_B].
Vec nonholonomic_bracket(const MechanicalModel& model, int a, int b, const Vec& q);

/// Christoffel symbols, (A, B, C) = Gamma^A_BC with nabla_{e_B} e_C = Gamma^A_BC e_A.
Tensor3 christoffel(const MechanicalModel& model, const Vec& q);

/// Adapted components of grad V with respect to G^D.
Vec grad_potential(const MechanicalModel& model, const Vec& q);

/// Every frame quantity at one configuration, computed once.
///
/// All geometry operations above are thin wrappers over this; the dynamics and
/// optimal-control layers use it directly to avoid recomputation.
struct LocalGeometry {
  Vec q;
  Mat metric;         ///< M, n x n
  Tensor3 dmetric;    ///< dM_ij/dq^l
  Mat rho;            ///< n x k
  Tensor3 drho;       ///< d rho_A^i / dq^j, stored (i, A, j)
  InducedMetric gd;   ///< G^D and its factorisation
  Tensor3 bracket;    ///< (C, A, B) = c^C_AB
  Tensor3 gamma;      ///< (A, B, C) = Gamma^A_BC
  Vec dV;             ///< dV/dq^i
  Vec grad_V;         ///< (G^D)^{CB} rho_B^i dV/dq^i

  static LocalGeometry at(const MechanicalModel& model, const Vec& q);

  /// e_A(f) for a function with coordinate gradient df.
  double frame_derivative(int a, const Vec& df) const { return rho.col(a).dot(df); }
  /// Gamma^C_AB y^A y^B.
  Vec quadratic_term(const Vec& y) const;
};

/// Just what the unforced acceleration needs at one (q, y): G^D, the
/// contraction Gamma^C_AB y^A y^B and grad V. The connection formula is
/// contracted with y directly, so no symbols are formed; this is the cheap
/// path for repeated evaluation at perturbed configurations.
struct ContractedGeometry {
  InducedMetric gd;  ///< inverse left empty
  Vec quadratic;
  Vec grad_V;
};

ContractedGeometry contracted_geometry(const MechanicalModel& model, const Vec& q, const Vec& y);

}  // namespace nhocp
