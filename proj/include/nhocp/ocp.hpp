#pragma once

#include "nhocp/dynamics.hpp"

#include <algorithm>
#include <functional>
#include <optional>
#include <string>

namespace nhocp {

/// Configuration-only term added to the running cost, weight * V(q).
struct StateCostTerm {
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;
  double weight = 0.5;
};

/// Running cost C(q, y, u) + weight * V(q).
///
/// The state derivatives dq/dy of the control part are optional and fall back
/// to central differences. With unit_quadratic set the control part must have
/// dC/du = u, which enables a closed-form Legendre inversion.
struct CostModel {
  std::string name;
  std::function<double(const Vec& q, const Vec& y, const Vec& u)> running_cost;
  std::function<Vec(const Vec& q, const Vec& y, const Vec& u)> du_cost;
  std::function<Mat(const Vec& q, const Vec& y, const Vec& u)> duu_cost;
  std::function<Vec(const Vec& q, const Vec& y, const Vec& u)> dq_cost;
  std::function<Vec(const Vec& q, const Vec& y, const Vec& u)> dy_cost;
  bool unit_quadratic = false;
  std::optional<StateCostTerm> potential_term;
};

/// C = 1/2 |u|^2.
CostModel quadratic_cost();

/// Running cost including the potential term.
double total_cost(const CostModel& cost, const Vec& q, const Vec& y, const Vec& u);

/// Point (q, y, ydot) of the second-order constraint set; qdot = rho y implicitly.
struct SecondOrderPoint {
  Vec q;
  Vec y;
  Vec ydot;
};

/// Point (q, y, p_i, p_A) of the cotangent bundle of D.
struct ExtremalState {
  Vec q;
  Vec y;
  Vec p_base;
  Vec p_fiber;

  Vec pack() const;
  static ExtremalState unpack(const Vec& x, int n, int k);
};

/// Local coordinates of a point in T*TD.
struct SigmaPoint {
  Vec q, y, qdot, ydot;
  Vec mu_base, mu_fiber;
  Vec gamma_base, gamma_fiber;
};

/// Value and first derivatives of the optimal-control Lagrangian at a point.
struct LagrangianJet {
  double value = 0.0;
  Vec dq;          ///< dL/dq^i
  Vec dy;          ///< dL/dy^A
  Vec dydot;       ///< dL/dydot^A
  Mat hessian;     ///< d2L/dydot^A dydot^B
  Vec control;     ///< u(q, y, ydot)
};

/// L(q, y, ydot) = C(q, y, u(q, y, ydot)).
double ocp_lagrangian(const MechanicalModel& model, const CostModel& cost, const SecondOrderPoint& pt);

LagrangianJet lagrangian_jet(const MechanicalModel& model, const CostModel& cost, const SecondOrderPoint& pt);

struct SigmaResidual {
  Vec base;           ///< mu_i + gamma_j d_i rho_A^j y^A - dL/dq^i
  Vec fiber;          ///< mu_A + gamma_j rho_A^j - dL/dy^A
  Vec momentum;       ///< gamma_A - dL/dydot^A
  Vec admissibility;  ///< qdot - rho y
  double max_abs() const;
};

SigmaResidual sigma_residual(const MechanicalModel& model, const CostModel& cost, const SigmaPoint& pt);

ExtremalState legendre_transform(const MechanicalModel& model, const CostModel& cost, const SecondOrderPoint& pt,
                                 const Vec& gamma_base);

struct RegularityReport {
  double lagrangian_det = 0.0;  ///< det(d2L/dydot dydot)
  double cost_det = 0.0;        ///< det(d2C/du du)
  bool regular = false;
  std::string note;
};

RegularityReport regularity_check(const MechanicalModel& model, const CostModel& cost, const SecondOrderPoint& pt);

/// ydot with dL/dydot(q, y, ydot) = p_fiber.
Vec invert_legendre(const MechanicalModel& model, const CostModel& cost, const Vec& q, const Vec& y,
                    const Vec& p_fiber);

double hamiltonian(const MechanicalModel& model, const CostModel& cost, const ExtremalState& ex);

ExtremalState hamilton_rhs(const MechanicalModel& model, const CostModel& cost, const ExtremalState& ex);

/// Residual of the multiplier form of the extremal equations along a sampled
/// path. Time derivatives use central finite-difference stencils of
/// stencil_points nodes (3, 5, 7 or 9), shifted inwards near the ends.
struct ExtremalResidual {
  Mat base;           ///< N x n: lambda_dot - dL/dq + lambda_j d_i rho_A^j y^A
  Mat fiber;          ///< N x k: d/dt dL/dydot - dL/dy + rho^T lambda
  Mat admissibility;  ///< N x n: qdot - rho y
  double max_base = 0.0;
  double max_fiber = 0.0;
  double max_admissibility = 0.0;
  /// max residual on the 2h subgrid over max residual on the full grid;
  /// well above 1 when the residual is truncation error.
  double coarsening_ratio = 0.0;
  bool grid_limited = false;
  double max_abs() const { return std::max({max_base, max_fiber, max_admissibility}); }
};

ExtremalResidual lagrangian_extremal_residual(const MechanicalModel& model, const CostModel& cost,
                                              const std::vector<double>& times, const std::vector<Vec>& q,
                                              const std::vector<Vec>& y, const std::vector<Vec>& lambda,
                                              int stencil_points = 9);

/// Convenience overload reading (q, y, lambda := p_base) off an extremal trajectory.
ExtremalResidual lagrangian_extremal_residual(const MechanicalModel& model, const CostModel& cost,
                                              const Trajectory& extremal, int stencil_points = 9);

}  // namespace nhocp
