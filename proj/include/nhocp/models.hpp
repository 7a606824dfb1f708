#pragma once

#include "nhocp/ocp.hpp"
#include "nhocp/solver.hpp"

#include <array>

namespace nhocp::models {

/// Chaplygin sleigh on R^2 x S^1, q = (x, y, theta).
struct SleighParams {
  double m = 1.0;  ///< mass
  double J = 1.0;  ///< inertia about the contact point
  double a = 0.5;  ///< center-of-mass offset from the knife edge
  double b() const { return a * a * m / J; }
};

/// Continuously variable transmission, q = (theta1, theta2, x), 0 < x < 1.
struct CvtParams {
  double m = 1.0;   ///< belt-slider mass
  double J1 = 1.0;  ///< driving-pulley inertia
  double J2 = 1.0;  ///< driven-pulley inertia

  double A(double x) const { return J1 * (1.0 - x) - J2 * x; }
  double B(double x) const { return (1.0 - x) * (1.0 - x) * J1 + J2 * x * x; }
};

/// Inverse-square navigation potential V = kappa / |(x, y) - center|^2.
struct ObstacleParams {
  double kappa = 0.0;
  std::array<double, 2> center{0.5, 0.5};
};

void validate(const SleighParams& p);
void validate(const CvtParams& p);
void validate(const ObstacleParams& p);

/// a = 0 is accepted so the degenerate offset can be examined; the Legendre
/// map is then singular.
MechanicalModel chaplygin_sleigh(const SleighParams& p);
MechanicalModel cvt(const CvtParams& p);

/// Determinant of the Legendre Hessian for the quadratic cost: a^4 / J^4 and
/// B(x)^2 / m^2.
double sleigh_regularity_determinant(const SleighParams& p);
double cvt_regularity_determinant(const CvtParams& p, double x);

/// Distance from the planar position of a sleigh configuration to the center.
double obstacle_distance(const ObstacleParams& o, const Vec& q);
double obstacle_potential(const ObstacleParams& o, const Vec& q);
Vec obstacle_potential_gradient(const ObstacleParams& o, const Vec& q);

/// 1/2 |u|^2 + 1/2 V(x, y). With kappa = 0 this is quadratic_cost().
CostModel sleigh_with_obstacle(const SleighParams& p, const ObstacleParams& o);

/// Zero-multiplier sleigh extremal, constants c3..c8.
struct SleighExtremalConstants {
  double c3 = 0.0, c4 = 0.0, c5 = 0.0, c6 = 0.0, c7 = 0.0, c8 = 0.0;
};

struct SleighExtremalSample {
  double theta = 0.0, x = 0.0, y = 0.0;
  double y1 = 0.0, y2 = 0.0;
  double u1 = 0.0, u2 = 0.0;
};

/// Closed form for theta, y1, y2, u1, u2; x and y by adaptive Simpson
/// quadrature from x(0) = x0, y(0) = y0.
SleighExtremalSample sleigh_analytic_extremal(const SleighExtremalConstants& c, const SleighParams& p, double t,
                                              double x0 = 0.0, double y0 = 0.0);

/// Constants of the extremal through the given initial extremal state, which
/// must have p_x = p_y = 0.
SleighExtremalConstants sleigh_constants_from_state(const SleighParams& p, const ExtremalState& start);

/// Boundary data of the obstacle problem: rest at the origin to rest at (1, 1),
/// theta = 0 at both ends, T = 1.
BoundaryConditions sleigh_obstacle_boundary();

/// Initial costates (p_x, p_y, p_theta, p1, p2) for the obstacle problem with
/// default parameters. Deliberately off the symmetric kappa = 0 extremal,
/// which runs through the obstacle center.
Vec sleigh_obstacle_costate_guess();

/// Default obstacle sweep values.
std::vector<double> default_kappas();

}  // namespace nhocp::models
