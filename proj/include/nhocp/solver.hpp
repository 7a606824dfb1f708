#pragma once

#include "nhocp/ocp.hpp"
#include "nhocp/trajectory.hpp"

#include <functional>
#include <string>
#include <vector>

namespace nhocp {

enum class Method { RK4, Heun, Euler };

using Rhs = std::function<Vec(double t, const Vec& x)>;
/// Throws ChartError when a state leaves the admissible domain.
using StateGuard = std::function<void(const Vec& x)>;

/// Number of uniform steps used for a horizon; the effective step is horizon / steps.
int step_count(double horizon, double h);

/// Fixed-step explicit integration on a uniform grid. Stops at the first
/// non-finite state, chart exit or rhs failure and records it in
/// Trajectory::failure; samples up to that time are kept.
Trajectory integrate_until_failure(const Rhs& rhs, const Vec& x0, double horizon, double h, Method method,
                                   const StateGuard& guard = {});

/// As integrate_until_failure, but throws IntegrationError on failure.
Trajectory integrate(const Rhs& rhs, const Vec& x0, double horizon, double h, Method method,
                     const StateGuard& guard = {});

StateGuard adapted_guard(const MechanicalModel& model);
StateGuard extremal_guard(const MechanicalModel& model);

/// Hamilton's equations on T*D as a packed ODE right-hand side.
Rhs extremal_rhs(const MechanicalModel& model, const CostModel& cost);

/// Integrates the extremal flow and fills controls and cost.
Trajectory integrate_extremal(const MechanicalModel& model, const CostModel& cost, const ExtremalState& start,
                              double horizon, double h, Method method = Method::RK4);

/// Reconstructs u along an extremal and accumulates J by composite Simpson.
void attach_controls_and_cost(const MechanicalModel& model, const CostModel& cost, Trajectory& extremal);

/// Composite Simpson on a uniform grid (3/8 rule closes an odd interval count).
double simpson(const std::vector<double>& values, double h);
double trapezoid(const std::vector<double>& values, double h);

/// Running cost samples along an extremal with attached controls.
std::vector<double> running_cost_samples(const MechanicalModel& model, const CostModel& cost,
                                         const Trajectory& extremal);

struct BoundaryConditions {
  AdaptedState start;
  AdaptedState target;
  double horizon = 1.0;
};

/// How shoot() seeds the costates when no explicit guess is given.
enum class CostateGuess {
  Zero,
  /// Frame frozen at q(0), connection and cost potential dropped; the
  /// resulting linear endpoint problem is solved in the least-norm sense.
  Linearized,
};

struct ShootingConfig {
  double h = 1e-3;
  Method method = Method::RK4;
  double newton_tol = 1e-10;
  int newton_max_iter = 50;
  double fd_step = 1e-6;
  double damping = 0.5;
  double min_step = 1e-6;
  int segments = 1;
  Vec initial_costate_guess;  ///< n + k entries; empty defers to guess
  CostateGuess guess = CostateGuess::Zero;
  bool parallel_jacobian = true;
};

struct ShootingDiagnostics {
  bool converged = false;
  int iterations = 0;
  std::vector<double> residual_history;  ///< max-norm residual per iterate
  std::vector<double> step_history;      ///< accepted line-search factors
  double residual = 0.0;
  double trapezoid_cost = 0.0;
  double hamiltonian_drift = 0.0;  ///< max |H(t) - H(0)| / max(1, |H(0)|)
  std::string message;
};

struct ShootingResult {
  Trajectory trajectory;  ///< extremal layout, with controls and cost
  Vec initial_costates;   ///< (p_base(0), p_fiber(0))
  ShootingDiagnostics diagnostics;
};

/// Initial costates (p_base, p_fiber) of the frozen-frame linearization.
Vec linearized_costate_guess(const MechanicalModel& model, const BoundaryConditions& bc);

/// Solves the two-point boundary value problem on D by Newton iteration on the
/// initial costates. Never throws for non-convergence; inspect diagnostics.
ShootingResult shoot(const MechanicalModel& model, const CostModel& cost, const BoundaryConditions& bc,
                     const ShootingConfig& cfg);

struct SweepOptions {
  bool warm_start = true;
  int jobs = 1;                  ///< > 1 only honoured without warm starts
  int max_continuation_halvings = 8;
};

struct SweepPoint {
  double parameter = 0.0;
  bool converged = false;
  double cost = 0.0;
  double min_distance = 0.0;
  int iterations = 0;
  int continuation_solves = 0;  ///< intermediate parameters solved to reach this one
  ShootingResult result;
  std::string message;
};

/// Solves a family of problems indexed by a scalar parameter, warm-starting
/// each from the previous converged costates. Without warm starts each
/// parameter is solved from cfg and, failing that, from the linearized guess. min_distance is the minimum of
/// distance(q) along each extremal.
std::vector<SweepPoint> sweep(const MechanicalModel& model, const std::function<CostModel(double)>& cost_family,
                              const BoundaryConditions& bc, const ShootingConfig& cfg,
                              const std::vector<double>& parameters,
                              const std::function<double(const Vec&)>& distance, const SweepOptions& options = {});

}  // namespace nhocp
