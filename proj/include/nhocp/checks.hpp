#pragma once

// Invariant suite: geometric identities, conservation laws, cross-formulation
// residuals, symplecticity and regularity. Each check measures one scalar
// and compares it with a tolerance.

#include "nhocp/solver.hpp"

#include <cstdint>
#include <optional>

namespace nhocp::checks {

enum class Status {
  Passed,
  ToleranceMiss,  ///< above the requested tolerance, within the built-in one
  FormulaError,   ///< above the built-in tolerance
  Degenerate,     ///< singular metric or Legendre map
  Error,          ///< the check could not run
};

const char* to_string(Status s);

struct CheckResult {
  std::string name;
  double measured = 0.0;
  double tolerance = 0.0;
  double default_tolerance = 0.0;
  Status status = Status::Error;
  std::string detail;

  bool passed() const { return status == Status::Passed; }
};

struct CheckOptions {
  std::optional<double> tolerance;  ///< replaces every built-in tolerance
  int samples = 100;
  std::uint64_t seed = 20240601;
  /// Scale of random adapted velocities and costates.
  double velocity_scale = 0.5;
  double costate_scale = 0.5;
};

/// Classification of a measurement against the requested and built-in tolerances.
CheckResult classify(std::string name, double measured, double default_tolerance, const CheckOptions& opts,
                     std::string detail = {});

/// P^2 = P, G(Pv, Qw) = 0, bracket skew-symmetry, connection symmetry,
/// metricity and grad duality over random chart points.
std::vector<CheckResult> geometry_identities(const MechanicalModel& model, const CheckOptions& opts);

/// Relative drift of 1/2 G^D(y, y) + V along free motion, RK4, T = 10, h = 1e-3.
CheckResult energy_conservation(const MechanicalModel& model, const CheckOptions& opts);

/// Relative drift of H along an extremal.
CheckResult hamiltonian_conservation(const MechanicalModel& model, const CostModel& cost, const ExtremalState& start,
                                     double horizon, double h, const CheckOptions& opts);

/// Multiplier-form and Sigma_L residuals of the extremal from start, sampled
/// on a grid of spacing h. The flow is integrated refine times finer so the
/// residual measures the formulations rather than integration error.
std::vector<CheckResult> cross_formulation(const MechanicalModel& model, const CostModel& cost,
                                           const ExtremalState& start, double horizon, double h, int refine,
                                           const CheckOptions& opts);

/// max |J_T^T Omega J_T - Omega| of the finite-difference monodromy matrix.
CheckResult symplectic_monodromy(const MechanicalModel& model, const CostModel& cost, const ExtremalState& start,
                                 double horizon, double h, double perturbation, const CheckOptions& opts);

/// Largest relative deviation of regularity_check from expected(q, y) over
/// random points; Degenerate when the Legendre map is singular.
CheckResult regularity_determinant(const MechanicalModel& model, const CostModel& cost,
                                   const std::function<double(const Vec& q)>& expected, const CheckOptions& opts);

/// Random extremal start inside the chart: q from the model sampler, y and
/// p normal with the option scales.
ExtremalState random_extremal_start(const MechanicalModel& model, std::mt19937_64& rng, const CheckOptions& opts);

/// Boundary data generated by integrating the extremal flow from known costates.
struct PlantedInstance {
  BoundaryConditions bc;
  Vec costates;  ///< (p_base(0), p_fiber(0)) that produced bc.target
};

/// Draws random extremal starts until one stays in the chart over the
/// horizon; the target is its RK4 endpoint on step h.
PlantedInstance planted_instance(const MechanicalModel& model, const CostModel& cost, std::mt19937_64& rng,
                                 const CheckOptions& opts, double horizon, double h);

/// Whole suite for one model and cost. expected_det may be empty.
std::vector<CheckResult> run_suite(const MechanicalModel& model, const CostModel& cost,
                                   const std::function<double(const Vec& q)>& expected_det, const CheckOptions& opts);

}  // namespace nhocp::checks
