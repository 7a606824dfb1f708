#pragma once

#include "nhocp/geometry.hpp"
#include "nhocp/trajectory.hpp"

#include <functional>

namespace nhocp {

/// Time derivative of an adapted state.
struct StateDerivative {
  Vec qdot;
  Vec ydot;
};

/// qdot - rho(q) y; zero iff the velocity is admissible.
Vec admissibility_residual(const MechanicalModel& model, const Vec& q, const Vec& y, const Vec& qdot);

/// Unforced acceleration f(q, y) = -Gamma^C_AB y^A y^B - grad V.
Vec free_acceleration(const MechanicalModel& model, const LocalGeometry& geo, const Vec& y);
Vec free_acceleration(const MechanicalModel& model, const Vec& q, const Vec& y);

StateDerivative free_rhs(const MechanicalModel& model, const AdaptedState& state);
StateDerivative controlled_rhs(const MechanicalModel& model, const AdaptedState& state, const Vec& u);

/// Linear map W with u = W (ydot - f): B^{-1} (Normalized) or B^{-1} G^D (EulerLagrange).
/// Needs only the induced metric, so it stays defined where G^D is singular.
Mat control_weight(const MechanicalModel& model, const Vec& q);
Mat control_weight(const MechanicalModel& model, const LocalGeometry& geo);
Mat control_weight(const MechanicalModel& model, const InducedMetric& gd);

/// Control that produces the acceleration ydot.
Vec inverse_dynamics(const MechanicalModel& model, const Vec& q, const Vec& y, const Vec& ydot);

/// 1/2 G^D(y, y) + V(q).
double mechanical_energy(const MechanicalModel& model, const AdaptedState& state);

/// Unforced motion from state0 over [0, T] with RK4 at step h.
/// Throws IntegrationError on chart exit or blow-up.
Trajectory integrate_free(const MechanicalModel& model, const AdaptedState& state0, double horizon, double h);

/// Feedback law u(t, state); empty means u = 0.
using ControlLaw = std::function<Vec(double t, const AdaptedState& state)>;

/// Controlled (or free) motion that stops at a chart exit or blow-up and
/// records it in Trajectory::failure instead of throwing. Controls are
/// attached when a law is given.
Trajectory simulate(const MechanicalModel& model, const AdaptedState& state0, double horizon, double h,
                    const ControlLaw& control = {});

/// max_t |E(t) - E(0)| / |E(0)| (absolute when E(0) = 0) along an adapted trajectory.
double relative_energy_drift(const MechanicalModel& model, const Trajectory& traj);

/// max |qdot - rho(q) y| with qdot from second-order differences of the samples.
double admissibility_defect(const MechanicalModel& model, const Trajectory& traj);

}  // namespace nhocp
