#include "nhocp/dynamics.hpp"

#include "nhocp/solver.hpp"

namespace nhocp {

namespace {

void require_sizes(const MechanicalModel& model, const Vec& q, const Vec& y) {
  if (q.size() != model.n || y.size() != model.k) {
    throw std::invalid_argument(model.name + ": state has shape (" + std::to_string(q.size()) + ", " +
                                std::to_string(y.size()) + "), expected (" + std::to_string(model.n) +
                                ", " + std::to_string(model.k) + ")");
  }
}

Mat weight_from(const MechanicalModel& model, const Mat& induced) {
  const Mat inputs = model.inputs();
  const Eigen::PartialPivLU<Mat> lu(inputs);
  if (model.control_mode == ControlMode::EulerLagrange) return lu.solve(induced);
  return lu.inverse();
}

}  // namespace

Vec admissibility_residual(const MechanicalModel& model, const Vec& q, const Vec& y, const Vec& qdot) {
  require_sizes(model, q, y);
  if (qdot.size() != model.n) throw std::invalid_argument(model.name + ": qdot has wrong dimension");
  return qdot - model.basis(q) * y;
}

Vec free_acceleration(const MechanicalModel& model, const LocalGeometry& geo, const Vec& y) {
  (void)model;
  return -geo.quadratic_term(y) - geo.grad_V;
}

Vec free_acceleration(const MechanicalModel& model, const Vec& q, const Vec& y) {
  require_sizes(model, q, y);
  const ContractedGeometry c = contracted_geometry(model, q, y);
  return -c.quadratic - c.grad_V;
}

StateDerivative free_rhs(const MechanicalModel& model, const AdaptedState& state) {
  require_sizes(model, state.q, state.y);
  const LocalGeometry geo = LocalGeometry::at(model, state.q);
  return {geo.rho * state.y, free_acceleration(model, geo, state.y)};
}

Mat control_weight(const MechanicalModel& model, const Vec& q) {
  require_chart(model, q);
  const Mat rho = model.basis(q);
  return weight_from(model, rho.transpose() * model.metric(q) * rho);
}

Mat control_weight(const MechanicalModel& model, const LocalGeometry& geo) {
  return weight_from(model, geo.gd.metric);
}

Mat control_weight(const MechanicalModel& model, const InducedMetric& gd) { return weight_from(model, gd.metric); }

StateDerivative controlled_rhs(const MechanicalModel& model, const AdaptedState& state, const Vec& u) {
  require_sizes(model, state.q, state.y);
  if (u.size() != model.k) throw std::invalid_argument(model.name + ": control has wrong dimension");
  const LocalGeometry geo = LocalGeometry::at(model, state.q);
  Vec ydot = free_acceleration(model, geo, state.y);
  const Vec forcing = model.inputs() * u;
  if (model.control_mode == ControlMode::EulerLagrange) {
    ydot += geo.gd.factor.solve(forcing);
  } else {
    ydot += forcing;
  }
  return {geo.rho * state.y, ydot};
}

Vec inverse_dynamics(const MechanicalModel& model, const Vec& q, const Vec& y, const Vec& ydot) {
  require_sizes(model, q, y);
  const LocalGeometry geo = LocalGeometry::at(model, q);
  return control_weight(model, geo) * (ydot - free_acceleration(model, geo, y));
}

double mechanical_energy(const MechanicalModel& model, const AdaptedState& state) {
  const InducedMetric gd = induced_metric(model, state.q);
  return 0.5 * state.y.dot(gd.metric * state.y) + potential(model, state.q);
}

Trajectory simulate(const MechanicalModel& model, const AdaptedState& state0, double horizon, double h,
                    const ControlLaw& control) {
  require_sizes(model, state0.q, state0.y);
  const int n = model.n;
  const int k = model.k;
  const Rhs rhs = [&model, &control, n, k](double t, const Vec& x) {
    const AdaptedState s{x.head(n), x.tail(k)};
    const StateDerivative d = control ? controlled_rhs(model, s, control(t, s)) : free_rhs(model, s);
    Vec out(n + k);
    out << d.qdot, d.ydot;
    return out;
  };
  Vec x0(n + k);
  x0 << state0.q, state0.y;
  Trajectory traj = integrate_until_failure(rhs, x0, horizon, h, Method::RK4, adapted_guard(model));
  traj.layout = StateLayout::Adapted;
  traj.n = n;
  traj.k = k;
  if (control) {
    for (std::size_t i = 0; i < traj.size(); ++i) traj.controls.push_back(control(traj.times[i], {traj.q(i), traj.y(i)}));
  }
  return traj;
}

Trajectory integrate_free(const MechanicalModel& model, const AdaptedState& state0, double horizon, double h) {
  Trajectory traj = simulate(model, state0, horizon, h);
  if (traj.failure) throw IntegrationError(traj.failure->message, traj.failure->time, traj.failure->chart_exit);
  return traj;
}

double relative_energy_drift(const MechanicalModel& model, const Trajectory& traj) {
  if (traj.empty()) return 0.0;
  const double e0 = mechanical_energy(model, {traj.q(0), traj.y(0)});
  double drift = 0.0;
  for (std::size_t i = 1; i < traj.size(); ++i) {
    drift = std::max(drift, std::abs(mechanical_energy(model, {traj.q(i), traj.y(i)}) - e0));
  }
  return e0 != 0.0 ? drift / std::abs(e0) : drift;
}

double admissibility_defect(const MechanicalModel& model, const Trajectory& traj) {
  const std::size_t count = traj.size();
  if (count < 3) return 0.0;
  double worst = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    Vec qdot;
    if (i == 0) {
      qdot = (-3.0 * traj.q(0) + 4.0 * traj.q(1) - traj.q(2)) / (traj.times[2] - traj.times[0]);
    } else if (i + 1 == count) {
      qdot = (3.0 * traj.q(i) - 4.0 * traj.q(i - 1) + traj.q(i - 2)) / (traj.times[i] - traj.times[i - 2]);
    } else {
      qdot = (traj.q(i + 1) - traj.q(i - 1)) / (traj.times[i + 1] - traj.times[i - 1]);
    }
    worst = std::max(worst, admissibility_residual(model, traj.q(i), traj.y(i), qdot).cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace nhocp
