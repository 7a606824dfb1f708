#include "nhocp/solver.hpp"

#include "nhocp/parallel.hpp"

#include <Eigen/QR>

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

namespace nhocp {

int step_count(double horizon, double h) {
  if (!(horizon > 0.0) || !(h > 0.0) || h > horizon * (1.0 + 1e-12)) {
    throw std::invalid_argument("integration needs horizon > 0 and 0 < h <= horizon");
  }
  const double ratio = horizon / h;
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) <= 1e-9 * std::max(1.0, ratio)) return static_cast<int>(rounded);
  return static_cast<int>(std::ceil(ratio));
}

namespace {

Vec step_once(const Rhs& rhs, double t, const Vec& x, double h, Method method) {
  switch (method) {
    case Method::Euler:
      return x + h * rhs(t, x);
    case Method::Heun: {
      const Vec k1 = rhs(t, x);
      const Vec k2 = rhs(t + h, x + h * k1);
      return x + 0.5 * h * (k1 + k2);
    }
    case Method::RK4:
    default: {
      const Vec k1 = rhs(t, x);
      const Vec k2 = rhs(t + 0.5 * h, x + 0.5 * h * k1);
      const Vec k3 = rhs(t + 0.5 * h, x + 0.5 * h * k2);
      const Vec k4 = rhs(t + h, x + h * k3);
      return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
  }
}

}  // namespace

Trajectory integrate_until_failure(const Rhs& rhs, const Vec& x0, double horizon, double h, Method method,
                                   const StateGuard& guard) {
  const int steps = step_count(horizon, h);
  const double dt = horizon / steps;
  Trajectory traj;
  traj.times.reserve(static_cast<std::size_t>(steps) + 1);
  traj.states.reserve(static_cast<std::size_t>(steps) + 1);

  auto fail = [&](double t, bool chart, const std::string& what) {
    traj.failure = IntegrationFailure{t, chart, what};
    return traj;
  };

  try {
    if (!x0.allFinite()) return fail(0.0, false, "non-finite initial state");
    if (guard) guard(x0);
  } catch (const ChartError& e) {
    return fail(0.0, true, e.what());
  }
  traj.times.push_back(0.0);
  traj.states.push_back(x0);

  Vec x = x0;
  for (int i = 0; i < steps; ++i) {
    const double t = i * dt;
    try {
      x = step_once(rhs, t, x, dt, method);
      if (!x.allFinite()) return fail(t, false, "non-finite state (blow-up) after t = " + std::to_string(t));
      if (guard) guard(x);
    } catch (const ChartError& e) {
      return fail(t, true, std::string("chart exit after t = ") + std::to_string(t) + ": " + e.what());
    } catch (const std::runtime_error& e) {
      return fail(t, false, std::string("integration failed after t = ") + std::to_string(t) + ": " + e.what());
    }
    // Last sample lands exactly on the horizon.
    traj.times.push_back(i + 1 == steps ? horizon : (i + 1) * dt);
    traj.states.push_back(x);
  }
  return traj;
}

Trajectory integrate(const Rhs& rhs, const Vec& x0, double horizon, double h, Method method,
                     const StateGuard& guard) {
  Trajectory traj = integrate_until_failure(rhs, x0, horizon, h, method, guard);
  if (traj.failure) throw IntegrationError(traj.failure->message, traj.failure->time, traj.failure->chart_exit);
  return traj;
}

StateGuard adapted_guard(const MechanicalModel& model) {
  return [&model](const Vec& x) { require_chart(model, x.head(model.n)); };
}

StateGuard extremal_guard(const MechanicalModel& model) {
  return [&model](const Vec& x) { require_chart(model, x.head(model.n)); };
}

Rhs extremal_rhs(const MechanicalModel& model, const CostModel& cost) {
  return [&model, &cost](double, const Vec& x) {
    return hamilton_rhs(model, cost, ExtremalState::unpack(x, model.n, model.k)).pack();
  };
}

double simpson(const std::vector<double>& v, double h) {
  const std::size_t intervals = v.empty() ? 0 : v.size() - 1;
  if (intervals == 0) return 0.0;
  if (intervals == 1) return 0.5 * h * (v[0] + v[1]);
  std::size_t even = intervals % 2 == 0 ? intervals : intervals - 3;
  double s = 0.0;
  if (even > 0) {
    double acc = v[0] + v[even];
    for (std::size_t i = 1; i < even; ++i) acc += (i % 2 ? 4.0 : 2.0) * v[i];
    s = acc * h / 3.0;
  }
  if (even != intervals) {
    const std::size_t a = even;
    s += 3.0 * h / 8.0 * (v[a] + 3.0 * v[a + 1] + 3.0 * v[a + 2] + v[a + 3]);
  }
  return s;
}

double trapezoid(const std::vector<double>& v, double h) {
  if (v.size() < 2) return 0.0;
  double s = 0.5 * (v.front() + v.back());
  for (std::size_t i = 1; i + 1 < v.size(); ++i) s += v[i];
  return s * h;
}

std::vector<double> running_cost_samples(const MechanicalModel& model, const CostModel& cost,
                                         const Trajectory& extremal) {
  std::vector<double> c(extremal.size());
  for (std::size_t i = 0; i < extremal.size(); ++i) {
    c[i] = total_cost(cost, extremal.q(i), extremal.y(i), extremal.controls[i]);
  }
  (void)model;
  return c;
}

void attach_controls_and_cost(const MechanicalModel& model, const CostModel& cost, Trajectory& extremal) {
  extremal.controls.resize(extremal.size());
  for (std::size_t i = 0; i < extremal.size(); ++i) {
    const Vec q = extremal.q(i);
    const Vec y = extremal.y(i);
    const Vec ydot = invert_legendre(model, cost, q, y, extremal.p_fiber(i));
    extremal.controls[i] = inverse_dynamics(model, q, y, ydot);
  }
  extremal.cost = simpson(running_cost_samples(model, cost, extremal), extremal.step());
}

Trajectory integrate_extremal(const MechanicalModel& model, const CostModel& cost, const ExtremalState& start,
                              double horizon, double h, Method method) {
  Trajectory traj =
      integrate(extremal_rhs(model, cost), start.pack(), horizon, h, method, extremal_guard(model));
  traj.layout = StateLayout::Extremal;
  traj.n = model.n;
  traj.k = model.k;
  attach_controls_and_cost(model, cost, traj);
  return traj;
}

namespace {

/// Unknowns: initial costates, then the full extremal state at each interior
/// node. Residual: node continuity defects, then the terminal defect on (q, y).
class ShootingProblem {
 public:
  ShootingProblem(const MechanicalModel& model, const CostModel& cost, const BoundaryConditions& bc,
                  const ShootingConfig& cfg)
      : model_(model), cost_(cost), bc_(bc), cfg_(cfg), rhs_(extremal_rhs(model, cost)),
        guard_(extremal_guard(model)) {
    if (cfg.segments < 1) throw ParameterError("shooting needs segments >= 1");
    if (!(cfg.newton_tol > 0.0) || !(cfg.fd_step > 0.0) || !(cfg.h > 0.0)) {
      throw ParameterError("shooting tolerances and steps must be positive");
    }
    if (!(cfg.damping > 0.0 && cfg.damping < 1.0)) throw ParameterError("damping must lie in (0, 1)");
    const int total_steps = step_count(bc.horizon, cfg.h);
    steps_per_segment_ = std::max(1, static_cast<int>(std::lround(static_cast<double>(total_steps) / cfg.segments)));
    segment_horizon_ = bc.horizon / cfg.segments;
    segment_h_ = segment_horizon_ / steps_per_segment_;
    m_ = model.n + model.k;
    require_chart(model, bc.start.q);
    require_chart(model, bc.target.q);
  }

  int unknowns() const { return m_ + (cfg_.segments - 1) * 2 * m_; }
  int state_size() const { return 2 * m_; }
  int segments() const { return cfg_.segments; }

  Vec node_state(const Vec& z, int segment) const {
    if (segment == 0) {
      Vec x(2 * m_);
      x << bc_.start.q, bc_.start.y, z.head(m_);
      return x;
    }
    return z.segment(m_ + (segment - 1) * 2 * m_, 2 * m_);
  }

  /// Segment flow map; throws IntegrationError on failure.
  Vec flow(const Vec& x) const {
    const Trajectory t = integrate(rhs_, x, segment_horizon_, segment_h_, cfg_.method, guard_);
    return t.states.back();
  }

  Trajectory segment_trajectory(const Vec& x) const {
    return integrate(rhs_, x, segment_horizon_, segment_h_, cfg_.method, guard_);
  }

  Vec target() const {
    Vec t(m_);
    t << bc_.target.q, bc_.target.y;
    return t;
  }

  /// Residual and the segment end states it was built from.
  Vec residual(const Vec& z, std::vector<Vec>* ends = nullptr) const {
    Vec r(unknowns());
    std::vector<Vec> local(static_cast<std::size_t>(cfg_.segments));
    auto body = [&](int s) { local[static_cast<std::size_t>(s)] = flow(node_state(z, s)); };
    if (cfg_.parallel_jacobian) {
      parallel::for_each_index(cfg_.segments, body);
    } else {
      parallel::for_each_index_serial(cfg_.segments, body);
    }
    for (int s = 0; s + 1 < cfg_.segments; ++s) {
      r.segment(s * 2 * m_, 2 * m_) = local[static_cast<std::size_t>(s)] - node_state(z, s + 1);
    }
    r.tail(m_) = local.back().head(m_) - target();
    if (ends) *ends = std::move(local);
    return r;
  }

  Mat jacobian(const Vec& z, const std::vector<Vec>& ends) const {
    const int size = unknowns();
    Mat jac = Mat::Zero(size, size);
    for (int s = 0; s < cfg_.segments; ++s) {
      const Vec x = node_state(z, s);
      // Segment 0 varies only its costates.
      std::vector<int> cols;
      for (int j = (s == 0 ? m_ : 0); j < 2 * m_; ++j) cols.push_back(j);
      const parallel::VectorMap map = [this](const Vec& xx) { return flow(xx); };
      const Mat block = cfg_.parallel_jacobian
                            ? parallel::forward_jacobian(map, x, ends[static_cast<std::size_t>(s)], cols, cfg_.fd_step)
                            : parallel::forward_jacobian_serial(map, x, ends[static_cast<std::size_t>(s)], cols,
                                                                cfg_.fd_step);
      const int col0 = s == 0 ? 0 : m_ + (s - 1) * 2 * m_;
      const bool last = s + 1 == cfg_.segments;
      const int row0 = s * 2 * m_;
      if (last) {
        jac.block(row0, col0, m_, block.cols()) = block.topRows(m_);
      } else {
        jac.block(row0, col0, 2 * m_, block.cols()) = block;
        jac.block(row0, m_ + s * 2 * m_, 2 * m_, 2 * m_) -= Mat::Identity(2 * m_, 2 * m_);
      }
    }
    return jac;
  }

  Vec initial_guess_seed() const {
    if (cfg_.initial_costate_guess.size() == m_) return cfg_.initial_costate_guess;
    if (cfg_.initial_costate_guess.size() != 0) throw ParameterError("initial_costate_guess must have n + k entries");
    if (cfg_.guess == CostateGuess::Linearized) return linearized_costate_guess(model_, bc_);
    return Vec::Zero(m_);
  }

  /// Initial unknowns: the given costates, interior nodes from a forward shot,
  /// or on the straight line to the target if that shot fails anywhere.
  Vec initial_guess(const Vec& costates) const {
    Vec z = Vec::Zero(unknowns());
    z.head(m_) = costates;
    if (cfg_.segments == 1) return z;
    std::vector<Vec> nodes;
    Vec x = node_state(z, 0);
    try {
      for (int s = 1; s <= cfg_.segments; ++s) {
        x = flow(x);
        if (s < cfg_.segments) nodes.push_back(x);
      }
    } catch (const IntegrationError&) {
      nodes.clear();
      for (int s = 1; s < cfg_.segments; ++s) {
        const double w = static_cast<double>(s) / cfg_.segments;
        Vec node = Vec::Zero(2 * m_);
        node.head(m_) = (1.0 - w) * node_state(z, 0).head(m_) + w * target();
        nodes.push_back(node);
      }
    }
    for (int s = 1; s < cfg_.segments; ++s) z.segment(m_ + (s - 1) * 2 * m_, 2 * m_) = nodes[s - 1];
    return z;
  }

  Trajectory assemble(const Vec& z) const {
    Trajectory full;
    full.layout = StateLayout::Extremal;
    full.n = model_.n;
    full.k = model_.k;
    for (int s = 0; s < cfg_.segments; ++s) {
      const Trajectory seg = segment_trajectory(node_state(z, s));
      const double t0 = s * segment_horizon_;
      for (std::size_t i = (s == 0 ? 0 : 1); i < seg.size(); ++i) {
        full.times.push_back(s + 1 == cfg_.segments && i + 1 == seg.size() ? bc_.horizon : t0 + seg.times[i]);
        full.states.push_back(seg.states[i]);
      }
    }
    attach_controls_and_cost(model_, cost_, full);
    return full;
  }

 private:
  const MechanicalModel& model_;
  const CostModel& cost_;
  const BoundaryConditions& bc_;
  const ShootingConfig& cfg_;
  Rhs rhs_;
  StateGuard guard_;
  int m_ = 0;
  int steps_per_segment_ = 1;
  double segment_horizon_ = 0.0;
  double segment_h_ = 0.0;
};

double inf_norm(const Vec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

Vec linearized_costate_guess(const MechanicalModel& model, const BoundaryConditions& bc) {
  // With rho, W and the drift frozen at the start, p_base is constant,
  // p_fiber is affine in t and y, q follow by quadrature.
  const int n = model.n, k = model.k;
  const double T = bc.horizon;
  const Vec& q0 = bc.start.q;
  const Vec& y0 = bc.start.y;
  const Mat rho = model.basis(q0);
  const Mat winv = control_weight(model, q0).inverse();
  const Mat a = winv * winv.transpose();
  const Vec drift = free_acceleration(model, q0, y0);

  Mat m = Mat::Zero(n + k, n + k);
  m.block(0, 0, n, n) = -rho * a * rho.transpose() * (T * T * T / 6.0);
  m.block(0, n, n, k) = rho * a * (T * T / 2.0);
  m.block(n, 0, k, n) = -a * rho.transpose() * (T * T / 2.0);
  m.block(n, n, k, k) = a * T;
  Vec r(n + k);
  r.head(n) = bc.target.q - q0 - rho * (y0 * T + drift * (T * T / 2.0));
  r.tail(k) = bc.target.y - y0 - drift * T;
  return Eigen::CompleteOrthogonalDecomposition<Mat>(m).solve(r);
}

ShootingResult shoot(const MechanicalModel& model, const CostModel& cost, const BoundaryConditions& bc,
                     const ShootingConfig& cfg) {
  const ShootingProblem problem(model, cost, bc, cfg);
  ShootingResult result;
  ShootingDiagnostics& diag = result.diagnostics;
  const int m = model.n + model.k;

  // A seed whose shot leaves the chart is pulled towards zero costates, i.e.
  // towards the free flow, until one integrates.
  const Vec seed = problem.initial_guess_seed();
  Vec z;
  std::vector<Vec> ends;
  Vec r;
  std::string first_failure;
  for (double scale : {1.0, 0.5, 0.25, 0.125, 0.0}) {
    z = problem.initial_guess(scale * seed);
    try {
      r = problem.residual(z, &ends);
      break;
    } catch (const IntegrationError& e) {
      if (first_failure.empty()) first_failure = e.what();
      r.resize(0);
    }
    if (seed.cwiseAbs().maxCoeff() == 0.0) break;
  }
  if (r.size() == 0) {
    if (cfg.segments == 1) {
      // Interior nodes on the straight line keep every segment short enough
      // to stay in the chart; the answer is then polished by single shooting.
      ShootingConfig split = cfg;
      split.segments = 4;
      split.initial_costate_guess = seed;
      const ShootingResult coarse = shoot(model, cost, bc, split);
      if (coarse.diagnostics.converged) {
        ShootingConfig polish = cfg;
        polish.initial_costate_guess = coarse.initial_costates;
        ShootingResult out = shoot(model, cost, bc, polish);
        out.diagnostics.iterations += coarse.diagnostics.iterations;
        out.diagnostics.message = "seeded by 4-segment shooting; " + out.diagnostics.message;
        return out;
      }
    }
    diag.message = "initial shot failed: " + first_failure;
    result.initial_costates = seed;
    return result;
  }

  Vec best_z = z;
  double best_norm = r.norm();
  diag.residual_history.push_back(inf_norm(r));

  for (int iter = 0; iter < cfg.newton_max_iter && inf_norm(r) > cfg.newton_tol; ++iter) {
    diag.iterations = iter + 1;
    Mat jac;
    try {
      jac = problem.jacobian(z, ends);
    } catch (const IntegrationError& e) {
      diag.message = std::string("Jacobian evaluation failed: ") + e.what();
      break;
    }
    const Vec step = -Eigen::CompleteOrthogonalDecomposition<Mat>(jac).solve(r);

    double alpha = 1.0;
    bool accepted = false;
    Vec trial_r;
    std::vector<Vec> trial_ends;
    while (alpha >= cfg.min_step) {
      const Vec trial = z + alpha * step;
      try {
        trial_r = problem.residual(trial, &trial_ends);
        if (trial_r.allFinite() && trial_r.norm() < r.norm()) {
          z = trial;
          accepted = true;
          break;
        }
      } catch (const IntegrationError&) {
        // Rejected trial shot; contract.
      } catch (const ChartError&) {
      }
      alpha *= cfg.damping;
    }
    if (!accepted) {
      diag.message = "Newton stagnated: no decrease down to line-search factor " + std::to_string(cfg.min_step);
      break;
    }
    r = trial_r;
    ends = std::move(trial_ends);
    diag.step_history.push_back(alpha);
    diag.residual_history.push_back(inf_norm(r));
    if (r.norm() < best_norm) {
      best_norm = r.norm();
      best_z = z;
    }
  }

  diag.converged = inf_norm(r) <= cfg.newton_tol;
  if (!diag.converged) {
    z = best_z;
    if (diag.message.empty()) diag.message = "Newton iteration limit reached";
  } else {
    diag.message = "converged";
  }
  diag.residual = diag.converged ? inf_norm(r) : diag.residual_history.empty() ? NAN : [&] {
    try {
      return inf_norm(problem.residual(z));
    } catch (const std::exception&) {
      return static_cast<double>(NAN);
    }
  }();
  result.initial_costates = z.head(m);

  try {
    result.trajectory = problem.assemble(z);
    const std::vector<double> c = running_cost_samples(model, cost, result.trajectory);
    diag.trapezoid_cost = trapezoid(c, result.trajectory.step());
    const double h0 = hamiltonian(model, cost, ExtremalState::unpack(result.trajectory.states.front(), model.n, model.k));
    double drift = 0.0;
    for (const Vec& x : result.trajectory.states) {
      drift = std::max(drift, std::abs(hamiltonian(model, cost, ExtremalState::unpack(x, model.n, model.k)) - h0));
    }
    diag.hamiltonian_drift = drift / std::max(1.0, std::abs(h0));
  } catch (const std::exception& e) {
    diag.converged = false;
    diag.message += std::string("; trajectory assembly failed: ") + e.what();
  }
  return result;
}

std::vector<SweepPoint> sweep(const MechanicalModel& model, const std::function<CostModel(double)>& cost_family,
                              const BoundaryConditions& bc, const ShootingConfig& cfg,
                              const std::vector<double>& parameters,
                              const std::function<double(const Vec&)>& distance, const SweepOptions& options) {
  std::vector<SweepPoint> out(parameters.size());

  auto finish = [&](SweepPoint& pt, ShootingResult res) {
    pt.converged = res.diagnostics.converged;
    pt.iterations = res.diagnostics.iterations;
    pt.message = res.diagnostics.message;
    pt.cost = res.trajectory.cost;
    double dmin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < res.trajectory.size(); ++i) dmin = std::min(dmin, distance(res.trajectory.q(i)));
    pt.min_distance = dmin;
    pt.result = std::move(res);
  };

  if (!options.warm_start) {
    auto body = [&](int i) {
      const auto idx = static_cast<std::size_t>(i);
      out[idx].parameter = parameters[idx];
      const CostModel cost = cost_family(parameters[idx]);
      ShootingResult res = shoot(model, cost, bc, cfg);
      if (!res.diagnostics.converged && (cfg.initial_costate_guess.size() != 0 || cfg.guess != CostateGuess::Linearized)) {
        ShootingConfig lin = cfg;
        lin.initial_costate_guess.resize(0);
        lin.guess = CostateGuess::Linearized;
        ShootingResult retry = shoot(model, cost, bc, lin);
        if (retry.diagnostics.converged) res = std::move(retry);
      }
      finish(out[idx], std::move(res));
    };
    if (options.jobs > 1) {
      parallel::for_each_index(static_cast<int>(parameters.size()), body);
    } else {
      parallel::for_each_index_serial(static_cast<int>(parameters.size()), body);
    }
    return out;
  }

  // Warm-started continuation: step from the last converged parameter towards
  // the next one, halving the increment whenever a solve fails.
  bool have_previous = false;
  double previous_param = 0.0;
  Vec previous_costates = cfg.initial_costate_guess;
  for (std::size_t idx = 0; idx < parameters.size(); ++idx) {
    SweepPoint& pt = out[idx];
    pt.parameter = parameters[idx];
    ShootingConfig local = cfg;
    local.initial_costate_guess = previous_costates;

    if (!have_previous) {
      const CostModel cost = cost_family(pt.parameter);
      ShootingResult res = shoot(model, cost, bc, local);
      if (res.diagnostics.converged) {
        have_previous = true;
        previous_param = pt.parameter;
        previous_costates = res.initial_costates;
      }
      finish(pt, std::move(res));
      continue;
    }

    // Full warm step first, then a cold start from the configured guess (the
    // previous extremal may sit on a singular branch of the new problem), then
    // bisected continuation from the previous solution.
    std::optional<ShootingResult> reached;
    {
      const CostModel cost = cost_family(pt.parameter);
      ShootingResult res = shoot(model, cost, bc, local);
      if (!res.diagnostics.converged && cfg.initial_costate_guess.size() != 0) {
        ShootingResult retry = shoot(model, cost, bc, cfg);
        if (retry.diagnostics.converged) res = std::move(retry);
      }
      if (res.diagnostics.converged) reached = std::move(res);
    }
    double current = previous_param;
    Vec costates = previous_costates;
    double increment = 0.5 * (pt.parameter - current);
    int halvings = 1;
    while (!reached) {
      const bool final_step = std::abs(pt.parameter - current) <= std::abs(increment);
      const double next = final_step ? pt.parameter : current + increment;
      local.initial_costate_guess = costates;
      ShootingResult res = shoot(model, cost_family(next), bc, local);
      if (res.diagnostics.converged) {
        if (final_step) {
          reached = std::move(res);
          break;
        }
        current = next;
        costates = res.initial_costates;
        ++pt.continuation_solves;
      } else if (++halvings > options.max_continuation_halvings) {
        reached = std::move(res);
      } else {
        increment *= 0.5;
      }
    }
    if (reached->diagnostics.converged) {
      previous_param = pt.parameter;
      previous_costates = reached->initial_costates;
    }
    finish(pt, std::move(*reached));
  }
  return out;
}

}  // namespace nhocp
