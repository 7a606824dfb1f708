#include "nhocp/checks.hpp"

#include "nhocp/parallel.hpp"

#include <cmath>

namespace nhocp::checks {

const char* to_string(Status s) {
  switch (s) {
    case Status::Passed: return "passed";
    case Status::ToleranceMiss: return "tolerance_miss";
    case Status::FormulaError: return "formula_error";
    case Status::Degenerate: return "degenerate";
    case Status::Error: return "error";
  }
  return "error";
}

CheckResult classify(std::string name, double measured, double default_tolerance, const CheckOptions& opts,
                     std::string detail) {
  CheckResult r;
  r.name = std::move(name);
  r.measured = measured;
  r.default_tolerance = default_tolerance;
  r.tolerance = opts.tolerance.value_or(default_tolerance);
  r.detail = std::move(detail);
  if (!std::isfinite(measured)) {
    r.status = Status::FormulaError;
  } else if (measured <= r.tolerance) {
    r.status = Status::Passed;
  } else if (measured <= default_tolerance) {
    r.status = Status::ToleranceMiss;
  } else {
    r.status = Status::FormulaError;
  }
  return r;
}

namespace {

CheckResult failed(std::string name, double default_tolerance, const CheckOptions& opts, Status status,
                   std::string detail) {
  CheckResult r;
  r.name = std::move(name);
  r.measured = std::numeric_limits<double>::quiet_NaN();
  r.default_tolerance = default_tolerance;
  r.tolerance = opts.tolerance.value_or(default_tolerance);
  r.status = status;
  r.detail = std::move(detail);
  return r;
}

/// Runs body, mapping exceptions onto Degenerate / Error results.
template <class F>
CheckResult guarded(const std::string& name, double default_tolerance, const CheckOptions& opts, F&& body) {
  try {
    return body();
  } catch (const SingularMetricError& e) {
    return failed(name, default_tolerance, opts, Status::Degenerate, e.what());
  } catch (const LegendreError& e) {
    return failed(name, default_tolerance, opts, Status::Degenerate, e.what());
  } catch (const std::exception& e) {
    return failed(name, default_tolerance, opts, Status::Error, e.what());
  }
}

Vec normal_vector(std::mt19937_64& rng, int size, double scale) {
  std::normal_distribution<double> normal(0.0, scale);
  Vec v(size);
  for (int i = 0; i < size; ++i) v(i) = normal(rng);
  return v;
}

double induced_entry_along(const MechanicalModel& model, const Vec& q, const Vec& dir, double t, int b, int c) {
  return induced_metric(model, q + t * dir).metric(b, c);
}

}  // namespace

std::vector<CheckResult> geometry_identities(const MechanicalModel& model, const CheckOptions& opts) {
  std::mt19937_64 rng(opts.seed);
  std::vector<Vec> points;
  if (!model.sample_configuration) {
    return {failed("geometry", 1e-12, opts, Status::Error, "model has no configuration sampler")};
  }
  for (int s = 0; s < opts.samples; ++s) points.push_back(model.sample_configuration(rng));

  const int n = model.n, k = model.k;
  std::vector<CheckResult> out;

  out.push_back(guarded("projector_idempotent", 1e-12, opts, [&] {
    double worst = 0.0;
    for (const Vec& q : points) {
      const Mat p = orthogonal_projector(model, q);
      worst = std::max(worst, (p * p - p).cwiseAbs().maxCoeff());
    }
    return classify("projector_idempotent", worst, 1e-12, opts, "max |P^2 - P|");
  }));

  out.push_back(guarded("projector_orthogonal", 1e-12, opts, [&] {
    double worst = 0.0;
    for (const Vec& q : points) {
      const Mat p = orthogonal_projector(model, q);
      const Mat qc = complementary_projector(model, q);
      const Mat metric = model.metric(q);
      const Vec v = normal_vector(rng, n, 1.0), w = normal_vector(rng, n, 1.0);
      worst = std::max(worst, std::abs((p * v).dot(metric * (qc * w))));
    }
    return classify("projector_orthogonal", worst, 1e-12, opts, "max |G(Pv, Qw)|");
  }));

  out.push_back(guarded("bracket_skew", 1e-12, opts, [&] {
    double worst = 0.0;
    for (const Vec& q : points)
      for (int a = 0; a < k; ++a)
        for (int b = 0; b < k; ++b)
          worst = std::max(worst, (nonholonomic_bracket(model, a, b, q) + nonholonomic_bracket(model, b, a, q))
                                      .cwiseAbs()
                                      .maxCoeff());
    return classify("bracket_skew", worst, 1e-12, opts, "max |[[e_A, e_B]] + [[e_B, e_A]]|");
  }));

  out.push_back(guarded("connection_symmetry", 1e-10, opts, [&] {
    double worst = 0.0;
    for (const Vec& q : points) {
      const LocalGeometry g = LocalGeometry::at(model, q);
      for (int a = 0; a < k; ++a)
        for (int b = 0; b < k; ++b)
          for (int c = 0; c < k; ++c)
            worst = std::max(worst, std::abs(g.gamma(a, b, c) - g.gamma(a, c, b) - g.bracket(a, b, c)));
    }
    return classify("connection_symmetry", worst, 1e-10, opts, "max |Gamma^A_BC - Gamma^A_CB - c^A_BC|");
  }));

  out.push_back(guarded("metricity", 1e-8, opts, [&] {
    double worst = 0.0;
    for (const Vec& q : points) {
      const LocalGeometry g = LocalGeometry::at(model, q);
      const Mat& gd = g.gd.metric;
      for (int a = 0; a < k; ++a) {
        const Vec dir = g.rho.col(a);
        const double h = 1e-4;
        for (int b = 0; b < k; ++b)
          for (int c = 0; c < k; ++c) {
            // Fourth-order central difference of G^D_BC along e_A.
            const double deriv = (-induced_entry_along(model, q, dir, 2 * h, b, c) +
                                  8.0 * induced_entry_along(model, q, dir, h, b, c) -
                                  8.0 * induced_entry_along(model, q, dir, -h, b, c) +
                                  induced_entry_along(model, q, dir, -2 * h, b, c)) /
                                 (12.0 * h);
            double conn = 0.0;
            for (int e = 0; e < k; ++e) conn += g.gamma(e, a, b) * gd(e, c) + g.gamma(e, a, c) * gd(b, e);
            worst = std::max(worst, std::abs(deriv - conn));
          }
      }
    }
    return classify("metricity", worst, 1e-8, opts, "max |e_A(G_BC) - G(nabla_A e_B, e_C) - G(e_B, nabla_A e_C)|");
  }));

  out.push_back(guarded("grad_duality", 1e-10, opts, [&] {
    double worst = 0.0;
    for (const Vec& q : points) {
      const Vec grad = grad_potential(model, q);
      const Mat gd = induced_metric(model, q).metric;
      const Vec dv = potential_gradient(model, q);
      const Mat rho = model.basis(q);
      worst = std::max(worst, (gd * grad - rho.transpose() * dv).cwiseAbs().maxCoeff());
    }
    return classify("grad_duality", worst, 1e-10, opts, "max |G^D(grad V, e_A) - e_A(V)|");
  }));
  return out;
}

CheckResult energy_conservation(const MechanicalModel& model, const CheckOptions& opts) {
  return guarded("energy_conservation", 1e-9, opts, [&] {
    std::mt19937_64 rng(opts.seed + 1);
    // Redraw until the free motion stays inside the chart for the whole run.
    for (int attempt = 0; attempt < 50; ++attempt) {
      const AdaptedState s0{model.sample_configuration(rng), normal_vector(rng, model.k, opts.velocity_scale)};
      mechanical_energy(model, s0);  // surfaces a singular metric before integrating
      const Trajectory tr = simulate(model, s0, 10.0, 1e-3);
      if (tr.failure) continue;
      return classify("energy_conservation", relative_energy_drift(model, tr), 1e-9, opts,
                      "max |E(t) - E(0)| / |E(0)|, RK4, T = 10, h = 1e-3");
    }
    return failed("energy_conservation", 1e-9, opts, Status::Error, "no in-chart free trajectory found");
  });
}

CheckResult hamiltonian_conservation(const MechanicalModel& model, const CostModel& cost, const ExtremalState& start,
                                     double horizon, double h, const CheckOptions& opts) {
  return guarded("hamiltonian_conservation", 1e-8, opts, [&] {
    const Trajectory tr = integrate_extremal(model, cost, start, horizon, h);
    const double h0 = hamiltonian(model, cost, start);
    double drift = 0.0;
    for (const Vec& x : tr.states) {
      drift = std::max(drift, std::abs(hamiltonian(model, cost, ExtremalState::unpack(x, model.n, model.k)) - h0));
    }
    return classify("hamiltonian_conservation", drift / std::max(1.0, std::abs(h0)), 1e-8, opts,
                    "max |H(t) - H(0)| / max(1, |H(0)|)");
  });
}

std::vector<CheckResult> cross_formulation(const MechanicalModel& model, const CostModel& cost,
                                           const ExtremalState& start, double horizon, double h, int refine,
                                           const CheckOptions& opts) {
  try {
    const Trajectory fine = integrate_extremal(model, cost, start, horizon, h / refine);
    Trajectory grid;
    grid.layout = StateLayout::Extremal;
    grid.n = model.n;
    grid.k = model.k;
    for (std::size_t i = 0; i < fine.size(); i += static_cast<std::size_t>(refine)) {
      grid.times.push_back(fine.times[i]);
      grid.states.push_back(fine.states[i]);
    }
    const ExtremalResidual lag = lagrangian_extremal_residual(model, cost, grid);

    double sigma = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const ExtremalState ex = ExtremalState::unpack(grid.states[i], model.n, model.k);
      const ExtremalState d = hamilton_rhs(model, cost, ex);
      SigmaPoint pt{ex.q, ex.y, d.q, d.y, d.p_base, d.p_fiber, ex.p_base, ex.p_fiber};
      sigma = std::max(sigma, sigma_residual(model, cost, pt).max_abs());
    }
    std::string detail = "coarsening ratio " + std::to_string(lag.coarsening_ratio);
    if (lag.grid_limited) detail += " (residual limited by grid)";
    return {classify("lagrangian_residual", lag.max_abs(), 1e-6, opts, detail),
            classify("sigma_residual", sigma, 1e-8, opts, "pointwise lift gamma = p, mu = pdot")};
  } catch (const SingularMetricError& e) {
    return {failed("lagrangian_residual", 1e-6, opts, Status::Degenerate, e.what()),
            failed("sigma_residual", 1e-8, opts, Status::Degenerate, e.what())};
  } catch (const std::exception& e) {
    return {failed("lagrangian_residual", 1e-6, opts, Status::Error, e.what()),
            failed("sigma_residual", 1e-8, opts, Status::Error, e.what())};
  }
}

CheckResult symplectic_monodromy(const MechanicalModel& model, const CostModel& cost, const ExtremalState& start,
                                 double horizon, double h, double perturbation, const CheckOptions& opts) {
  return guarded("symplectic_monodromy", 1e-4, opts, [&] {
    const Rhs rhs = extremal_rhs(model, cost);
    const StateGuard guard = extremal_guard(model);
    const parallel::VectorMap flow = [&](const Vec& x) {
      return integrate(rhs, x, horizon, h, Method::RK4, guard).states.back();
    };
    const Mat jac = parallel::central_jacobian(flow, start.pack(), perturbation);
    const int m = model.n + model.k;
    Mat omega = Mat::Zero(2 * m, 2 * m);
    omega.topRightCorner(m, m) = Mat::Identity(m, m);
    omega.bottomLeftCorner(m, m) = -Mat::Identity(m, m);
    const double defect = (jac.transpose() * omega * jac - omega).cwiseAbs().maxCoeff();
    return classify("symplectic_monodromy", defect, 1e-4, opts, "max |J^T Omega J - Omega|");
  });
}

CheckResult regularity_determinant(const MechanicalModel& model, const CostModel& cost,
                                   const std::function<double(const Vec& q)>& expected, const CheckOptions& opts) {
  return guarded("regularity_determinant", 1e-10, opts, [&] {
    std::mt19937_64 rng(opts.seed + 2);
    double worst = 0.0;
    for (int s = 0; s < opts.samples; ++s) {
      const SecondOrderPoint pt{model.sample_configuration(rng), normal_vector(rng, model.k, opts.velocity_scale),
                                normal_vector(rng, model.k, opts.velocity_scale)};
      const RegularityReport rep = regularity_check(model, cost, pt);
      if (!rep.regular) {
        return failed("regularity_determinant", 1e-10, opts, Status::Degenerate,
                      "Legendre map singular: det = " + std::to_string(rep.lagrangian_det) +
                          (rep.note.empty() ? "" : " (" + rep.note + ")"));
      }
      if (expected) {
        const double want = expected(pt.q);
        worst = std::max(worst, std::abs(rep.lagrangian_det - want) / std::abs(want));
      }
    }
    return classify("regularity_determinant", worst, 1e-10, opts,
                    expected ? "max relative deviation from the closed form" : "regular at all samples");
  });
}

ExtremalState random_extremal_start(const MechanicalModel& model, std::mt19937_64& rng, const CheckOptions& opts) {
  return {model.sample_configuration(rng), normal_vector(rng, model.k, opts.velocity_scale),
          normal_vector(rng, model.n, opts.costate_scale), normal_vector(rng, model.k, opts.costate_scale)};
}

namespace {

/// Random start whose extremal stays in the chart over the horizon.
std::optional<ExtremalState> in_chart_start(const MechanicalModel& model, const CostModel& cost, std::mt19937_64& rng,
                                            const CheckOptions& opts, double horizon) {
  for (int attempt = 0; attempt < 50; ++attempt) {
    ExtremalState s = random_extremal_start(model, rng, opts);
    const Trajectory tr = integrate_until_failure(extremal_rhs(model, cost), s.pack(), horizon, 1e-2, Method::RK4,
                                                  extremal_guard(model));
    if (!tr.failure) return s;
  }
  return std::nullopt;
}

}  // namespace

PlantedInstance planted_instance(const MechanicalModel& model, const CostModel& cost, std::mt19937_64& rng,
                                 const CheckOptions& opts, double horizon, double h) {
  const Rhs rhs = extremal_rhs(model, cost);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const ExtremalState s = random_extremal_start(model, rng, opts);
    const Trajectory tr = integrate_until_failure(rhs, s.pack(), horizon, h, Method::RK4, extremal_guard(model));
    if (tr.failure) continue;
    const ExtremalState end = ExtremalState::unpack(tr.states.back(), model.n, model.k);
    PlantedInstance out;
    out.bc = BoundaryConditions{AdaptedState{s.q, s.y}, AdaptedState{end.q, end.y}, horizon};
    out.costates.resize(model.n + model.k);
    out.costates << s.p_base, s.p_fiber;
    return out;
  }
  throw IntegrationError("no planted extremal stayed in the chart", 0.0, true);
}

std::vector<CheckResult> run_suite(const MechanicalModel& model, const CostModel& cost,
                                   const std::function<double(const Vec& q)>& expected_det, const CheckOptions& opts) {
  std::vector<CheckResult> out = geometry_identities(model, opts);
  out.push_back(energy_conservation(model, opts));
  out.push_back(regularity_determinant(model, cost, expected_det, opts));

  std::mt19937_64 rng(opts.seed + 3);
  std::optional<ExtremalState> start;
  try {
    start = in_chart_start(model, cost, rng, opts, 1.0);
  } catch (const std::exception&) {
    start.reset();
  }
  if (!start) {
    for (const auto& [name, tol] : std::vector<std::pair<std::string, double>>{
             {"hamiltonian_conservation", 1e-8}, {"lagrangian_residual", 1e-6}, {"sigma_residual", 1e-8},
             {"symplectic_monodromy", 1e-4}}) {
      CheckResult r;
      r.name = name;
      r.measured = std::numeric_limits<double>::quiet_NaN();
      r.default_tolerance = tol;
      r.tolerance = opts.tolerance.value_or(tol);
      r.status = Status::Degenerate;
      r.detail = "no extremal could be integrated from random starts";
      out.push_back(r);
    }
    return out;
  }
  out.push_back(hamiltonian_conservation(model, cost, *start, 1.0, 1e-3, opts));
  for (CheckResult& r : cross_formulation(model, cost, *start, 1.0, 1e-3, 4, opts)) out.push_back(std::move(r));
  out.push_back(symplectic_monodromy(model, cost, *start, 0.5, 1e-4, 1e-6, opts));
  return out;
}

}  // namespace nhocp::checks
