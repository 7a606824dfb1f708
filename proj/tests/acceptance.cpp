// Acceptance run: one PASS/FAIL line per criterion. Nonzero exit on any failure
// not attributable to finite-difference resolution alone.

#include "printed_equations.hpp"

#include "nhocp/checks.hpp"
#include "nhocp/dynamics.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

using namespace nhocp;

namespace {

using Clock = std::chrono::steady_clock;

const models::SleighParams kSleigh{1.0, 1.0, 0.5};
const models::CvtParams kCvt{1.0, 1.0, 1.0};

struct Outcome {
  bool pass = false;
  std::string detail;
  bool resolution_limited = false;  ///< failed only through finite-difference resolution
};

int failures = 0;
int hard_failures = 0;

void report(int id, const char* title, const std::function<Outcome()>& body) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  if (!o.pass) ++failures;
  if (!o.pass && !o.resolution_limited) ++hard_failures;
  std::printf("[%s] %2d %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", id, title, o.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double rel(double got, double want) { return std::abs(got - want) / std::max(1.0, std::abs(want)); }

double rel(const Vec& got, const Vec& want) {
  return (got - want).cwiseAbs().maxCoeff() / std::max(1.0, want.cwiseAbs().maxCoeff());
}

Vec normal(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> d(0.0, 1.0);
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = d(rng);
  return v;
}

double poly_fit_residual(const std::vector<double>& t, const std::vector<double>& v, int degree) {
  Mat a(static_cast<int>(t.size()), degree + 1);
  Vec b(static_cast<int>(t.size()));
  for (std::size_t i = 0; i < t.size(); ++i) {
    for (int d = 0; d <= degree; ++d) a(static_cast<int>(i), d) = std::pow(t[i], d);
    b(static_cast<int>(i)) = v[i];
  }
  return (a * a.colPivHouseholderQr().solve(b) - b).cwiseAbs().maxCoeff();
}

ExtremalState start_of(const Trajectory& tr) { return ExtremalState::unpack(tr.states.front(), tr.n, tr.k); }

}  // namespace

int main() {
  const MechanicalModel sleigh = models::chaplygin_sleigh(kSleigh);
  const MechanicalModel cvt = models::cvt(kCvt);
  const CostModel quad = quadratic_cost();
  checks::CheckOptions opts;

  // the obstacle sweep feeds criteria 5, 7 and 10
  std::vector<SweepPoint> sweep_points;
  double sweep_seconds = 0.0;
  {
    ShootingConfig cfg;
    cfg.initial_costate_guess = models::sleigh_obstacle_costate_guess();
    const models::ObstacleParams center{};
    const auto t0 = Clock::now();
    sweep_points = sweep(
        sleigh,
        [&](double kappa) {
          models::ObstacleParams o = center;
          o.kappa = kappa;
          return models::sleigh_with_obstacle(kSleigh, o);
        },
        models::sleigh_obstacle_boundary(), cfg, models::default_kappas(),
        [&](const Vec& q) { return models::obstacle_distance(center, q); });
    sweep_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  }

  report(1, "geometry identities", [&] {
    const auto t0 = Clock::now();
    std::string worst;
    bool ok = true;
    for (const MechanicalModel* m : {&sleigh, &cvt}) {
      for (const checks::CheckResult& r : checks::geometry_identities(*m, opts)) {
        ok = ok && r.passed();
        worst += " " + m->name + "." + r.name + "=" + fmt("%.1e", r.measured);
      }
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    return Outcome{ok && secs < 5.0, "100 points per model," + worst};
  });

  report(2, "printed-equation equivalence", [&] {
    const printed::Sleigh ps{kSleigh.m, kSleigh.J, kSleigh.a};
    const printed::Cvt pc{kCvt.m, kCvt.J1, kCvt.J2};
    std::mt19937_64 rng(2);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const Vec qs = sleigh.sample_configuration(rng), qc = cvt.sample_configuration(rng);
      const Vec y = normal(rng, 2), u = normal(rng, 2);
      const Vec pb = normal(rng, 3), pf = normal(rng, 2);
      worst = std::max(worst, rel(free_rhs(sleigh, {qs, y}).ydot, Vec(Vec::Zero(2))));
      worst = std::max(worst, rel(free_rhs(sleigh, {qs, y}).qdot, printed::sleigh_qdot(ps, qs, y)));
      worst = std::max(worst, rel(controlled_rhs(sleigh, {qs, y}, u).ydot, printed::sleigh_ydot(ps, u)));
      const ExtremalState es{qs, y, pb, pf};
      worst = std::max(worst, rel(hamiltonian(sleigh, quad, es), printed::sleigh_H(ps, {}, es.pack())));
      worst = std::max(worst, rel(hamilton_rhs(sleigh, quad, es).pack(), printed::sleigh_hamilton(ps, {}, es.pack())));

      worst = std::max(worst, rel(free_rhs(cvt, {qc, y}).ydot, printed::cvt_free_ydot(pc, qc, y)));
      worst = std::max(worst, rel(free_rhs(cvt, {qc, y}).qdot, printed::cvt_qdot(pc, qc, y)));
      worst = std::max(worst, rel(controlled_rhs(cvt, {qc, y}, u).ydot, printed::cvt_ydot(pc, qc, y, u)));
      const ExtremalState ec{qc, y, pb, pf};
      worst = std::max(worst, rel(hamiltonian(cvt, quad, ec), printed::cvt_H(pc, ec.pack())));
      worst = std::max(worst, rel(hamilton_rhs(cvt, quad, ec).pack(), printed::cvt_hamilton(pc, ec.pack())));
    }
    return Outcome{worst <= 1e-10, "max relative deviation " + fmt("%.2e", worst) + " over 100 states per model"};
  });

  report(3, "regularity determinants", [&] {
    const checks::CheckResult s = checks::regularity_determinant(
        sleigh, quad, [](const Vec&) { return models::sleigh_regularity_determinant(kSleigh); }, opts);
    const checks::CheckResult c = checks::regularity_determinant(
        cvt, quad, [](const Vec& q) { return models::cvt_regularity_determinant(kCvt, q(2)); }, opts);
    return Outcome{s.passed() && c.passed() && s.measured <= 1e-10 && c.measured <= 1e-10,
                   "sleigh " + fmt("%.2e", s.measured) + ", cvt " + fmt("%.2e", c.measured) + " relative"};
  });

  report(4, "energy conservation", [&] {
    const checks::CheckResult s = checks::energy_conservation(sleigh, opts);
    const checks::CheckResult c = checks::energy_conservation(cvt, opts);
    return Outcome{s.measured <= 1e-9 && c.measured <= 1e-9,
                   "T = 10 drift sleigh " + fmt("%.2e", s.measured) + ", cvt " + fmt("%.2e", c.measured)};
  });

  report(5, "hamiltonian conservation", [&] {
    std::mt19937_64 rng(5);
    std::string detail;
    bool ok = true;
    for (const MechanicalModel* m : {&sleigh, &cvt}) {
      const checks::PlantedInstance inst = checks::planted_instance(*m, quad, rng, opts, 1.0, 1e-3);
      const ExtremalState start{inst.bc.start.q, inst.bc.start.y, inst.costates.head(m->n),
                                inst.costates.tail(m->k)};
      const checks::CheckResult r = checks::hamiltonian_conservation(*m, quad, start, 1.0, 1e-3, opts);
      ok = ok && r.measured <= 1e-8;
      detail += m->name + " " + fmt("%.2e", r.measured) + ", ";
    }
    for (const SweepPoint& p : sweep_points) {
      if (p.parameter != 0.25 && p.parameter != 0.5) continue;
      ok = ok && p.converged && p.result.diagnostics.hamiltonian_drift <= 1e-8;
      detail += "kappa " + fmt("%g", p.parameter) + " " + fmt("%.2e", p.result.diagnostics.hamiltonian_drift) + ", ";
    }
    detail.resize(detail.size() - 2);
    return Outcome{ok, detail};
  });

  report(6, "zero-multiplier sleigh oracle", [&] {
    Vec q(3), y(2), pb(3), pf(2);
    q << 0.0, 0.0, 0.2;
    y << 0.5, 1.0;
    pb << 0.0, 0.0, 1.5;
    pf << 0.8, -0.6;
    const ExtremalState start{q, y, pb, pf};
    const Trajectory tr = integrate_extremal(sleigh, quad, start, 1.0, 1e-3);
    const models::SleighExtremalConstants c = models::sleigh_constants_from_state(kSleigh, start);
    std::vector<double> y1, y2, u2;
    double u1_lo = 1e300, u1_hi = -1e300, theta_err = 0.0;
    for (std::size_t i = 0; i < tr.size(); ++i) {
      y1.push_back(tr.y(i)(0));
      y2.push_back(tr.y(i)(1));
      u1_lo = std::min(u1_lo, tr.controls[i](0));
      u1_hi = std::max(u1_hi, tr.controls[i](0));
      u2.push_back(tr.controls[i](1));
      theta_err = std::max(theta_err, std::abs(tr.q(i)(2) - models::sleigh_analytic_extremal(c, kSleigh, tr.times[i]).theta));
    }
    const double f1 = poly_fit_residual(tr.times, y1, 2), f2 = poly_fit_residual(tr.times, y2, 1);
    const double fu2 = poly_fit_residual(tr.times, u2, 1);
    const bool ok = f1 <= 1e-7 && f2 <= 1e-7 && u1_hi - u1_lo <= 1e-8 && fu2 <= 1e-8 && theta_err <= 1e-6;
    return Outcome{ok, "fit y1 " + fmt("%.1e", f1) + ", y2 " + fmt("%.1e", f2) + ", u1 spread " +
                           fmt("%.1e", u1_hi - u1_lo) + ", u2 affine fit " + fmt("%.1e", fu2) + ", theta " +
                           fmt("%.1e", theta_err)};
  });

  report(7, "cross-formulation equivalence", [&] {
    // Residual derivatives come from 9-point stencils on the h = 1e-3 samples.
    // A miss is called resolution-limited only when the residual is flagged as
    // stencil truncation and the same check with 4x finer samples is within 1e-6.
    double worst = 0.0, worst_fine = 0.0, worst_sigma = 0.0;
    bool ok = true, limited = true;
    std::string detail;
    auto add = [&](const std::string& label, const MechanicalModel& m, const CostModel& cost, const ShootingResult& r) {
      if (!r.diagnostics.converged) {
        ok = limited = false;
        detail += label + " not converged; ";
        return;
      }
      const ExtremalState start = start_of(r.trajectory);
      const double T = r.trajectory.times.back();
      double lag = 0.0;
      bool grid_limited = false;
      for (const checks::CheckResult& c : checks::cross_formulation(m, cost, start, T, 1e-3, 4, opts)) {
        if (c.name == "sigma_residual") {
          worst_sigma = std::max(worst_sigma, c.measured);
          if (c.measured > 1e-6) ok = limited = false;
        } else {
          lag = c.measured;
          grid_limited = c.detail.find("limited by grid") != std::string::npos;
        }
      }
      worst = std::max(worst, lag);
      detail += label + " " + fmt("%.1e", lag);
      if (lag > 1e-6) {
        ok = false;
        const double fine = checks::cross_formulation(m, cost, start, T, 2.5e-4, 4, opts).front().measured;
        worst_fine = std::max(worst_fine, fine);
        limited = limited && grid_limited && fine <= 1e-6;
        detail += std::string(grid_limited ? " grid-limited" : "") + ", at h = 2.5e-4 " + fmt("%.1e", fine);
      }
      detail += "; ";
    };
    const models::ObstacleParams center{};
    for (const SweepPoint& p : sweep_points) {
      models::ObstacleParams o = center;
      o.kappa = p.parameter;
      add("kappa " + fmt("%g", p.parameter), sleigh, models::sleigh_with_obstacle(kSleigh, o), p.result);
    }
    std::mt19937_64 rng(7);
    for (const MechanicalModel* m : {&sleigh, &cvt}) {
      const checks::PlantedInstance inst = checks::planted_instance(*m, quad, rng, opts, 1.0, 1e-3);
      ShootingConfig cfg;
      cfg.guess = CostateGuess::Linearized;
      add(m->name + " planted", *m, quad, shoot(*m, quad, inst.bc, cfg));
    }
    detail += "worst Lagrangian " + fmt("%.2e", worst) + " (" + fmt("%.2e", worst_fine) + " at h = 2.5e-4), worst Sigma_L " +
              fmt("%.2e", worst_sigma);
    Outcome out{ok, detail};
    out.resolution_limited = !ok && limited;
    return out;
  });

  report(8, "symplectic monodromy", [&] {
    std::mt19937_64 rng(8);
    const checks::PlantedInstance inst = checks::planted_instance(sleigh, quad, rng, opts, 0.5, 1e-4);
    const ExtremalState start{inst.bc.start.q, inst.bc.start.y, inst.costates.head(3), inst.costates.tail(2)};
    const checks::CheckResult r = checks::symplectic_monodromy(sleigh, quad, start, 0.5, 1e-4, 1e-6, opts);
    return Outcome{r.measured <= 1e-4, "T = 0.5, h = 1e-4, |J^T W J - W| = " + fmt("%.2e", r.measured)};
  });

  report(9, "planted BVP recovery", [&] {
    std::string detail;
    bool ok = true;
    for (const MechanicalModel* m : {&sleigh, &cvt}) {
      std::mt19937_64 rng(9);
      int recovered = 0;
      double slowest = 0.0, worst = 0.0;
      for (int i = 0; i < 20; ++i) {
        const checks::PlantedInstance inst = checks::planted_instance(*m, quad, rng, opts, 1.0, 1e-3);
        ShootingConfig cfg;
        cfg.guess = CostateGuess::Linearized;
        const auto t0 = Clock::now();
        const ShootingResult r = shoot(*m, quad, inst.bc, cfg);
        const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
        slowest = std::max(slowest, secs);
        const double err = (r.initial_costates - inst.costates).cwiseAbs().maxCoeff();
        worst = std::max(worst, err);
        if (r.diagnostics.converged && err <= 1e-6 && secs < 10.0) ++recovered;
      }
      ok = ok && recovered == 20;
      detail += m->name + " " + fmt("%.0f", recovered) + "/20 (max error " + fmt("%.1e", worst) + ", slowest " +
                fmt("%.1f", slowest) + " s), ";
    }
    detail.resize(detail.size() - 2);
    return Outcome{ok, detail};
  });

  report(10, "obstacle sweep", [&] {
    bool ok = sweep_seconds < 60.0;
    std::string detail;
    double d0 = 0.0;
    for (std::size_t i = 0; i < sweep_points.size(); ++i) {
      const SweepPoint& p = sweep_points[i];
      ok = ok && p.converged;
      if (i > 0) {
        ok = ok && p.min_distance >= sweep_points[i - 1].min_distance && p.cost >= sweep_points[i - 1].cost;
      }
      if (p.parameter == 0.0) d0 = p.min_distance;
      detail += "k=" + fmt("%g", p.parameter) + " J=" + fmt("%.4f", p.cost) + " d=" + fmt("%.4f", p.min_distance) + "; ";
    }
    for (const SweepPoint& p : sweep_points) {
      if (p.parameter == 0.25 || p.parameter == 0.5) ok = ok && p.min_distance > d0;
    }
    return Outcome{ok, detail + "sweep " + fmt("%.1f", sweep_seconds) + " s"};
  });

  report(11, "integrator order", [&] {
    Vec q(3), y(2), pb(3), pf(2);
    q << 0.1, -0.2, 0.3;
    y << 1.5, 1.0;
    pb << 0.0, 0.0, 2.0;
    pf << 1.0, 0.5;
    const ExtremalState s{q, y, pb, pf};
    const models::SleighExtremalSample e = models::sleigh_analytic_extremal(
        models::sleigh_constants_from_state(kSleigh, s), kSleigh, 1.0, q(0), q(1));
    Vec exact(5);
    exact << e.x, e.y, e.theta, e.y1, e.y2;
    auto err = [&](double h) {
      const Trajectory tr = integrate_extremal(sleigh, quad, s, 1.0, h);
      return (tr.states.back().head(5) - exact).cwiseAbs().maxCoeff();
    };
    const double e1 = err(1e-2), e2 = err(5e-3);
    return Outcome{e1 / e2 >= 14.0, "error " + fmt("%.2e", e1) + " -> " + fmt("%.2e", e2) + ", ratio " +
                                        fmt("%.2f", e1 / e2) + ", order " + fmt("%.2f", std::log2(e1 / e2))};
  });

  std::printf("%d of 11 criteria failed, %d of them limited only by derivative resolution\n", failures,
              failures - hard_failures);
  return hard_failures == 0 ? 0 : 1;
}
