#include "nhocp/ocp.hpp"

#include "nhocp/numdiff.hpp"

#include <Eigen/LU>

namespace nhocp {

CostModel quadratic_cost() {
  CostModel c;
  c.name = "quadratic";
  c.running_cost = [](const Vec&, const Vec&, const Vec& u) { return 0.5 * u.squaredNorm(); };
  c.du_cost = [](const Vec&, const Vec&, const Vec& u) { return u; };
  c.duu_cost = [](const Vec&, const Vec&, const Vec& u) { return Mat(Mat::Identity(u.size(), u.size())); };
  c.dq_cost = [](const Vec& q, const Vec&, const Vec&) { return Vec(Vec::Zero(q.size())); };
  c.dy_cost = [](const Vec&, const Vec& y, const Vec&) { return Vec(Vec::Zero(y.size())); };
  c.unit_quadratic = true;
  return c;
}

double total_cost(const CostModel& cost, const Vec& q, const Vec& y, const Vec& u) {
  double c = cost.running_cost(q, y, u);
  if (cost.potential_term) c += cost.potential_term->weight * cost.potential_term->value(q);
  return c;
}

Vec ExtremalState::pack() const {
  Vec x(q.size() + y.size() + p_base.size() + p_fiber.size());
  x << q, y, p_base, p_fiber;
  return x;
}

ExtremalState ExtremalState::unpack(const Vec& x, int n, int k) {
  if (x.size() != 2 * (n + k)) throw std::invalid_argument("ExtremalState::unpack: wrong length");
  return {x.head(n), x.segment(n, k), x.segment(n + k, n), x.tail(k)};
}

namespace {

void require_point(const MechanicalModel& model, const Vec& q, const Vec& y, const Vec& ydot) {
  if (q.size() != model.n || y.size() != model.k || ydot.size() != model.k) {
    throw std::invalid_argument(model.name + ": second-order point has wrong dimensions");
  }
}

Vec cost_dq(const CostModel& cost, const Vec& q, const Vec& y, const Vec& u) {
  Vec g = cost.dq_cost ? cost.dq_cost(q, y, u) : Vec(Vec::Zero(q.size()));
  if (!cost.dq_cost) {
    for (int i = 0; i < q.size(); ++i) {
      g(i) = numdiff::central4<double>([&](const Vec& qq) { return cost.running_cost(qq, y, u); }, q, i,
                                       numdiff::fallback_step(q(i)));
    }
  }
  if (cost.potential_term) {
    const StateCostTerm& term = *cost.potential_term;
    if (term.gradient) {
      g += term.weight * term.gradient(q);
    } else {
      for (int i = 0; i < q.size(); ++i)
        g(i) += term.weight * numdiff::central4<double>(term.value, q, i, numdiff::fallback_step(q(i)));
    }
  }
  return g;
}

Vec cost_dy(const CostModel& cost, const Vec& q, const Vec& y, const Vec& u) {
  if (cost.dy_cost) return cost.dy_cost(q, y, u);
  Vec g(y.size());
  for (int a = 0; a < y.size(); ++a) {
    g(a) = numdiff::central4<double>([&](const Vec& yy) { return cost.running_cost(q, yy, u); }, y, a,
                                     numdiff::fallback_step(y(a)));
  }
  return g;
}

/// u(q', y, ydot) for configurations near q; used to differentiate the
/// inverse dynamics in q.
Vec control_at(const MechanicalModel& model, const Vec& q, const Vec& y, const Vec& ydot) {
  const ContractedGeometry c = contracted_geometry(model, q, y);
  return control_weight(model, c.gd) * (ydot + c.quadratic + c.grad_V);
}

LagrangianJet jet_at(const MechanicalModel& model, const CostModel& cost, const LocalGeometry& geo,
                     const SecondOrderPoint& pt) {
  const int n = model.n;
  const int k = model.k;
  const Mat weight = control_weight(model, geo);
  const Vec f = free_acceleration(model, geo, pt.y);

  LagrangianJet jet;
  jet.control = weight * (pt.ydot - f);
  jet.value = total_cost(cost, pt.q, pt.y, jet.control);
  const Vec cu = cost.du_cost(pt.q, pt.y, jet.control);
  const Mat cuu = cost.duu_cost(pt.q, pt.y, jet.control);
  jet.dydot = weight.transpose() * cu;
  jet.hessian = weight.transpose() * cuu * weight;

  // du/dy = W S with S(C, A) = (Gamma^C_AB + Gamma^C_BA) y^B, exact since f is quadratic in y.
  Mat sym(k, k);
  for (int c = 0; c < k; ++c)
    for (int a = 0; a < k; ++a) {
      double s = 0.0;
      for (int b = 0; b < k; ++b) s += (geo.gamma(c, a, b) + geo.gamma(c, b, a)) * pt.y(b);
      sym(c, a) = s;
    }
  jet.dy = cost_dy(cost, pt.q, pt.y, jet.control) + (weight * sym).transpose() * cu;

  jet.dq = cost_dq(cost, pt.q, pt.y, jet.control);
  for (int i = 0; i < n; ++i) {
    const Vec du_dqi = numdiff::central4<Vec>([&](const Vec& qq) { return control_at(model, qq, pt.y, pt.ydot); },
                                              pt.q, i, numdiff::smooth_step(pt.q(i)));
    jet.dq(i) += du_dqi.dot(cu);
  }
  return jet;
}

}  // namespace

LagrangianJet lagrangian_jet(const MechanicalModel& model, const CostModel& cost, const SecondOrderPoint& pt) {
  require_point(model, pt.q, pt.y, pt.ydot);
  return jet_at(model, cost, LocalGeometry::at(model, pt.q), pt);
}

double ocp_lagrangian(const MechanicalModel& model, const CostModel& cost, const SecondOrderPoint& pt) {
  require_point(model, pt.q, pt.y, pt.ydot);
  return total_cost(cost, pt.q, pt.y, inverse_dynamics(model, pt.q, pt.y, pt.ydot));
}

double SigmaResidual::max_abs() const {
  double m = 0.0;
  for (const Vec* v : {&base, &fiber, &momentum, &admissibility})
    if (v->size() > 0) m = std::max(m, v->cwiseAbs().maxCoeff());
  return m;
}

namespace {

/// gamma_j d rho_A^j / dq^i y^A.
Vec bracket_pullback(const LocalGeometry& geo, const Vec& covector, const Vec& y) {
  const int n = static_cast<int>(covector.size());
  const int k = static_cast<int>(y.size());
  Vec out = Vec::Zero(n);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < n; ++j)
      for (int a = 0; a < k; ++a) s += covector(j) * geo.drho(j, a, i) * y(a);
    out(i) = s;
  }
  return out;
}

}  // namespace

SigmaResidual sigma_residual(const MechanicalModel& model, const CostModel& cost, const SigmaPoint& pt) {
  require_point(model, pt.q, pt.y, pt.ydot);
  const LocalGeometry geo = LocalGeometry::at(model, pt.q);
  const LagrangianJet jet = jet_at(model, cost, geo, {pt.q, pt.y, pt.ydot});
  SigmaResidual r;
  r.base = pt.mu_base + bracket_pullback(geo, pt.gamma_base, pt.y) - jet.dq;
  r.fiber = pt.mu_fiber + geo.rho.transpose() * pt.gamma_base - jet.dy;
  r.momentum = pt.gamma_fiber - jet.dydot;
  r.admissibility = pt.qdot - geo.rho * pt.y;
  return r;
}

ExtremalState legendre_transform(const MechanicalModel& model, const CostModel& cost, const SecondOrderPoint& pt,
                                 const Vec& gamma_base) {
  require_point(model, pt.q, pt.y, pt.ydot);
  if (gamma_base.size() != model.n) throw std::invalid_argument("legendre_transform: gamma_base has wrong size");
  const LocalGeometry geo = LocalGeometry::at(model, pt.q);
  const Mat weight = control_weight(model, geo);
  const Vec u = weight * (pt.ydot - free_acceleration(model, geo, pt.y));
  return {pt.q, pt.y, gamma_base, weight.transpose() * cost.du_cost(pt.q, pt.y, u)};
}

RegularityReport regularity_check(const MechanicalModel& model, const CostModel& cost, const SecondOrderPoint& pt) {
  require_point(model, pt.q, pt.y, pt.ydot);
  const Mat weight = control_weight(model, pt.q);
  RegularityReport report;
  Vec u = Vec::Zero(model.k);
  try {
    u = inverse_dynamics(model, pt.q, pt.y, pt.ydot);
  } catch (const SingularMetricError& e) {
    report.note = std::string(e.what()) + "; cost Hessian taken at u = 0";
  }
  const Mat cuu = cost.duu_cost(pt.q, pt.y, u);
  const Mat hessian = weight.transpose() * cuu * weight;
  report.cost_det = cuu.determinant();
  report.lagrangian_det = hessian.determinant();
  const double scale = std::pow(std::max(1e-300, hessian.cwiseAbs().maxCoeff()), model.k);
  report.regular = std::isfinite(report.lagrangian_det) && std::abs(report.lagrangian_det) > 1e-14 * scale &&
                   report.lagrangian_det != 0.0;
  if (!report.regular && report.note.empty()) report.note = "d2L/dydot2 is singular";
  return report;
}

namespace {

Vec invert_at(const MechanicalModel& model, const CostModel& cost, const LocalGeometry& geo, const Vec& y,
              const Vec& p_fiber) {
  const Mat weight = control_weight(model, geo);
  const Vec f = free_acceleration(model, geo, y);
  const Eigen::FullPivLU<Mat> lu(weight);
  if (!lu.isInvertible()) {
    throw LegendreError(model.name + ": control weight is singular, Legendre map not invertible");
  }
  if (cost.unit_quadratic) {
    // W^T W (ydot - f) = p.
    const Vec z = lu.transpose().solve(p_fiber);
    return f + lu.solve(z);
  }

  // Damped Newton on W^T C_u(W (ydot - f)) = p from the free acceleration.
  Vec ydot = f;
  auto residual = [&](const Vec& yd) {
    return Vec(weight.transpose() * cost.du_cost(geo.q, y, weight * (yd - f)) - p_fiber);
  };
  Vec r = residual(ydot);
  const double tol = 1e-12 * std::max(1.0, p_fiber.cwiseAbs().maxCoeff());
  for (int iter = 0; iter < 50; ++iter) {
    if (r.cwiseAbs().maxCoeff() <= tol) return ydot;
    const Mat jac = weight.transpose() * cost.duu_cost(geo.q, y, weight * (ydot - f)) * weight;
    const Eigen::FullPivLU<Mat> jlu(jac);
    if (!jlu.isInvertible()) throw LegendreError(model.name + ": d2L/dydot2 singular during Legendre inversion");
    const Vec step = -jlu.solve(r);
    double alpha = 1.0;
    Vec trial = ydot + step;
    Vec rt = residual(trial);
    while (rt.norm() >= r.norm() && alpha > 1e-6) {
      alpha *= 0.5;
      trial = ydot + alpha * step;
      rt = residual(trial);
    }
    ydot = trial;
    r = rt;
  }
  if (r.cwiseAbs().maxCoeff() <= tol) return ydot;
  throw LegendreError(model.name + ": Legendre inversion did not converge (residual " +
                      std::to_string(r.cwiseAbs().maxCoeff()) + ")");
}

}  // namespace

Vec invert_legendre(const MechanicalModel& model, const CostModel& cost, const Vec& q, const Vec& y,
                    const Vec& p_fiber) {
  if (q.size() != model.n || y.size() != model.k || p_fiber.size() != model.k) {
    throw std::invalid_argument("invert_legendre: wrong dimensions");
  }
  return invert_at(model, cost, LocalGeometry::at(model, q), y, p_fiber);
}

double hamiltonian(const MechanicalModel& model, const CostModel& cost, const ExtremalState& ex) {
  const LocalGeometry geo = LocalGeometry::at(model, ex.q);
  const Vec ydot = invert_at(model, cost, geo, ex.y, ex.p_fiber);
  const Mat weight = control_weight(model, geo);
  const Vec u = weight * (ydot - free_acceleration(model, geo, ex.y));
  return ex.p_fiber.dot(ydot) + ex.p_base.dot(geo.rho * ex.y) - total_cost(cost, ex.q, ex.y, u);
}

ExtremalState hamilton_rhs(const MechanicalModel& model, const CostModel& cost, const ExtremalState& ex) {
  if (ex.q.size() != model.n || ex.y.size() != model.k || ex.p_base.size() != model.n ||
      ex.p_fiber.size() != model.k) {
    throw std::invalid_argument("hamilton_rhs: wrong dimensions");
  }
  const LocalGeometry geo = LocalGeometry::at(model, ex.q);
  const Vec ydot = invert_at(model, cost, geo, ex.y, ex.p_fiber);
  const LagrangianJet jet = jet_at(model, cost, geo, {ex.q, ex.y, ydot});
  ExtremalState d;
  d.q = geo.rho * ex.y;
  d.y = ydot;
  d.p_base = jet.dq - bracket_pullback(geo, ex.p_base, ex.y);
  d.p_fiber = jet.dy - geo.rho.transpose() * ex.p_base;
  return d;
}

namespace {

/// First-derivative weights at x0 for nodes x (Fornberg's recursion).
std::vector<double> fd_weights(const std::vector<double>& x, double x0) {
  const std::size_t n = x.size();
  std::vector<std::vector<double>> c(n, std::vector<double>(2, 0.0));
  double c1 = 1.0, c4 = x[0] - x0;
  c[0][0] = 1.0;
  for (std::size_t i = 1; i < n; ++i) {
    const std::size_t mn = std::min<std::size_t>(i, 1);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = x[i] - x0;
    for (std::size_t j = 0; j < i; ++j) {
      const double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (std::size_t k = mn; k >= 1; --k) c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (std::size_t k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = c[i][1];
  return w;
}

/// First derivative on a uniform grid: centered stencils in the interior,
/// shifted towards the inside near the ends.
std::vector<Vec> differentiate(const std::vector<Vec>& f, double h, std::size_t stride, int points) {
  const std::size_t count = (f.size() - 1) / stride + 1;
  const std::size_t width = std::min<std::size_t>(static_cast<std::size_t>(points), count);
  const double hh = h * static_cast<double>(stride);
  std::vector<Vec> d(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t half = width / 2;
    const std::size_t first = i < half ? 0 : std::min(i - half, count - width);
    std::vector<double> nodes(width);
    for (std::size_t j = 0; j < width; ++j) nodes[j] = static_cast<double>(first + j) - static_cast<double>(i);
    const std::vector<double> w = fd_weights(nodes, 0.0);
    // differences against f_i so constant data differentiates to exactly zero
    const Vec& fi = f[i * stride];
    Vec acc = Vec::Zero(fi.size());
    for (std::size_t j = 0; j < width; ++j) acc += w[j] * (f[(first + j) * stride] - fi);
    d[i] = acc / hh;
  }
  return d;
}

struct ResidualBlocks {
  Mat base, fiber, admissibility;
};

ResidualBlocks extremal_blocks(const MechanicalModel& model, const CostModel& cost, double h, std::size_t stride,
                               const std::vector<Vec>& q, const std::vector<Vec>& y, const std::vector<Vec>& lambda,
                               int points) {
  const std::size_t count = (q.size() - 1) / stride + 1;
  const std::vector<Vec> qdot = differentiate(q, h, stride, points);
  const std::vector<Vec> ydot = differentiate(y, h, stride, points);
  const std::vector<Vec> lambda_dot = differentiate(lambda, h, stride, points);

  std::vector<LagrangianJet> jets(count);
  std::vector<LocalGeometry> geos(count);
  std::vector<Vec> momentum(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t s = i * stride;
    geos[i] = LocalGeometry::at(model, q[s]);
    jets[i] = jet_at(model, cost, geos[i], {q[s], y[s], ydot[i]});
    momentum[i] = jets[i].dydot;
  }
  const std::vector<Vec> momentum_dot = differentiate(momentum, h * static_cast<double>(stride), 1, points);

  ResidualBlocks out{Mat(count, model.n), Mat(count, model.k), Mat(count, model.n)};
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t s = i * stride;
    const auto row = static_cast<Eigen::Index>(i);
    out.base.row(row) = (lambda_dot[i] - jets[i].dq + bracket_pullback(geos[i], lambda[s], y[s])).transpose();
    out.fiber.row(row) = (momentum_dot[i] - jets[i].dy + geos[i].rho.transpose() * lambda[s]).transpose();
    out.admissibility.row(row) = (qdot[i] - geos[i].rho * y[s]).transpose();
  }
  return out;
}

double max_abs(const Mat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

ExtremalResidual lagrangian_extremal_residual(const MechanicalModel& model, const CostModel& cost,
                                              const std::vector<double>& times, const std::vector<Vec>& q,
                                              const std::vector<Vec>& y, const std::vector<Vec>& lambda,
                                              int stencil_points) {
  if (stencil_points < 3 || stencil_points > 9 || stencil_points % 2 == 0) {
    throw std::invalid_argument("lagrangian_extremal_residual: stencil_points must be 3, 5, 7 or 9");
  }
  const std::size_t count = times.size();
  if (count < 3 || q.size() != count || y.size() != count || lambda.size() != count) {
    throw std::invalid_argument("lagrangian_extremal_residual: need at least 3 aligned samples");
  }
  const double h = times[1] - times[0];
  for (std::size_t i = 1; i < count; ++i) {
    if (std::abs((times[i] - times[i - 1]) - h) > 1e-9 * std::max(1.0, std::abs(h))) {
      throw std::invalid_argument("lagrangian_extremal_residual: grid is not uniform");
    }
  }

  const ResidualBlocks fine = extremal_blocks(model, cost, h, 1, q, y, lambda, stencil_points);
  ExtremalResidual r;
  r.base = fine.base;
  r.fiber = fine.fiber;
  r.admissibility = fine.admissibility;
  r.max_base = max_abs(r.base);
  r.max_fiber = max_abs(r.fiber);
  r.max_admissibility = max_abs(r.admissibility);

  if (count >= 7) {
    const ResidualBlocks coarse = extremal_blocks(model, cost, h, 2, q, y, lambda, stencil_points);
    const double coarse_max = std::max({max_abs(coarse.base), max_abs(coarse.fiber), max_abs(coarse.admissibility)});
    const double fine_max = r.max_abs();
    r.coarsening_ratio = fine_max > 0.0 ? coarse_max / fine_max : 0.0;
    // Truncation-dominated residuals shrink sharply under refinement; exact
    // extremals leave only round-off, which does not.
    r.grid_limited = fine_max > 0.0 && r.coarsening_ratio > 3.0;
  }
  return r;
}

ExtremalResidual lagrangian_extremal_residual(const MechanicalModel& model, const CostModel& cost,
                                              const Trajectory& extremal, int stencil_points) {
  if (extremal.layout != StateLayout::Extremal) {
    throw std::invalid_argument("lagrangian_extremal_residual: trajectory is not an extremal");
  }
  std::vector<Vec> q, y, lambda;
  q.reserve(extremal.size());
  y.reserve(extremal.size());
  lambda.reserve(extremal.size());
  for (std::size_t i = 0; i < extremal.size(); ++i) {
    q.push_back(extremal.q(i));
    y.push_back(extremal.y(i));
    lambda.push_back(extremal.p_base(i));
  }
  return lagrangian_extremal_residual(model, cost, extremal.times, q, y, lambda, stencil_points);
}

}  // namespace nhocp
