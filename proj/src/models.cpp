#include "nhocp/models.hpp"

#include <cmath>
#include <numbers>

namespace nhocp::models {

namespace {

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ParameterError(std::string(what) + " must be positive and finite");
}

Mat diag3(double a, double b, double c) {
  Mat m = Mat::Zero(3, 3);
  m(0, 0) = a;
  m(1, 1) = b;
  m(2, 2) = c;
  return m;
}

double adaptive_simpson_step(const std::function<double(double)>& f, double a, double b, double fa, double fm,
                             double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adaptive_simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol) {
  if (a == b) return 0.0;
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson_step(f, a, b, fa, fm, fb, whole, tol, 50);
}

}  // namespace

void validate(const SleighParams& p) {
  require_positive(p.m, "sleigh mass m");
  require_positive(p.J, "sleigh inertia J");
  if (!(p.a >= 0.0) || !std::isfinite(p.a)) throw ParameterError("sleigh offset a must be non-negative");
}

void validate(const CvtParams& p) {
  require_positive(p.m, "CVT mass m");
  require_positive(p.J1, "CVT inertia J1");
  require_positive(p.J2, "CVT inertia J2");
}

void validate(const ObstacleParams& p) {
  if (!(p.kappa >= 0.0) || !std::isfinite(p.kappa)) throw ParameterError("obstacle kappa must be >= 0");
  if (!std::isfinite(p.center[0]) || !std::isfinite(p.center[1])) throw ParameterError("obstacle center must be finite");
}

MechanicalModel chaplygin_sleigh(const SleighParams& p) {
  validate(p);
  MechanicalModel model;
  model.name = "chaplygin_sleigh";
  model.n = 3;
  model.k = 2;
  // Scaled so that rho^T M rho is diag(b/J, 1/m); the projector and bracket
  // are unchanged from diag(m, m, J).
  const Mat metric = diag3(p.m, p.m, p.a * p.a * p.m);
  model.metric = [metric](const Vec&) { return metric; };
  model.metric_jacobian = [](const Vec&) { return Tensor3(3, 3, 3); };
  const double m = p.m, J = p.J;
  model.basis = [m, J](const Vec& q) {
    Mat rho = Mat::Zero(3, 2);
    rho(2, 0) = 1.0 / J;
    rho(0, 1) = std::cos(q(2)) / m;
    rho(1, 1) = std::sin(q(2)) / m;
    return rho;
  };
  model.basis_jacobian = [m](const Vec& q) {
    Tensor3 d(3, 2, 3);
    d(0, 1, 2) = -std::sin(q(2)) / m;
    d(1, 1, 2) = std::cos(q(2)) / m;
    return d;
  };
  model.control_mode = ControlMode::EulerLagrange;
  // u1 is the force along the body (drives y2), u2 the torque (drives y1).
  model.input_map = Mat{{0.0, 1.0}, {1.0, 0.0}};
  model.sample_configuration = [](std::mt19937_64& rng) {
    std::uniform_real_distribution<double> pos(-2.0, 2.0), ang(-std::numbers::pi, std::numbers::pi);
    Vec q(3);
    q << pos(rng), pos(rng), ang(rng);
    return q;
  };
  model.coordinate_names = {"x", "y", "theta"};
  model.velocity_names = {"y1", "y2"};
  return model;
}

MechanicalModel cvt(const CvtParams& p) {
  validate(p);
  MechanicalModel model;
  model.name = "cvt";
  model.n = 3;
  model.k = 2;
  const Mat metric = diag3(p.J1, p.J2, p.m);
  model.metric = [metric](const Vec&) { return metric; };
  model.metric_jacobian = [](const Vec&) { return Tensor3(3, 3, 3); };
  const double m = p.m;
  model.basis = [m](const Vec& q) {
    Mat rho = Mat::Zero(3, 2);
    rho(2, 0) = 1.0 / m;
    rho(0, 1) = 1.0 - q(2);
    rho(1, 1) = q(2);
    return rho;
  };
  model.basis_jacobian = [](const Vec&) {
    Tensor3 d(3, 2, 3);
    d(0, 1, 2) = -1.0;
    d(1, 1, 2) = 1.0;
    return d;
  };
  model.control_mode = ControlMode::EulerLagrange;
  model.input_map = Mat{{0.0, 1.0}, {1.0, 0.0}};
  model.chart_guard = [](const Vec& q) { return q(2) > 0.0 && q(2) < 1.0; };
  model.sample_configuration = [](std::mt19937_64& rng) {
    std::uniform_real_distribution<double> ang(-std::numbers::pi, std::numbers::pi), slider(0.05, 0.95);
    Vec q(3);
    q << ang(rng), ang(rng), slider(rng);
    return q;
  };
  model.coordinate_names = {"theta1", "theta2", "x"};
  model.velocity_names = {"y1", "y2"};
  return model;
}

double sleigh_regularity_determinant(const SleighParams& p) { return std::pow(p.a / p.J, 4); }

double cvt_regularity_determinant(const CvtParams& p, double x) {
  const double b = p.B(x);
  return b * b / (p.m * p.m);
}

double obstacle_distance(const ObstacleParams& o, const Vec& q) {
  return std::hypot(q(0) - o.center[0], q(1) - o.center[1]);
}

double obstacle_potential(const ObstacleParams& o, const Vec& q) {
  if (o.kappa == 0.0) return 0.0;
  const double dx = q(0) - o.center[0], dy = q(1) - o.center[1];
  const double r2 = dx * dx + dy * dy;
  if (r2 == 0.0) throw std::runtime_error("navigation potential is singular at the obstacle center");
  return o.kappa / r2;
}

Vec obstacle_potential_gradient(const ObstacleParams& o, const Vec& q) {
  Vec g = Vec::Zero(q.size());
  if (o.kappa == 0.0) return g;
  const double dx = q(0) - o.center[0], dy = q(1) - o.center[1];
  const double r2 = dx * dx + dy * dy;
  if (r2 == 0.0) throw std::runtime_error("navigation potential is singular at the obstacle center");
  const double s = -2.0 * o.kappa / (r2 * r2);
  g(0) = s * dx;
  g(1) = s * dy;
  return g;
}

CostModel sleigh_with_obstacle(const SleighParams& p, const ObstacleParams& o) {
  validate(p);
  validate(o);
  CostModel cost = quadratic_cost();
  if (o.kappa == 0.0) return cost;
  cost.name = "quadratic+obstacle";
  cost.potential_term = StateCostTerm{[o](const Vec& q) { return obstacle_potential(o, q); },
                                      [o](const Vec& q) { return obstacle_potential_gradient(o, q); }, 0.5};
  return cost;
}

SleighExtremalSample sleigh_analytic_extremal(const SleighExtremalConstants& c, const SleighParams& p, double t,
                                              double x0, double y0) {
  const double m = p.m, J = p.J, b = p.b();
  auto theta = [&](double s) { return (c.c3 * s * s * s / 6.0 + c.c4 * s * s / 2.0 + c.c5 * s + c.c6) / J; };
  auto speed = [&](double s) { return (c.c7 * s + c.c8) / m; };
  SleighExtremalSample out;
  out.theta = theta(t);
  out.y1 = c.c3 * t * t / 2.0 + c.c4 * t + c.c5;
  out.y2 = c.c7 * t + c.c8;
  out.u1 = c.c7 / m;
  out.u2 = b * (c.c3 * t + c.c4) / J;
  out.x = x0 + adaptive_simpson([&](double s) { return std::cos(theta(s)) * speed(s); }, 0.0, t, 1e-13);
  out.y = y0 + adaptive_simpson([&](double s) { return std::sin(theta(s)) * speed(s); }, 0.0, t, 1e-13);
  return out;
}

SleighExtremalConstants sleigh_constants_from_state(const SleighParams& p, const ExtremalState& start) {
  if (start.p_base(0) != 0.0 || start.p_base(1) != 0.0) {
    throw ParameterError("closed-form sleigh extremal needs p_x = p_y = 0");
  }
  const double b = p.b();
  SleighExtremalConstants c;
  c.c3 = -p.J * start.p_base(2) / (b * b);
  c.c4 = p.J * p.J * start.p_fiber(0) / (b * b);
  c.c5 = start.y(0);
  c.c6 = p.J * start.q(2);
  c.c7 = p.m * p.m * start.p_fiber(1);
  c.c8 = start.y(1);
  return c;
}

BoundaryConditions sleigh_obstacle_boundary() {
  BoundaryConditions bc;
  bc.start = AdaptedState{Vec::Zero(3), Vec::Zero(2)};
  Vec target = Vec::Zero(3);
  target << 1.0, 1.0, 0.0;
  bc.target = AdaptedState{target, Vec::Zero(2)};
  bc.horizon = 1.0;
  return bc;
}

Vec sleigh_obstacle_costate_guess() {
  Vec p(5);
  p << 1.8, 25.2, 11.2, 2.2, 7.2;
  return p;
}

std::vector<double> default_kappas() { return {0.0, 0.01, 0.1, 0.25, 0.5}; }

}  // namespace nhocp::models
