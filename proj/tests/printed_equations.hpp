#pragma once

// Hand-coded closed forms for the sleigh and the CVT, written out term by term
// so the generic pipeline can be compared against something that shares no
// code with it.

#include "nhocp/models.hpp"

#include <array>
#include <cmath>

namespace printed {

using nhocp::Vec;

// ---- sleigh, q = (x, y, theta) ----

struct Sleigh {
  double m, J, a;
  double b() const { return a * a * m / J; }
};

inline Vec sleigh_qdot(const Sleigh& s, const Vec& q, const Vec& y) {
  Vec qd(3);
  qd << std::cos(q(2)) / s.m * y(1), std::sin(q(2)) / s.m * y(1), y(0) / s.J;
  return qd;
}

// b ydot1 / J = u2, ydot2 / m = u1
inline Vec sleigh_ydot(const Sleigh& s, const Vec& u) {
  Vec yd(2);
  yd << s.J * u(1) / s.b(), s.m * u(0);
  return yd;
}

inline double sleigh_energy(const Sleigh& s, const Vec& y) {
  return y(1) * y(1) / (2.0 * s.m) + s.b() / (2.0 * s.J) * y(0) * y(0);
}

inline double sleigh_L(const Sleigh& s, const Vec& ydot) {
  const double b = s.b();
  return 0.5 * (b * b * ydot(0) * ydot(0) / (s.J * s.J) + ydot(1) * ydot(1) / (s.m * s.m));
}

inline std::array<std::array<double, 3>, 3> sleigh_projector(double th) {
  const double c = std::cos(th), sn = std::sin(th);
  return {{{c * c, c * sn, 0.0}, {c * sn, sn * sn, 0.0}, {0.0, 0.0, 1.0}}};
}

struct Obstacle {
  double kappa = 0.0, xc = 0.5, yc = 0.5;
  double r2(const Vec& q) const { return (q(0) - xc) * (q(0) - xc) + (q(1) - yc) * (q(1) - yc); }
};

// x = (x, y, theta, y1, y2, px, py, ptheta, p1, p2)
inline double sleigh_H(const Sleigh& s, const Obstacle& o, const Vec& x) {
  const double b = s.b(), th = x(2);
  double h = s.J * s.J / (2.0 * b * b) * x(8) * x(8) + s.m * s.m / 2.0 * x(9) * x(9) +
             x(5) * std::cos(th) / s.m * x(4) + x(7) / s.J * x(3) + x(6) * std::sin(th) / s.m * x(4);
  if (o.kappa != 0.0) h -= o.kappa / (2.0 * o.r2(x));
  return h;
}

inline Vec sleigh_hamilton(const Sleigh& s, const Obstacle& o, const Vec& x) {
  const double b = s.b(), th = x(2), c = std::cos(th), sn = std::sin(th);
  const double px = x(5), py = x(6), pth = x(7);
  Vec d(10);
  d(0) = c / s.m * x(4);
  d(1) = sn / s.m * x(4);
  d(2) = x(3) / s.J;
  d(3) = s.J * s.J * x(8) / (b * b);
  d(4) = s.m * s.m * x(9);
  d(5) = 0.0;
  d(6) = 0.0;
  if (o.kappa != 0.0) {
    // -dH/dx with H carrying -kappa / (2 r^2)
    const double r4 = o.r2(x) * o.r2(x);
    d(5) = -o.kappa * (x(0) - o.xc) / r4;
    d(6) = -o.kappa * (x(1) - o.yc) / r4;
  }
  d(7) = px * sn / s.m * x(4) - py * c / s.m * x(4);
  d(8) = -pth / s.J;
  d(9) = -px * c / s.m - py * sn / s.m;
  return d;
}

// ---- CVT, q = (theta1, theta2, x) ----

struct Cvt {
  double m, J1, J2;
  double A(double x) const { return J1 * (1.0 - x) - J2 * x; }
  double B(double x) const { return (1.0 - x) * (1.0 - x) * J1 + J2 * x * x; }
};

inline Vec cvt_qdot(const Cvt& c, const Vec& q, const Vec& y) {
  Vec qd(3);
  qd << (1.0 - q(2)) * y(1), q(2) * y(1), y(0) / c.m;
  return qd;
}

// ydot1 / m = 0, ydot2 B - y1 y2 A / m = 0
inline Vec cvt_free_ydot(const Cvt& c, const Vec& q, const Vec& y) {
  const double x = q(2);
  Vec yd(2);
  yd << 0.0, y(0) * y(1) * c.A(x) / (c.m * c.B(x));
  return yd;
}

// u1 = ydot2 B - y1 y2 A / m, u2 = ydot1 / m
inline Vec cvt_ydot(const Cvt& c, const Vec& q, const Vec& y, const Vec& u) {
  const double x = q(2);
  Vec yd(2);
  yd << c.m * u(1), (u(0) + y(0) * y(1) * c.A(x) / c.m) / c.B(x);
  return yd;
}

inline double cvt_energy(const Cvt& c, const Vec& q, const Vec& y) {
  return y(1) * y(1) / 2.0 * c.B(q(2)) + y(0) * y(0) / (2.0 * c.m);
}

inline double cvt_L(const Cvt& c, const Vec& q, const Vec& y, const Vec& ydot) {
  const double x = q(2);
  const double u1 = ydot(1) * c.B(x) - y(0) * y(1) * c.A(x) / c.m;
  return 0.5 * u1 * u1 + ydot(0) * ydot(0) / (2.0 * c.m * c.m);
}

// coefficient of X2 in [[X1, X2]]
inline double cvt_bracket(const Cvt& c, double x) {
  return -(1.0 / c.m) * (c.J1 * (1.0 - x) - c.J2 * x) / (c.J2 * x * x + c.J1 * (1.0 - x) * (1.0 - x));
}

// x = (theta1, theta2, x, y1, y2, pth1, pth2, px, p1, p2)
inline double cvt_H(const Cvt& c, const Vec& s) {
  const double x = s(2), A = c.A(x), B = c.B(x);
  return c.m * c.m * s(8) * s(8) / 2.0 + s(9) * s(9) / (2.0 * B * B) + s(9) * A * s(3) * s(4) / (c.m * B) +
         s(5) * (1.0 - x) * s(4) + s(6) * x * s(4) + s(7) * s(3) / c.m;
}

inline Vec cvt_hamilton(const Cvt& c, const Vec& s) {
  const double x = s(2), A = c.A(x), B = c.B(x);
  const double y1 = s(3), y2 = s(4), pt1 = s(5), pt2 = s(6), px = s(7), p1 = s(8), p2 = s(9);
  Vec d(10);
  d(0) = (1.0 - x) * y2;
  d(1) = x * y2;
  d(2) = y1 / c.m;
  d(3) = c.m * c.m * p1;
  d(4) = p2 / (B * B) + A * y1 * y2 / (c.m * B);
  d(5) = 0.0;
  d(6) = 0.0;
  d(7) = y2 * (pt1 - pt2) - p2 * y1 * y2 * (A * A - c.J1 * c.J2) / (c.m * B * B) - 2.0 * p2 * p2 * A / (B * B * B);
  d(8) = -p2 * A * y2 / (c.m * B) - px / c.m;
  d(9) = -p2 * A * y1 / (c.m * B) - pt1 * (1.0 - x) - pt2 * x;
  return d;
}

}  // namespace printed
