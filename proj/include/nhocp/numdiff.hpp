#pragma once

#include "nhocp/core.hpp"

#include <cmath>
#include <utility>

namespace nhocp::numdiff {

/// Step for fourth-order central differences of functions whose values carry
/// only rounding noise: eps^(1/3) scaled by the coordinate magnitude.
inline double fallback_step(double x) {
  static const double base = std::cbrt(std::numeric_limits<double>::epsilon());
  return base * std::max(1.0, std::abs(x));
}

/// Step that balances truncation and rounding for the fourth-order stencil
/// (eps^(1/5)); used where derivatives are differentiated once more.
inline double smooth_step(double x) {
  static const double base = std::pow(std::numeric_limits<double>::epsilon(), 0.2);
  return base * std::max(1.0, std::abs(x));
}

/// Fourth-order central difference of f along coordinate j.
/// R must support R - R and R * double (double, Vec, Mat, Tensor3).
template <class R, class F>
R central4(F&& f, const Vec& x, int j, double h) {
  Vec xp1 = x, xm1 = x, xp2 = x, xm2 = x;
  xp1(j) += h;
  xm1(j) -= h;
  xp2(j) += 2.0 * h;
  xm2(j) -= 2.0 * h;
  const R fp1 = f(xp1);
  const R fm1 = f(xm1);
  const R fp2 = f(xp2);
  const R fm2 = f(xm2);
  return R(((fp1 - fm1) * 8.0 - (fp2 - fm2)) * (1.0 / (12.0 * h)));
}

}  // namespace nhocp::numdiff
