#pragma once

#include "nhocp/models.hpp"

#include <random>

namespace fixtures {

using nhocp::Mat;
using nhocp::Vec;

/// n = 3, k = 2 model with configuration-dependent SPD metric and basis, a
/// potential and no analytic derivatives, so every fallback path is used.
inline nhocp::MechanicalModel generic_model(nhocp::ControlMode mode = nhocp::ControlMode::Normalized) {
  nhocp::MechanicalModel model;
  model.name = "generic";
  model.n = 3;
  model.k = 2;
  model.metric = [](const Vec& q) {
    Mat l(3, 3);
    l << 1.0, 0.0, 0.0, 0.3 * std::sin(q(0)), 1.2, 0.0, 0.1, 0.2 * q(1), 0.9 + 0.1 * std::cos(q(2));
    return Mat(l * l.transpose() + 0.5 * Mat::Identity(3, 3));
  };
  model.basis = [](const Vec& q) {
    Mat r(3, 2);
    r << 1.0, 0.2 * std::sin(q(2)), 0.1 * q(0), 1.0, std::cos(q(1)), 0.3;
    return r;
  };
  model.potential = [](const Vec& q) { return 0.5 * q(0) * q(0) + 0.2 * std::cos(q(1)) + 0.1 * q(0) * q(2); };
  model.potential_gradient = [](const Vec& q) {
    Vec g(3);
    g << q(0) + 0.1 * q(2), -0.2 * std::sin(q(1)), 0.1 * q(0);
    return g;
  };
  model.control_mode = mode;
  model.sample_configuration = [](std::mt19937_64& rng) {
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    Vec q(3);
    q << d(rng), d(rng), d(rng);
    return q;
  };
  return model;
}

/// rho = I, M = I.
inline nhocp::MechanicalModel flat_model(int n) {
  nhocp::MechanicalModel model;
  model.name = "flat";
  model.n = n;
  model.k = n;
  model.metric = [n](const Vec&) { return Mat(Mat::Identity(n, n)); };
  model.basis = [n](const Vec&) { return Mat(Mat::Identity(n, n)); };
  return model;
}

inline Vec normal(std::mt19937_64& rng, int size, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  Vec v(size);
  for (int i = 0; i < size; ++i) v(i) = d(rng);
  return v;
}

inline Vec uniform(std::mt19937_64& rng, int size, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  Vec v(size);
  for (int i = 0; i < size; ++i) v(i) = d(rng);
  return v;
}

inline Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<int>(xs.size()));
  int i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

}  // namespace fixtures
