#pragma once

#include "nhocp/core.hpp"

#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace nhocp {

/// Packed layout of Trajectory::states.
enum class StateLayout {
  Generic,   ///< arbitrary ODE state
  Adapted,   ///< (q, y)
  Extremal,  ///< (q, y, p_base, p_fiber)
};

struct IntegrationFailure {
  double time = 0.0;  ///< time of the last accepted sample
  bool chart_exit = false;
  std::string message;
};

/// Samples on a uniform time grid.
struct Trajectory {
  StateLayout layout = StateLayout::Generic;
  int n = 0;  ///< configuration dimension (Adapted/Extremal layouts)
  int k = 0;  ///< distribution rank (Adapted/Extremal layouts)

  std::vector<double> times;
  std::vector<Vec> states;
  std::vector<Vec> controls;  ///< empty, or one k-vector per sample
  double cost = std::numeric_limits<double>::quiet_NaN();

  /// Set when integration stopped early; samples end at failure->time.
  std::optional<IntegrationFailure> failure;

  std::size_t size() const { return times.size(); }
  bool empty() const { return times.empty(); }
  double step() const { return times.size() > 1 ? times[1] - times[0] : 0.0; }

  Vec q(std::size_t i) const { return states[i].head(n); }
  Vec y(std::size_t i) const { return states[i].segment(n, k); }
  Vec p_base(std::size_t i) const { return states[i].segment(n + k, n); }
  Vec p_fiber(std::size_t i) const { return states[i].segment(2 * n + k, k); }
};

}  // namespace nhocp
