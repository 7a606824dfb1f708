#pragma once

// Data-parallel kernels. Each has a serial reference implementation with the
// same arithmetic; the parallel variants distribute independent columns or
// samples over OpenMP threads and produce bitwise identical results.

#include "nhocp/core.hpp"

#include <functional>
#include <span>

namespace nhocp::parallel {

/// Map whose Jacobian is wanted, e.g. a time-T flow. May throw.
using VectorMap = std::function<Vec(const Vec&)>;

/// Forward-difference Jacobian columns of map at x, for the listed input
/// coordinates, with steps rel_step * max(1, |x_j|). base = map(x).
Mat forward_jacobian_serial(const VectorMap& map, const Vec& x, const Vec& base, std::span<const int> columns,
                            double rel_step);
Mat forward_jacobian(const VectorMap& map, const Vec& x, const Vec& base, std::span<const int> columns,
                     double rel_step);

/// Central-difference Jacobian of map at x over all inputs, absolute step.
Mat central_jacobian_serial(const VectorMap& map, const Vec& x, double step);
Mat central_jacobian(const VectorMap& map, const Vec& x, double step);

/// Runs body(i) for i in [0, count). The first exception (by index) is
/// rethrown after the loop.
void for_each_index_serial(int count, const std::function<void(int)>& body);
void for_each_index(int count, const std::function<void(int)>& body);

/// Number of threads the parallel kernels will use.
int thread_count();

}  // namespace nhocp::parallel
