#include "nhocp/parallel.hpp"

#include <exception>
#include <vector>

#ifdef NHOCP_OPENMP
#include <omp.h>
#endif

namespace nhocp::parallel {

namespace {

Vec forward_column(const VectorMap& map, const Vec& x, const Vec& base, int j, double rel_step) {
  const double step = rel_step * std::max(1.0, std::abs(x(j)));
  Vec xp = x;
  xp(j) += step;
  // Use the representable step actually taken.
  const double taken = xp(j) - x(j);
  return (map(xp) - base) / taken;
}

Vec central_column(const VectorMap& map, const Vec& x, int j, double step) {
  Vec xp = x, xm = x;
  xp(j) += step;
  xm(j) -= step;
  return (map(xp) - map(xm)) / (2.0 * step);
}

void rethrow_first(const std::vector<std::exception_ptr>& errors) {
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

int thread_count() {
#ifdef NHOCP_OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void for_each_index_serial(int count, const std::function<void(int)>& body) {
  for (int i = 0; i < count; ++i) body(i);
}

void for_each_index(int count, const std::function<void(int)>& body) {
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(std::max(count, 0)));
#ifdef NHOCP_OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
  for (int i = 0; i < count; ++i) {
    try {
      body(i);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  rethrow_first(errors);
}

Mat forward_jacobian_serial(const VectorMap& map, const Vec& x, const Vec& base, std::span<const int> columns,
                            double rel_step) {
  Mat jac(base.size(), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t c = 0; c < columns.size(); ++c) {
    jac.col(static_cast<Eigen::Index>(c)) = forward_column(map, x, base, columns[c], rel_step);
  }
  return jac;
}

Mat forward_jacobian(const VectorMap& map, const Vec& x, const Vec& base, std::span<const int> columns,
                     double rel_step) {
  Mat jac(base.size(), static_cast<Eigen::Index>(columns.size()));
  for_each_index(static_cast<int>(columns.size()), [&](int c) {
    jac.col(c) = forward_column(map, x, base, columns[static_cast<std::size_t>(c)], rel_step);
  });
  return jac;
}

Mat central_jacobian_serial(const VectorMap& map, const Vec& x, double step) {
  const Vec probe = map(x);
  Mat jac(probe.size(), x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) jac.col(j) = central_column(map, x, static_cast<int>(j), step);
  return jac;
}

Mat central_jacobian(const VectorMap& map, const Vec& x, double step) {
  const Vec probe = map(x);
  Mat jac(probe.size(), x.size());
  for_each_index(static_cast<int>(x.size()), [&](int j) { jac.col(j) = central_column(map, x, j, step); });
  return jac;
}

}  // namespace nhocp::parallel
