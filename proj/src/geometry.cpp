#include "nhocp/geometry.hpp"

#include "nhocp/numdiff.hpp"

#include <sstream>

namespace nhocp {

namespace {

std::string format_q(const Vec& q) {
  std::ostringstream os;
  os << "(";
  for (Eigen::Index i = 0; i < q.size(); ++i) os << (i ? ", " : "") << q(i);
  os << ")";
  return os.str();
}

}  // namespace

void require_chart(const MechanicalModel& model, const Vec& q) {
  if (q.size() != model.n) {
    throw ChartError(model.name + ": configuration has dimension " + std::to_string(q.size()) +
                     ", expected " + std::to_string(model.n));
  }
  if (!q.allFinite()) throw ChartError(model.name + ": non-finite configuration " + format_q(q));
  if (!model.in_chart(q)) throw ChartError(model.name + ": configuration " + format_q(q) + " outside chart");
}

Tensor3 basis_jacobian(const MechanicalModel& model, const Vec& q) {
  if (model.basis_jacobian) return model.basis_jacobian(q);
  Tensor3 out(model.n, model.k, model.n);
  for (int j = 0; j < model.n; ++j) {
    const Mat d = numdiff::central4<Mat>(model.basis, q, j, numdiff::fallback_step(q(j)));
    for (int i = 0; i < model.n; ++i)
      for (int a = 0; a < model.k; ++a) out(i, a, j) = d(i, a);
  }
  return out;
}

Tensor3 metric_jacobian(const MechanicalModel& model, const Vec& q) {
  if (model.metric_jacobian) return model.metric_jacobian(q);
  Tensor3 out(model.n, model.n, model.n);
  for (int l = 0; l < model.n; ++l) {
    const Mat d = numdiff::central4<Mat>(model.metric, q, l, numdiff::fallback_step(q(l)));
    for (int i = 0; i < model.n; ++i)
      for (int j = 0; j < model.n; ++j) out(i, j, l) = d(i, j);
  }
  return out;
}

double potential(const MechanicalModel& model, const Vec& q) {
  return model.potential ? model.potential(q) : 0.0;
}

Vec potential_gradient(const MechanicalModel& model, const Vec& q) {
  if (model.potential_gradient) return model.potential_gradient(q);
  Vec g = Vec::Zero(model.n);
  if (!model.potential) return g;
  for (int i = 0; i < model.n; ++i)
    g(i) = numdiff::central4<double>(model.potential, q, i, numdiff::fallback_step(q(i)));
  return g;
}

namespace {

InducedMetric factor_induced(const MechanicalModel& model, const Mat& rho, const Mat& metric,
                             bool with_inverse = true) {
  InducedMetric out;
  out.metric = rho.transpose() * metric * rho;
  out.metric = 0.5 * (out.metric + out.metric.transpose());
  out.factor.compute(out.metric);
  if (out.factor.info() != Eigen::Success) {
    throw SingularMetricError(model.name + ": induced metric is not positive definite");
  }
  // Reject numerically singular factors as well; LLT succeeds on tiny pivots.
  const Mat& l = out.factor.matrixLLT();
  const double scale = std::max(1.0, out.metric.cwiseAbs().maxCoeff());
  for (int a = 0; a < model.k; ++a) {
    if (!(l(a, a) * l(a, a) > 1e-14 * scale)) {
      throw SingularMetricError(model.name + ": induced metric is singular");
    }
  }
  if (with_inverse) out.inverse = out.factor.solve(Mat::Identity(model.k, model.k));
  return out;
}

}  // namespace

InducedMetric induced_metric(const MechanicalModel& model, const Vec& q) {
  require_chart(model, q);
  return factor_induced(model, model.basis(q), model.metric(q));
}

Mat orthogonal_projector(const MechanicalModel& model, const Vec& q) {
  require_chart(model, q);
  const Mat rho = model.basis(q);
  const Mat metric = model.metric(q);
  const InducedMetric gd = factor_induced(model, rho, metric);
  return rho * gd.factor.solve(rho.transpose() * metric);
}

Mat complementary_projector(const MechanicalModel& model, const Vec& q) {
  return Mat::Identity(model.n, model.n) - orthogonal_projector(model, q);
}

LocalGeometry LocalGeometry::at(const MechanicalModel& model, const Vec& q) {
  require_chart(model, q);
  const int n = model.n;
  const int k = model.k;

  LocalGeometry g;
  g.q = q;
  g.metric = model.metric(q);
  g.rho = model.basis(q);
  g.drho = nhocp::basis_jacobian(model, q);
  g.dmetric = nhocp::metric_jacobian(model, q);
  g.gd = factor_induced(model, g.rho, g.metric);
  g.dV = nhocp::potential_gradient(model, q);
  g.grad_V = g.gd.factor.solve(g.rho.transpose() * g.dV);

  // Lie brackets [e_A, e_B]^i = rho_A^j d_j rho_B^i - rho_B^j d_j rho_A^i,
  // projected onto the frame through (G^D)^{-1} rho^T M.
  const Mat rho_t_metric = g.rho.transpose() * g.metric;
  g.bracket = Tensor3(k, k, k);
  for (int a = 0; a < k; ++a) {
    for (int b = a + 1; b < k; ++b) {
      Vec lie = Vec::Zero(n);
      for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int j = 0; j < n; ++j) s += g.rho(j, a) * g.drho(i, b, j) - g.rho(j, b) * g.drho(i, a, j);
        lie(i) = s;
      }
      const Vec c = g.gd.factor.solve(rho_t_metric * lie);
      for (int e = 0; e < k; ++e) {
        g.bracket(e, a, b) = c(e);
        g.bracket(e, b, a) = -c(e);
      }
    }
  }

  // Frame derivatives of the induced metric, dgd(C, D, B) = e_B(G^D_CD).
  std::vector<Mat> dgd_dq(n);
  for (int l = 0; l < n; ++l) {
    Mat drho_l(n, k), dmetric_l(n, n);
    for (int i = 0; i < n; ++i) {
      for (int a = 0; a < k; ++a) drho_l(i, a) = g.drho(i, a, l);
      for (int j = 0; j < n; ++j) dmetric_l(i, j) = g.dmetric(i, j, l);
    }
    const Mat half = drho_l.transpose() * g.metric * g.rho;
    dgd_dq[l] = half + half.transpose() + g.rho.transpose() * dmetric_l * g.rho;
  }
  Tensor3 dgd(k, k, k);
  for (int c = 0; c < k; ++c)
    for (int d = 0; d < k; ++d)
      for (int b = 0; b < k; ++b) {
        double s = 0.0;
        for (int l = 0; l < n; ++l) s += g.rho(l, b) * dgd_dq[l](c, d);
        dgd(c, d, b) = s;
      }

  // G^D(bracket(B, C), e_D) = c^E_BC G_ED.
  const Mat& gm = g.gd.metric;
  auto bracket_dot = [&](int b, int c, int d) {
    double s = 0.0;
    for (int e = 0; e < k; ++e) s += g.bracket(e, b, c) * gm(e, d);
    return s;
  };

  // Koszul formula in the adapted frame with the nonholonomic bracket.
  g.gamma = Tensor3(k, k, k);
  Vec lowered(k);
  for (int b = 0; b < k; ++b) {
    for (int c = 0; c < k; ++c) {
      for (int d = 0; d < k; ++d) {
        lowered(d) = 0.5 * (dgd(c, d, b) + dgd(b, d, c) - dgd(b, c, d) + bracket_dot(b, c, d) -
                            bracket_dot(b, d, c) - bracket_dot(c, d, b));
      }
      const Vec raised = g.gd.factor.solve(lowered);
      for (int a = 0; a < k; ++a) g.gamma(a, b, c) = raised(a);
    }
  }
  return g;
}

Vec LocalGeometry::quadratic_term(const Vec& y) const {
  const int k = static_cast<int>(y.size());
  Vec out = Vec::Zero(k);
  for (int c = 0; c < k; ++c) {
    double s = 0.0;
    for (int a = 0; a < k; ++a)
      for (int b = 0; b < k; ++b) s += gamma(c, a, b) * y(a) * y(b);
    out(c) = s;
  }
  return out;
}

Vec nonholonomic_bracket(const MechanicalModel& model, int a, int b, const Vec& q) {
  if (a < 0 || b < 0 || a >= model.k || b >= model.k) {
    throw std::out_of_range("nonholonomic_bracket: frame index out of range");
  }
  const LocalGeometry g = LocalGeometry::at(model, q);
  Vec c(model.k);
  for (int e = 0; e < model.k; ++e) c(e) = g.bracket(e, a, b);
  return c;
}

Tensor3 christoffel(const MechanicalModel& model, const Vec& q) {
  return LocalGeometry::at(model, q).gamma;
}

Vec grad_potential(const MechanicalModel& model, const Vec& q) {
  require_chart(model, q);
  const Mat rho = model.basis(q);
  const InducedMetric gd = factor_induced(model, rho, model.metric(q));
  return gd.factor.solve(rho.transpose() * nhocp::potential_gradient(model, q));
}

ContractedGeometry contracted_geometry(const MechanicalModel& model, const Vec& q, const Vec& y) {
  require_chart(model, q);
  const int n = model.n;
  const int k = model.k;
  const Mat metric = model.metric(q);
  const Mat rho = model.basis(q);
  const Tensor3 drho = nhocp::basis_jacobian(model, q);
  const Tensor3 dmetric = nhocp::metric_jacobian(model, q);

  ContractedGeometry out;
  out.gd = factor_induced(model, rho, metric, false);

  const Vec v = rho * y;
  const Vec mv = metric * v;
  // Directional derivatives of rho and M along w.
  auto drho_along = [&](const Vec& w) {
    Mat d = Mat::Zero(n, k);
    for (int i = 0; i < n; ++i)
      for (int a = 0; a < k; ++a)
        for (int j = 0; j < n; ++j) d(i, a) += drho(i, a, j) * w(j);
    return d;
  };
  auto dmetric_along = [&](const Vec& w) {
    Mat d = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int l = 0; l < n; ++l) d(i, j) += dmetric(i, j, l) * w(l);
    return d;
  };

  // Koszul formula contracted twice with y:
  // (dG^D along v) y - 1/2 y^T e_D(G^D) y - y^B G([e_B, e_D], v).
  const Mat drho_v = drho_along(v);
  const Vec drho_v_y = drho_v * y;
  Vec lowered = drho_v.transpose() * mv + rho.transpose() * (metric * drho_v_y + dmetric_along(v) * v);
  for (int d = 0; d < k; ++d) {
    const Vec e_d = rho.col(d);
    const Vec drho_e_y = drho_along(e_d) * y;
    lowered(d) -= drho_e_y.dot(mv) + 0.5 * v.dot(dmetric_along(e_d) * v);
    lowered(d) -= (drho_v.col(d) - drho_e_y).dot(mv);
  }
  out.quadratic = out.gd.factor.solve(lowered);
  out.grad_V = model.potential || model.potential_gradient
                   ? Vec(out.gd.factor.solve(rho.transpose() * nhocp::potential_gradient(model, q)))
                   : Vec(Vec::Zero(k));
  return out;
}

}  // namespace nhocp
