#include "georabi/lambda_system.hpp"

#include <cmath>

#include "georabi/dynamics.hpp"

namespace georabi::lambda_sys {

double LambdaParams::ground_gap() const { return std::hypot(epsilon, delta); }

MixingState mixing(double epsilon, double delta, double e_g, const MixingState* previous) {
  const double r = std::hypot(epsilon, delta);
  if (r == 0.0) throw DegeneracyError("lambda system: (epsilon, delta) = (0, 0) is degenerate");
  double alpha = 0.5 * std::atan2(delta, epsilon);
  if (previous) alpha += M_PI * std::round((previous->alpha - alpha) / M_PI);
  MixingState m;
  m.alpha = alpha;
  m.E_plus = e_g + 0.5 * r;
  m.E_minus = e_g - 0.5 * r;
  m.g_plus << std::sin(alpha), std::cos(alpha);
  m.g_minus << std::cos(alpha), -std::sin(alpha);
  return m;
}

std::pair<double, double> drive_couplings(const LambdaParams& p, double alpha) {
  const double de = p.d * p.field;
  return {de * std::sin(p.beta_pol - alpha), de * std::cos(p.beta_pol - alpha)};
}

double gamma_analytic(const ParamPath& path, double d_times_field, double rtol) {
  if (path.names()->size() < 2) throw UsageError("gamma_analytic: need an (epsilon, delta) path");
  auto g = [&](double t) -> cplx {
    const Vec p = path.at(t).values();
    const Vec v = path.velocity(t);
    const double r2 = p[0] * p[0] + p[1] * p[1];
    if (r2 == 0.0) throw DegeneracyError("gamma_analytic: path crosses the origin");
    const double alpha_dot = 0.5 * (p[0] * v[1] - p[1] * v[0]) / r2;
    return cplx(-d_times_field * alpha_dot / std::sqrt(r2), 0.0);
  };
  return dynamics::integrate_adaptive(g, path.period(), path.breakpoints(), rtol).real();
}

Validity check_validity(const LambdaParams& p, double ground_gap) {
  Validity v;
  if (ground_gap > 0) {
    v.gap_ratio = (p.E_e - p.E_g) / ground_gap;
    v.drive_ratio = p.d * p.field / ground_gap;
  }
  return v;
}

ParamNames lambda_param_names() { return make_param_names({"epsilon", "delta", "beta_pol"}); }
ParamNames lambda_param_names_2() { return make_param_names({"epsilon", "delta"}); }

namespace {

Mat lambda_h0(double e_g, double e_e, double eps, double del) {
  Mat h = Mat::Zero(3, 3);
  h(0, 0) = e_g - 0.5 * eps;
  h(1, 1) = e_g + 0.5 * eps;
  h(0, 1) = h(1, 0) = 0.5 * del;
  h(2, 2) = e_e;
  return h;
}

// Dipoles d_eg1 = d (1, 0), d_eg2 = d (0, 1); field direction (sin beta,
// cos beta), so <e|H'|g1> = d sin(beta) and <e|H'|g2> = d cos(beta) at unit
// field amplitude.
Mat lambda_drive(double d, double beta) {
  Mat h = Mat::Zero(3, 3);
  h(0, 2) = h(2, 0) = d * std::sin(beta);
  h(1, 2) = h(2, 1) = d * std::cos(beta);
  return h;
}

}  // namespace

std::unique_ptr<MatrixModel> to_generic(const LambdaParams& p, double param_scale) {
  auto names = lambda_param_names();
  const double e_g = p.E_g, e_e = p.E_e, d = p.d;
  auto model = std::make_unique<MatrixModel>(
      3, names,
      [e_g, e_e](const ParamVector& lam) { return lambda_h0(e_g, e_e, lam[0], lam[1]); },
      [d](const ParamVector& lam) { return lambda_drive(d, lam[2]); }, RoleMap{0, 2, {1}});
  Vec scales(3);
  scales << param_scale, param_scale, 1.0;
  model->set_param_scales(scales);
  return model;
}

std::unique_ptr<MatrixModel> to_generic_tracked2(const LambdaParams& p, double param_scale) {
  auto names = lambda_param_names_2();
  const double e_g = p.E_g, e_e = p.E_e, d = p.d;
  auto model = std::make_unique<MatrixModel>(
      3, names,
      [e_g, e_e](const ParamVector& lam) { return lambda_h0(e_g, e_e, lam[0], lam[1]); },
      [d](const ParamVector& lam) {
        const double alpha = 0.5 * std::atan2(lam[1], lam[0]);
        return lambda_drive(d, alpha);
      },
      RoleMap{0, 2, {1}});
  Vec scales(2);
  scales << param_scale, param_scale;
  model->set_param_scales(scales);
  return model;
}

std::shared_ptr<TrackedArcPath> circle_schedule(double radius, double omega, double phi0) {
  if (omega == 0.0) throw UsageError("circle schedule: omega must be nonzero");
  const double span = omega > 0 ? 2.0 * M_PI : -2.0 * M_PI;
  return std::make_shared<TrackedArcPath>(lambda_param_names(), radius, phi0, phi0 + span,
                                          2.0 * M_PI / std::abs(omega));
}

}  // namespace georabi::lambda_sys
