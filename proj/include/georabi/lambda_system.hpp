#pragma once

#include <memory>
#include <optional>

#include "georabi/model.hpp"
#include "georabi/paths.hpp"

namespace georabi::lambda_sys {

// Two tunable ground states (splitting epsilon, tunneling delta) far below a
// single excited state; the drive couples both ground states to the excited
// one through perpendicular dipoles of equal magnitude d. field is the
// drive amplitude (the electric field magnitude), beta_pol the polarization
// angle measured from the second dipole.
struct LambdaParams {
  double E_g = 0.0;
  double E_e = 0.0;
  double epsilon = 0.0;
  double delta = 0.0;
  double d = 1.0;
  double field = 0.0;
  double beta_pol = 0.0;

  double ground_gap() const;  // sqrt(eps^2 + delta^2)
};

struct MixingState {
  double alpha = 0.0;  // continuously unwound mixing angle
  double E_plus = 0.0, E_minus = 0.0;
  Eigen::Vector2d g_plus, g_minus;  // components in the {g1, g2} basis
};

// alpha = atan2(delta, epsilon) / 2, unwound against `previous` when given.
MixingState mixing(double epsilon, double delta, double e_g,
                   const MixingState* previous = nullptr);
inline MixingState mixing(const LambdaParams& p, const MixingState* previous = nullptr) {
  return mixing(p.epsilon, p.delta, p.E_g, previous);
}

// Drive matrix elements (<e|H'|g_minus>, <e|H'|g_plus>) =
// d field (sin(beta - alpha), cos(beta - alpha)).
std::pair<double, double> drive_couplings(const LambdaParams& p, double alpha);

// Rotation angle for a polarization-tracked schedule: the line integral of
// -d field / sqrt(eps^2 + delta^2) over d(alpha) along a path in
// (epsilon, delta). The path must avoid the origin.
double gamma_analytic(const ParamPath& path_eps_delta, double d_times_field, double rtol = 1e-10);

// Excited-state amplitude after a tracked cyclic schedule with rotation
// angle gamma, starting from g_minus.
inline double excited_amplitude(double gamma) { return std::sin(gamma); }

// Engineering validity thresholds (flagged, not enforced).
struct Validity {
  double gap_ratio = 0.0;    // (E_e - E_g) / ground gap, want >= 20
  double drive_ratio = 0.0;  // d field / ground gap, want <= 0.2
  bool ok() const { return gap_ratio >= 20.0 && drive_ratio <= 0.2; }
};
Validity check_validity(const LambdaParams& p, double ground_gap);

// Three-parameter generic model (epsilon, delta, beta_pol): the polarization
// angle rides along as a path parameter so the drive operator stays a
// single-valued smooth function of lambda while beta(t) = alpha(t) winds.
std::unique_ptr<MatrixModel> to_generic(const LambdaParams& p, double param_scale);

// Two-parameter variant with beta = alpha(epsilon, delta) baked into the
// drive operator (principal branch); used for surface integrals and
// cross-checks on regions away from the branch cut.
std::unique_ptr<MatrixModel> to_generic_tracked2(const LambdaParams& p, double param_scale);

ParamNames lambda_param_names();    // epsilon, delta, beta_pol
ParamNames lambda_param_names_2();  // epsilon, delta

// Circle of given radius about the origin in (epsilon, delta), polarization
// tracked at half the polar angle; one traversal takes 2 pi / |omega| and
// winds the polar angle by +-2 pi (sign of omega).
std::shared_ptr<TrackedArcPath> circle_schedule(double radius, double omega, double phi0 = 0.0);

}  // namespace georabi::lambda_sys
