#pragma once

#include <array>
#include <memory>
#include <vector>

#include "georabi/model.hpp"
#include "georabi/paths.hpp"

namespace georabi::deltawell {

// V(x) = -beta^2 theta(a-|x|) - gamma_l delta(x+a) - gamma_r delta(x-a) in the
// hbar = 1, 2m = 1 unit system: delta strengths and the square-well wavenumber
// are inverse lengths, energies are inverse lengths squared.
struct DeltaWellPotential {
  double a;        // half separation of the deltas
  double gamma_l;  // left delta strength (deepest by convention)
  double gamma_r;  // right delta strength
  double beta;     // central well wavenumber, V_c = beta^2

  void validate() const;
  double vc() const { return beta * beta; }
  double zeta() const { return 1.0 / gamma_l; }          // unit length
  double eu() const { return gamma_r * gamma_r - vc(); }  // reporting energy unit
};

// One additive term c * exp(mu (x - xref)) of a piecewise solution. The shift
// keeps coefficients O(1) for strongly evanescent interiors.
struct ExpTerm {
  cplx coef;
  cplx mu;
  double xref;
};

// Bound eigenfunction, piecewise analytic over (-inf,-a], [-a,a], [a,inf).
struct BoundState {
  enum class Character { oscillatory, evanescent };

  double energy = 0;               // < 0
  double kappa = 0;                // exterior decay constant sqrt(-E)
  Character interior = Character::oscillatory;
  double half_width = 0;           // a of the parent potential
  std::array<std::vector<ExpTerm>, 3> regions;  // left tail, interior, right tail

  double value(double x) const;
  double derivative(double x) const;

  double continuity_residual() const;      // worst relative mismatch at +-a
  double jump_residual(const DeltaWellPotential& pot) const;  // matching residual at the deltas
};

// Integral of psi_a(x) x^p psi_b(x) over the whole line (p = 0 or 1),
// evaluated from closed forms. States must share the same half width.
double pair_integral(const BoundState& sa, const BoundState& sb, int xpower);
// Same restricted to [c, d].
double pair_integral_interval(const BoundState& sa, const BoundState& sb, int xpower, double c,
                              double d);

inline double overlap(const BoundState& sa, const BoundState& sb) {
  return pair_integral(sa, sb, 0);
}
inline double position_element(const BoundState& sa, const BoundState& sb) {
  return pair_integral(sa, sb, 1);
}

struct SpectrumOptions {
  int scan_points = 2000;
  double energy_floor = -1e-6;  // shallowest energy considered bound
  double deepen_factor = 1.2;   // scan bottom = -deepen_factor * (beta + gamma_l/2)^2
};

// All bound states in ascending energy order, found by sign-change bracketing
// of the 2x2 matching determinant on a log-spaced energy grid plus bisection.
// Throws ResolutionError when the root count is unstable under 2x refinement.
std::vector<BoundState> bound_spectrum(const DeltaWellPotential& pot,
                                       const SpectrumOptions& opts = {});

enum class StateLabel { localized_left, localized_right, extended };

struct StateClassification {
  StateLabel label = StateLabel::extended;
  double weight_left = 0, weight_right = 0, weight_center = 0;
};

// Probability weights within 4 zeta of each delta and in the central region;
// a state is localized when the corresponding weight exceeds 0.9.
StateClassification classify(const BoundState& state, const DeltaWellPotential& pot);

// The double well exposed as a HamiltonianModel over the depth energies
// (eps_c = beta^2, eps_r = gamma_r^2). H0 is diagonal in the instantaneous
// bound-state basis; the drive operator is the position matrix at unit
// amplitude. Non-adiabatic couplings come from the wavefunctions directly.
class DeltaWellModel final : public HamiltonianModel {
 public:
  int dimension() const override { return static_cast<int>(tracked_); }
  ParamNames param_names() const override { return names_; }
  RoleMap roles() const override;
  Mat h0_at(const ParamVector& lambda) const override;
  Mat drive_at(const ParamVector& lambda) const override;
  Frame frame_at(const ParamVector& lambda, const Frame* reference) const override;

  DeltaWellPotential potential_at(const ParamVector& lambda) const;
  ParamVector base_point() const;
  const DeltaWellPotential& base_potential() const { return base_; }
  const Frame& base_frame() const { return *base_frame_; }
  int auxiliary_count() const { return static_cast<int>(tracked_) - 2; }

  // Grid used for state-identity bookkeeping along paths.
  const Vec& grid() const { return grid_x_; }
  const Vec& grid_weights() const { return grid_w_; }

 private:
  friend std::unique_ptr<DeltaWellModel> as_model(const DeltaWellPotential&, const ParamPath&,
                                                  double, int, int);
  DeltaWellModel() = default;

  struct Solved;  // bound states matched to the tracked labels
  Solved solve_tracked(const ParamVector& lambda, const Frame* reference) const;

  DeltaWellPotential base_;
  ParamNames names_;
  std::size_t tracked_ = 0;
  std::vector<int> base_indices_;  // indices into the base bound list, tracked order
  Vec grid_x_, grid_w_;
  std::shared_ptr<const Frame> base_frame_;
};

// Builds the tracked model for a depth path: requires exactly two localized
// states everywhere on the path and keeps the extended states whose summed
// contribution to the effective coupling reaches `truncation_threshold` of the
// total (ranked by contribution, most important first).
std::unique_ptr<DeltaWellModel> as_model(const DeltaWellPotential& base, const ParamPath& path,
                                         double truncation_threshold = 0.99, int probes = 8,
                                         int grid_points = 4001);

// Paper-configuration helpers: a = 44 zeta, gamma_r = 22/a, beta = 7.8/a, and
// the depth ellipse eps_r = gamma_r^2 + L_r cos(Omega t),
// eps_c = beta^2 + L_c sin(Omega t) with amplitudes given in units of E_u.
DeltaWellPotential fig2_potential(double gamma_l = 1.0);
std::shared_ptr<HarmonicLoopPath> fig2_path(const DeltaWellPotential& pot, double omega,
                                            double lambda_r_eu = 0.037, double lambda_c_eu = 0.024);

}  // namespace georabi::deltawell
