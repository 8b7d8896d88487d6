#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "georabi/model.hpp"
#include "georabi/paths.hpp"

namespace georabi::dynamics {

// Drive 2 F H' cos(theta(t)) with theta' = omega(t). Under resonance tracking
// omega(t) = E2 - E0 - (dE0 - dE2) so the rotating-frame diagonal cancels.
struct DriveSchedule {
  enum class Rule { fixed, tracked };
  double amplitude = 0.0;
  Rule rule = Rule::tracked;
  double fixed_omega = 0.0;

  static DriveSchedule tracked(double f) { return {f, Rule::tracked, 0.0}; }
  static DriveSchedule fixed(double f, double omega) { return {f, Rule::fixed, omega}; }
};

struct StarkShifts {
  double dE0 = 0.0;
  double dE2 = 0.0;
  bool ill_conditioned = false;
};

// Effective two-level quantities at a parameter point. Storage convention:
// the field components f are real for real-symmetric models in the real
// gauge; the accumulated rotation angle is the line integral of f along the
// path, and the Hermitian two-level coupling entry is -i kappa with
// kappa = f . dlambda/dt.
struct EffectiveField {
  ParamVector lambda;
  CVec f;
  cplx kappa{0.0, 0.0};
  StarkShifts stark;
  double detuning = 0.0;
};

enum class ValidityFlag { ok, marginal, violated };

struct AdiabaticityReport {
  struct Probe {
    double t = 0;
    double velocity_ratio = 0;  // max over aux and over roles 0/2
    double drive_ratio = 0;
  };
  std::vector<Probe> probes;
  double max_velocity_ratio = 0;
  double max_drive_ratio = 0;

  double worst() const { return std::max(max_velocity_ratio, max_drive_ratio); }
  ValidityFlag flag() const {
    const double w = worst();
    if (w < 0.05) return ValidityFlag::ok;
    if (w < 0.2) return ValidityFlag::marginal;
    return ValidityFlag::violated;
  }
};

struct StepControl {
  int steps_per_period = 48;    // full evolution; drive period / 48 <= period / 40
  int frames_per_cycle = 200;   // eigenframe refresh density along the path
  int rwa_substeps = 8;         // rwa steps per frame interval
  int geometric_segments = 2048;
  int sample_stride = 0;        // 0 = choose automatically (~2000 samples)
  bool halving_check = false;   // rerun at half step and record the deviation
};

struct EvolutionRecord {
  enum class FrameKind { lab, rotating };
  FrameKind frame = FrameKind::lab;
  RoleMap roles;
  std::vector<double> times;
  std::vector<CVec> amplitudes;
  std::vector<Vec> populations;
  std::vector<double> theta;      // accumulated drive phase (lab frame runs)
  std::vector<double> gamma_acc;  // running line integral of Re(f . dlambda)
  double max_norm_error = 0.0;
  double halving_error = -1.0;  // < 0 when the check was not requested
  long steps = 0;
  AdiabaticityReport diagnostics;
};

// Gauge-continuous chain of frames along a path, with cubic interpolation of
// energies, drive matrix elements and couplings between the refresh nodes.
class FrameTrack {
 public:
  FrameTrack(const HamiltonianModel& model, const ParamPath& path, int nodes_per_cycle,
             int cycles);

  double total_time() const { return total_; }
  int node_count() const { return static_cast<int>(nodes_.size()); }
  const Frame& node(int i) const { return nodes_[i]; }
  double node_time(int i) const { return dt_ * i; }
  const ParamPath& path() const { return *path_; }
  const HamiltonianModel& model() const { return *model_; }

  Vec energies_at(double t) const;
  Mat drive_at(double t) const;                    // unit amplitude, eigenbasis
  Mat coupling_at(double t, int mu) const;
  Mat kinetic_at(double t) const;                  // sum_mu C_mu * lambda_dot_mu
  CVec field_at(double t, double amplitude) const;
  cplx kappa_at(double t, double amplitude) const;
  StarkShifts stark_at(double t, double amplitude) const;
  double omega_at(double t, const DriveSchedule& drive) const;

  // Fresh frame at an arbitrary time, anchored to the nearest node.
  Frame exact_frame(double t) const;

 private:
  const HamiltonianModel* model_;
  const ParamPath* path_;
  std::vector<Frame> nodes_;
  double dt_ = 0, total_ = 0;
};

// --- single-point operations ---------------------------------------------

StarkShifts stark_shifts(const HamiltonianModel& model, const ParamVector& lambda,
                         const Vec& velocity, double amplitude);
double resonant_omega(const HamiltonianModel& model, const ParamVector& lambda,
                      const Vec& velocity, double amplitude);
cplx effective_kappa(const HamiltonianModel& model, const ParamVector& lambda, const Vec& velocity,
                     double amplitude);
EffectiveField effective_field_f(const HamiltonianModel& model, const ParamVector& lambda,
                                 double amplitude, const Vec* velocity = nullptr,
                                 std::optional<double> omega = std::nullopt);

// Frame-level versions (no fresh diagonalization); per-aux decomposition is
// used for auxiliary-state truncation decisions.
CVec effective_field(const Frame& frame, const RoleMap& roles, double amplitude);
std::vector<CVec> effective_field_per_aux(const Frame& frame, const RoleMap& roles,
                                          double amplitude);
StarkShifts stark_from_frame(const Frame& frame, const RoleMap& roles, const Vec& velocity,
                             double amplitude);
double resonant_omega_from_frame(const Frame& frame, const RoleMap& roles, const Vec& velocity,
                                 double amplitude);

// --- propagation -----------------------------------------------------------

EvolutionRecord evolve_full(const HamiltonianModel& model, const ParamPath& path,
                            const DriveSchedule& drive, const CVec& psi0,
                            const StepControl& ctrl = {}, int cycles = 1);

EvolutionRecord evolve_rwa(const HamiltonianModel& model, const ParamPath& path,
                           const DriveSchedule& drive, const Eigen::Vector2cd& psi0,
                           const StepControl& ctrl = {}, int cycles = 1);

EvolutionRecord evolve_geometric(const HamiltonianModel& model, const ParamPath& path,
                                 double amplitude, const Eigen::Vector2cd& psi0,
                                 const StepControl& ctrl = {}, int cycles = 1);

Eigen::Matrix2cd geometric_cycle_propagator(const HamiltonianModel& model, const ParamPath& path,
                                            double amplitude, const StepControl& ctrl = {});

// Ordered product of segment rotations for given per-segment values
// w_k = f . dlambda over the segment. Exposed so synthetic fields can be
// propagated in tests.
Eigen::Matrix2cd geometric_product(const std::vector<cplx>& ws, Eigen::Matrix2cd u0);

// --- geometry ---------------------------------------------------------------

struct GammaResult {
  double value = 0.0;
  double im_residual = 0.0;  // worst |Im f| / max ||f|| along the path
  bool well_defined = true;  // false in the marginal realness band
};

GammaResult gamma_line(const HamiltonianModel& model, const ParamPath& path, double amplitude,
                       const StepControl& ctrl = {}, double rtol = 1e-9);

// Adaptive Simpson of a complex integrand over [0, T] split at breakpoints;
// shared by gamma_line and the closed-form Lambda-system integral.
cplx integrate_adaptive(const std::function<cplx(double)>& g, double T,
                        const std::vector<double>& breakpoints, double rtol);

// Stokes surface integral over the region swept by the (two-parameter) cyclic
// path: pullback of the field one-form onto (r, s) in [0,1]^2 with the
// boundary at r = 1. Matches gamma_line including orientation.
double gamma_surface(const HamiltonianModel& model, const ParamPath& path, double amplitude,
                     int radial_nodes = 24, int angular_panels = 48, double curl_step_frac = 2e-3);

AdiabaticityReport adiabaticity_report(const HamiltonianModel& model, const ParamPath& path,
                                       const DriveSchedule& drive, double amplitude,
                                       int probe_count = 64);

}  // namespace georabi::dynamics
