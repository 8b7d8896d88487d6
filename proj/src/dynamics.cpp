#include "georabi/dynamics.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

namespace georabi::dynamics {

namespace {

constexpr cplx kI{0.0, 1.0};

double energy_spread(const Vec& e) { return e.maxCoeff() - e.minCoeff(); }

void check_gap(double gap, double spread, double tol_rel, const char* what) {
  if (std::abs(gap) < tol_rel * std::max(spread, 1e-300))
    throw DegeneracyError(std::string("degenerate energies in ") + what);
}

// exp(-i A) for Hermitian A.
CMat unitary_exp(const CMat& a) {
  const auto n = a.rows();
  if (n == 1) return (CMat(1, 1) << std::exp(-kI * a(0, 0).real())).finished();
  if (n == 2) {
    const double m = 0.5 * (a(0, 0).real() + a(1, 1).real());
    const double e = 0.5 * (a(0, 0).real() - a(1, 1).real());
    const cplx b = a(0, 1);
    const double v = std::hypot(e, std::abs(b));
    CMat u = CMat::Identity(2, 2) * std::cos(v);
    if (v > 0) {
      const cplx s = -kI * std::sin(v) / v;
      u(0, 0) += s * e;
      u(1, 1) -= s * e;
      u(0, 1) += s * b;
      u(1, 0) += s * std::conj(b);
    }
    return std::exp(-kI * m) * u;
  }
  Eigen::SelfAdjointEigenSolver<CMat> es(a);
  if (es.info() != Eigen::Success) throw NumericError("matrix exponential: eigensolver failed");
  CVec phases(n);
  for (Eigen::Index k = 0; k < n; ++k) phases[k] = std::exp(-kI * es.eigenvalues()[k]);
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

// Fourth-order commutator-free exponential stepping: Hamiltonians sampled at
// the two Gauss nodes, combined with weights 1/4 +- sqrt(3)/6 into two
// exponentials. Exactly unitary for Hermitian input.
constexpr double kGaussC1 = 0.5 - 0.2886751345948128823;
constexpr double kGaussC2 = 0.5 + 0.2886751345948128823;
constexpr double kWeightP = 0.25 + 0.2886751345948128823;
constexpr double kWeightM = 0.25 - 0.2886751345948128823;

template <class HamFn>
void cf4_step(const HamFn& ham, double t, double dt, CVec& psi) {
  const CMat h1 = ham(t + kGaussC1 * dt);
  const CMat h2 = ham(t + kGaussC2 * dt);
  psi = unitary_exp(dt * (kWeightP * h1 + kWeightM * h2)) * psi;
  psi = unitary_exp(dt * (kWeightM * h1 + kWeightP * h2)) * psi;
}

// Catmull-Rom on uniformly spaced node data.
template <class Get>
auto cubic_interp(int n, double u, const Get& get) -> decltype(get(0)) {
  if (n == 1) return get(0);
  int i = static_cast<int>(std::floor(u));
  i = std::clamp(i, 0, n - 2);
  const double s = u - i;
  const auto p1 = get(i), p2 = get(i + 1);
  const auto p0 = get(std::max(i - 1, 0)), p3 = get(std::min(i + 2, n - 1));
  const auto m1 = 0.5 * (p2 - p0), m2 = 0.5 * (p3 - p1);
  const double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * p1 + (s3 - 2 * s2 + s) * m1 + (-2 * s3 + 3 * s2) * p2 +
         (s3 - s2) * m2;
}

}  // namespace

FrameTrack::FrameTrack(const HamiltonianModel& model, const ParamPath& path, int nodes_per_cycle,
                       int cycles)
    : model_(&model), path_(&path) {
  if (nodes_per_cycle < 4) nodes_per_cycle = 4;
  if (cycles < 1) throw UsageError("FrameTrack: cycles must be >= 1");
  total_ = path.period() * cycles;
  const int count = nodes_per_cycle * cycles + 1;
  dt_ = total_ / (count - 1);
  nodes_.reserve(count);
  nodes_.push_back(model.frame_at(path.at(0.0), nullptr));
  for (int k = 1; k < count; ++k)
    nodes_.push_back(model.frame_at(path.at(dt_ * k), &nodes_.back()));
}

Vec FrameTrack::energies_at(double t) const {
  const double u = t / dt_;
  Vec e = cubic_interp(node_count(), u, [this](int i) { return nodes_[i].energies; });
  return e;
}

Mat FrameTrack::drive_at(double t) const {
  const double u = t / dt_;
  return cubic_interp(node_count(), u, [this](int i) { return nodes_[i].drive; });
}

Mat FrameTrack::coupling_at(double t, int mu) const {
  const double u = t / dt_;
  return cubic_interp(node_count(), u, [this, mu](int i) { return nodes_[i].couplings[mu]; });
}

Mat FrameTrack::kinetic_at(double t) const {
  const Vec vel = path_->velocity(t);
  Mat k = coupling_at(t, 0) * vel[0];
  for (int mu = 1; mu < static_cast<int>(nodes_.front().couplings.size()); ++mu)
    k += coupling_at(t, mu) * vel[mu];
  return k;
}

namespace {

CVec field_from(const Vec& e, const Mat& w, const std::vector<Mat>& c, const RoleMap& roles,
                double f_amp, double deg_tol, std::vector<CVec>* per_aux) {
  const int p = static_cast<int>(c.size());
  const double spread = energy_spread(e);
  CVec total = CVec::Zero(p);
  if (per_aux) per_aux->clear();
  for (int u : roles.aux) {
    const double g0 = e[u] - e[roles.state0];
    const double g2 = e[u] - e[roles.state2];
    check_gap(g0, spread, deg_tol, "effective field");
    check_gap(g2, spread, deg_tol, "effective field");
    CVec fu(p);
    for (int mu = 0; mu < p; ++mu) {
      const double term = c[mu](roles.state0, u) * f_amp * w(u, roles.state2) / g0 +
                          f_amp * w(roles.state0, u) * c[mu](u, roles.state2) / g2;
      fu[mu] = cplx(-term, 0.0);
    }
    total += fu;
    if (per_aux) per_aux->push_back(std::move(fu));
  }
  return total;
}

StarkShifts stark_from(const Vec& e, const Mat& w, const std::vector<Mat>& c, const Vec& vel,
                       const RoleMap& roles, double f_amp, double deg_tol) {
  const double spread = energy_spread(e);
  StarkShifts out;
  for (int jrole = 0; jrole < 2; ++jrole) {
    const int j = jrole == 0 ? roles.state0 : roles.state2;
    double shift = 0.0;
    for (int u : roles.aux) {
      const double gap = e[j] - e[u];
      check_gap(gap, spread, deg_tol, "Stark shifts");
      if (std::abs(gap) < 1e-4 * std::max(spread, 1e-300)) out.ill_conditioned = true;
      double adot = 0.0;
      for (std::size_t mu = 0; mu < c.size(); ++mu) adot += c[mu](j, u) * vel[mu];
      const double hd = f_amp * w(u, j);
      shift += (2.0 * hd * hd + adot * adot) / gap;
    }
    (jrole == 0 ? out.dE0 : out.dE2) = shift;
  }
  return out;
}

}  // namespace

CVec FrameTrack::field_at(double t, double amplitude) const {
  const Vec e = energies_at(t);
  const Mat w = drive_at(t);
  std::vector<Mat> c;
  for (std::size_t mu = 0; mu < nodes_.front().couplings.size(); ++mu)
    c.push_back(coupling_at(t, static_cast<int>(mu)));
  return field_from(e, w, c, model_->roles(), amplitude, model_->degeneracy_tol_rel(), nullptr);
}

cplx FrameTrack::kappa_at(double t, double amplitude) const {
  const CVec f = field_at(t, amplitude);
  const Vec vel = path_->velocity(t);
  cplx k = 0.0;
  for (Eigen::Index mu = 0; mu < f.size(); ++mu) k += f[mu] * vel[mu];
  return k;
}

StarkShifts FrameTrack::stark_at(double t, double amplitude) const {
  const Vec e = energies_at(t);
  const Mat w = drive_at(t);
  std::vector<Mat> c;
  for (std::size_t mu = 0; mu < nodes_.front().couplings.size(); ++mu)
    c.push_back(coupling_at(t, static_cast<int>(mu)));
  return stark_from(e, w, c, path_->velocity(t), model_->roles(), amplitude,
                    model_->degeneracy_tol_rel());
}

double FrameTrack::omega_at(double t, const DriveSchedule& drive) const {
  if (drive.rule == DriveSchedule::Rule::fixed) return drive.fixed_omega;
  const Vec e = energies_at(t);
  const StarkShifts s = stark_at(t, drive.amplitude);
  const RoleMap roles = model_->roles();
  return e[roles.state2] - e[roles.state0] - (s.dE0 - s.dE2);
}

Frame FrameTrack::exact_frame(double t) const {
  const int i = std::clamp(static_cast<int>(std::lround(t / dt_)), 0, node_count() - 1);
  return model_->frame_at(path_->at(t), &nodes_[i]);
}

// --- single-point operations -------------------------------------------------

CVec effective_field(const Frame& frame, const RoleMap& roles, double amplitude) {
  return field_from(frame.energies, frame.drive, frame.couplings, roles, amplitude, 1e-8, nullptr);
}

std::vector<CVec> effective_field_per_aux(const Frame& frame, const RoleMap& roles,
                                          double amplitude) {
  std::vector<CVec> per_aux;
  field_from(frame.energies, frame.drive, frame.couplings, roles, amplitude, 1e-8, &per_aux);
  return per_aux;
}

StarkShifts stark_from_frame(const Frame& frame, const RoleMap& roles, const Vec& velocity,
                             double amplitude) {
  return stark_from(frame.energies, frame.drive, frame.couplings, velocity, roles, amplitude, 1e-8);
}

double resonant_omega_from_frame(const Frame& frame, const RoleMap& roles, const Vec& velocity,
                                 double amplitude) {
  const StarkShifts s = stark_from_frame(frame, roles, velocity, amplitude);
  const double omega =
      frame.energies[roles.state2] - frame.energies[roles.state0] - (s.dE0 - s.dE2);
  if (!(omega > 0))
    throw ModelError("resonant drive frequency came out nonpositive: check role assignment");
  return omega;
}

StarkShifts stark_shifts(const HamiltonianModel& model, const ParamVector& lambda,
                         const Vec& velocity, double amplitude) {
  return stark_from_frame(model.frame_at(lambda, nullptr), model.roles(), velocity, amplitude);
}

double resonant_omega(const HamiltonianModel& model, const ParamVector& lambda, const Vec& velocity,
                      double amplitude) {
  return resonant_omega_from_frame(model.frame_at(lambda, nullptr), model.roles(), velocity,
                                   amplitude);
}

cplx effective_kappa(const HamiltonianModel& model, const ParamVector& lambda, const Vec& velocity,
                     double amplitude) {
  const CVec f = effective_field(model.frame_at(lambda, nullptr), model.roles(), amplitude);
  cplx k = 0.0;
  for (Eigen::Index mu = 0; mu < f.size(); ++mu) k += f[mu] * velocity[mu];
  return k;
}

EffectiveField effective_field_f(const HamiltonianModel& model, const ParamVector& lambda,
                                 double amplitude, const Vec* velocity,
                                 std::optional<double> omega) {
  const Frame frame = model.frame_at(lambda, nullptr);
  const RoleMap roles = model.roles();
  const Vec vel = velocity ? *velocity : Vec::Zero(model.param_count());

  EffectiveField out;
  out.lambda = lambda;
  out.f = effective_field(frame, roles, amplitude);
  for (Eigen::Index mu = 0; mu < out.f.size(); ++mu) out.kappa += out.f[mu] * vel[mu];
  out.stark = stark_from_frame(frame, roles, vel, amplitude);
  const double gap = frame.energies[roles.state2] - frame.energies[roles.state0];
  const double w = omega.value_or(gap - (out.stark.dE0 - out.stark.dE2));
  out.detuning = gap - w;
  return out;
}

// --- adiabaticity -------------------------------------------------------------

namespace {

AdiabaticityReport report_from_track(const FrameTrack& track, const DriveSchedule& drive,
                                     double amplitude) {
  AdiabaticityReport rep;
  const RoleMap roles = track.model().roles();
  for (int i = 0; i < track.node_count(); ++i) {
    const double t = track.node_time(i);
    const Frame& f = track.node(i);
    const Vec vel = track.path().velocity(t);
    const double omega = track.omega_at(t, drive);
    AdiabaticityReport::Probe probe;
    probe.t = t;
    for (int jrole = 0; jrole < 2; ++jrole) {
      const int j = jrole == 0 ? roles.state0 : roles.state2;
      for (int u : roles.aux) {
        double adot = 0.0;
        for (std::size_t mu = 0; mu < f.couplings.size(); ++mu)
          adot += f.couplings[mu](j, u) * vel[mu];
        const double gap = f.energies[u] - f.energies[j];
        probe.velocity_ratio =
            std::max(probe.velocity_ratio, std::abs(adot / std::max(std::abs(gap), 1e-300)));
        const double denom = std::abs(gap) - omega;
        probe.drive_ratio =
            std::max(probe.drive_ratio, std::abs(amplitude * f.drive(u, j)) /
                                            std::max(std::abs(denom), 1e-300));
      }
    }
    rep.max_velocity_ratio = std::max(rep.max_velocity_ratio, probe.velocity_ratio);
    rep.max_drive_ratio = std::max(rep.max_drive_ratio, probe.drive_ratio);
    rep.probes.push_back(probe);
  }
  return rep;
}

}  // namespace

AdiabaticityReport adiabaticity_report(const HamiltonianModel& model, const ParamPath& path,
                                       const DriveSchedule& drive, double amplitude,
                                       int probe_count) {
  FrameTrack track(model, path, std::max(probe_count, 8), 1);
  DriveSchedule d = drive;
  d.amplitude = amplitude;
  return report_from_track(track, d, amplitude);
}

// --- propagation --------------------------------------------------------------

namespace {

struct Sampler {
  EvolutionRecord* rec;
  long stride;
  void maybe(long step, double t, const CVec& psi, double theta, double gacc) {
    if (step % stride != 0) return;
    push(t, psi, theta, gacc);
  }
  void push(double t, const CVec& psi, double theta, double gacc) {
    rec->times.push_back(t);
    rec->amplitudes.push_back(psi);
    Vec p(psi.size());
    for (Eigen::Index i = 0; i < psi.size(); ++i) p[i] = std::norm(psi[i]);
    rec->populations.push_back(p);
    rec->theta.push_back(theta);
    rec->gamma_acc.push_back(gacc);
    rec->max_norm_error = std::max(rec->max_norm_error, std::abs(psi.norm() - 1.0));
  }
};

long auto_stride(long steps, int requested) {
  if (requested > 0) return requested;
  return std::max<long>(1, steps / 2000);
}

}  // namespace

EvolutionRecord evolve_full(const HamiltonianModel& model, const ParamPath& path,
                            const DriveSchedule& drive, const CVec& psi0, const StepControl& ctrl,
                            int cycles) {
  const int n = model.dimension();
  if (psi0.size() != n) throw UsageError("evolve_full: initial state has wrong dimension");
  if (std::abs(psi0.norm() - 1.0) > 1e-8) throw UsageError("evolve_full: initial state not normalized");

  FrameTrack track(model, path, ctrl.frames_per_cycle, cycles);
  const double total = track.total_time();
  const double omega_ref = track.omega_at(0.0, drive);
  if (!(omega_ref > 0)) throw ModelError("evolve_full: drive frequency must be positive");

  const double target_dt = (2.0 * M_PI / omega_ref) / std::max(ctrl.steps_per_period, 40);
  const long steps = std::max<long>(1, static_cast<long>(std::ceil(total / target_dt)));
  const double dt = total / steps;

  auto omega = [&](double t) { return track.omega_at(t, drive); };
  // Accumulated phase over [t0, t1] by Simpson; exact for a fixed rule.
  auto dtheta = [&](double t0, double t1) {
    if (drive.rule == DriveSchedule::Rule::fixed) return drive.fixed_omega * (t1 - t0);
    const double h = t1 - t0;
    return h / 6.0 * (omega(t0) + 4.0 * omega(0.5 * (t0 + t1)) + omega(t1));
  };
  const double famp = drive.amplitude;
  double theta = 0.0;
  auto hamiltonian = [&](double tau, double theta_tau) {
    const Vec e = track.energies_at(tau);
    const Mat w = track.drive_at(tau);
    const Mat k = track.kinetic_at(tau);
    CMat h = (Mat(e.asDiagonal()) + 2.0 * famp * std::cos(theta_tau) * w).cast<cplx>();
    h -= kI * k.cast<cplx>();
    return h;
  };

  EvolutionRecord rec;
  rec.frame = EvolutionRecord::FrameKind::lab;
  rec.roles = model.roles();
  rec.steps = steps;
  rec.diagnostics = report_from_track(track, drive, famp);

  CVec psi = psi0;
  double gacc = 0.0;
  Sampler sampler{&rec, auto_stride(steps, ctrl.sample_stride)};
  sampler.push(0.0, psi, theta, gacc);
  for (long s = 0; s < steps; ++s) {
    const double t = s * dt;
    const double th1 = theta + dtheta(t, t + kGaussC1 * dt);
    const double th2 = theta + dtheta(t, t + kGaussC2 * dt);
    const CMat h1 = hamiltonian(t + kGaussC1 * dt, th1);
    const CMat h2 = hamiltonian(t + kGaussC2 * dt, th2);
    psi = unitary_exp(dt * (kWeightP * h1 + kWeightM * h2)) * psi;
    psi = unitary_exp(dt * (kWeightM * h1 + kWeightP * h2)) * psi;
    theta += dtheta(t, t + dt);
    gacc += dt / 6.0 *
            (track.kappa_at(t, famp).real() + 4.0 * track.kappa_at(t + 0.5 * dt, famp).real() +
             track.kappa_at(t + dt, famp).real());
    if (s + 1 == steps)
      sampler.push(total, psi, theta, gacc);
    else
      sampler.maybe(s + 1, (s + 1) * dt, psi, theta, gacc);
  }

  if (ctrl.halving_check) {
    StepControl fine = ctrl;
    fine.halving_check = false;
    fine.steps_per_period = 2 * std::max(ctrl.steps_per_period, 40);
    fine.sample_stride = 1 << 30;  // endpoints only
    const EvolutionRecord ref = evolve_full(model, path, drive, psi0, fine, cycles);
    rec.halving_error =
        (rec.populations.back() - ref.populations.back()).cwiseAbs().maxCoeff();
  }
  return rec;
}

EvolutionRecord evolve_rwa(const HamiltonianModel& model, const ParamPath& path,
                           const DriveSchedule& drive, const Eigen::Vector2cd& psi0,
                           const StepControl& ctrl, int cycles) {
  if (std::abs(psi0.norm() - 1.0) > 1e-8) throw UsageError("evolve_rwa: initial state not normalized");
  FrameTrack track(model, path, ctrl.frames_per_cycle, cycles);
  const double total = track.total_time();
  const double famp = drive.amplitude;
  const RoleMap roles = model.roles();

  double kappa_max = 0.0;
  for (int i = 0; i < track.node_count(); ++i)
    kappa_max = std::max(kappa_max, std::abs(track.kappa_at(track.node_time(i), famp)));
  double dt = total / (static_cast<double>(ctrl.frames_per_cycle) * cycles *
                       std::max(ctrl.rwa_substeps, 1));
  if (kappa_max > 0) dt = std::min(dt, 0.05 / kappa_max);
  const long steps = std::max<long>(1, static_cast<long>(std::ceil(total / dt)));
  dt = total / steps;

  auto hamiltonian = [&](double tau) {
    const cplx kap = track.kappa_at(tau, famp);
    Eigen::Matrix2cd h = Eigen::Matrix2cd::Zero();
    h(0, 1) = -kI * kap;  // Hermitian coupling entry from the stored field
    h(1, 0) = std::conj(h(0, 1));
    if (drive.rule == DriveSchedule::Rule::fixed) {
      const Vec e = track.energies_at(tau);
      const StarkShifts s = track.stark_at(tau, famp);
      const double delta = e[roles.state2] - e[roles.state0] - drive.fixed_omega;
      h(1, 1) = s.dE2 - s.dE0 + delta;  // common shift dE0 removed
    }
    return CMat(h);
  };

  EvolutionRecord rec;
  rec.frame = EvolutionRecord::FrameKind::rotating;
  rec.roles = RoleMap{0, 1, {}};
  rec.steps = steps;
  rec.diagnostics = report_from_track(track, drive, famp);

  CVec psi = psi0;
  double gacc = 0.0;
  Sampler sampler{&rec, auto_stride(steps, ctrl.sample_stride)};
  sampler.push(0.0, psi, 0.0, gacc);
  for (long s = 0; s < steps; ++s) {
    const double t = s * dt;
    cf4_step(hamiltonian, t, dt, psi);
    gacc += dt / 6.0 *
            (track.kappa_at(t, famp).real() + 4.0 * track.kappa_at(t + 0.5 * dt, famp).real() +
             track.kappa_at(t + dt, famp).real());
    if (s + 1 == steps)
      sampler.push(total, psi, 0.0, gacc);
    else
      sampler.maybe(s + 1, (s + 1) * dt, psi, 0.0, gacc);
  }
  return rec;
}

Eigen::Matrix2cd geometric_product(const std::vector<cplx>& ws, Eigen::Matrix2cd u0) {
  for (const cplx& w : ws) {
    const cplx z = -kI * w;
    const double az = std::abs(z);
    Eigen::Matrix2cd seg = Eigen::Matrix2cd::Identity() * std::cos(az);
    if (az > 0) {
      const cplx s = -kI * std::sin(az) / az;
      seg(0, 1) += s * z;
      seg(1, 0) += s * std::conj(z);
    }
    u0 = seg * u0;
  }
  return u0;
}

namespace {

std::vector<cplx> segment_ws(const FrameTrack& track, double amplitude, int segments, int cycles) {
  const double total = track.total_time();
  const long m = static_cast<long>(segments) * cycles;
  std::vector<cplx> ws;
  ws.reserve(m);
  Vec prev = track.path().at(0.0).values();
  for (long k = 0; k < m; ++k) {
    const double t1 = total * (k + 1.0) / m;
    const double tm = total * (k + 0.5) / m;
    const Vec cur = track.path().at(t1).values();
    const CVec f = track.field_at(tm, amplitude);
    cplx w = 0.0;
    for (Eigen::Index mu = 0; mu < f.size(); ++mu) w += f[mu] * (cur[mu] - prev[mu]);
    ws.push_back(w);
    prev = cur;
  }
  return ws;
}

}  // namespace

EvolutionRecord evolve_geometric(const HamiltonianModel& model, const ParamPath& path,
                                 double amplitude, const Eigen::Vector2cd& psi0,
                                 const StepControl& ctrl, int cycles) {
  if (std::abs(psi0.norm() - 1.0) > 1e-8)
    throw UsageError("evolve_geometric: initial state not normalized");
  FrameTrack track(model, path, ctrl.frames_per_cycle, cycles);
  const auto ws = segment_ws(track, amplitude, ctrl.geometric_segments, cycles);

  EvolutionRecord rec;
  rec.frame = EvolutionRecord::FrameKind::rotating;
  rec.roles = RoleMap{0, 1, {}};
  rec.steps = static_cast<long>(ws.size());

  CVec psi = psi0;
  double gacc = 0.0;
  Sampler sampler{&rec, auto_stride(static_cast<long>(ws.size()), ctrl.sample_stride)};
  sampler.push(0.0, psi, 0.0, gacc);
  const double total = track.total_time();
  for (std::size_t k = 0; k < ws.size(); ++k) {
    Eigen::Matrix2cd u = geometric_product({ws[k]}, Eigen::Matrix2cd::Identity());
    psi = u * psi;
    gacc += ws[k].real();
    if (k + 1 == ws.size())
      sampler.push(total, psi, 0.0, gacc);
    else
      sampler.maybe(static_cast<long>(k + 1), total * (k + 1.0) / ws.size(), psi, 0.0, gacc);
  }
  return rec;
}

Eigen::Matrix2cd geometric_cycle_propagator(const HamiltonianModel& model, const ParamPath& path,
                                            double amplitude, const StepControl& ctrl) {
  FrameTrack track(model, path, ctrl.frames_per_cycle, 1);
  return geometric_product(segment_ws(track, amplitude, ctrl.geometric_segments, 1),
                           Eigen::Matrix2cd::Identity());
}

// --- geometry ------------------------------------------------------------------

namespace {

cplx adaptive_piece(const std::function<cplx(double)>& g, double a, double b, cplx fa, cplx fm,
                    cplx fb, cplx whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const cplx fl = g(0.5 * (a + m)), fr = g(0.5 * (m + b));
  const cplx left = (m - a) / 6.0 * (fa + 4.0 * fl + fm);
  const cplx right = (b - m) / 6.0 * (fm + 4.0 * fr + fb);
  const cplx err = left + right - whole;
  if (std::abs(err) <= 15.0 * tol || depth >= 26) return left + right + err / 15.0;
  return adaptive_piece(g, a, m, fa, fl, fm, left, 0.5 * tol, depth + 1) +
         adaptive_piece(g, m, b, fm, fr, fb, right, 0.5 * tol, depth + 1);
}

}  // namespace

cplx integrate_adaptive(const std::function<cplx(double)>& g, double T,
                        const std::vector<double>& breakpoints, double rtol) {
  std::vector<double> edges{0.0};
  for (double b : breakpoints)
    if (b > 1e-14 * T && b < T * (1.0 - 1e-14)) edges.push_back(b);
  edges.push_back(T);
  std::sort(edges.begin(), edges.end());

  // Coarse pass fixes the error scale; the tolerance is purely relative so
  // that uniform rescaling of the integrand rescales the result exactly.
  double scale = 0.0;
  std::vector<cplx> coarse(edges.size() - 1);
  for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
    const double a = edges[p], b = edges[p + 1];
    const int panels = 64;
    cplx s = 0.0;
    for (int i = 0; i < panels; ++i) {
      const double x0 = a + (b - a) * i / panels, x1 = a + (b - a) * (i + 1) / panels;
      s += (x1 - x0) / 6.0 * (g(x0) + 4.0 * g(0.5 * (x0 + x1)) + g(x1));
    }
    coarse[p] = s;
    scale += std::abs(s);
  }
  if (scale == 0.0) return 0.0;

  cplx total = 0.0;
  for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
    const double a = edges[p], b = edges[p + 1];
    const cplx fa = g(a), fm = g(0.5 * (a + b)), fb = g(b);
    const cplx whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    total += adaptive_piece(g, a, b, fa, fm, fb, whole, rtol * scale * ((b - a) / T), 0);
  }
  return total;
}

GammaResult gamma_line(const HamiltonianModel& model, const ParamPath& path, double amplitude,
                       const StepControl& ctrl, double rtol) {
  FrameTrack track(model, path, ctrl.frames_per_cycle, 1);

  double im_max = 0.0, f_max = 0.0;
  for (int i = 0; i < track.node_count(); ++i) {
    const CVec f = track.field_at(track.node_time(i), amplitude);
    for (Eigen::Index mu = 0; mu < f.size(); ++mu) {
      im_max = std::max(im_max, std::abs(f[mu].imag()));
      f_max = std::max(f_max, std::abs(f[mu]));
    }
  }
  GammaResult out;
  out.im_residual = f_max > 0 ? im_max / f_max : 0.0;
  if (out.im_residual > 1e-3)
    throw NumericError(
        "effective field is not real along this path; the closed-form angle does not apply -- "
        "use the path-ordered propagator (geometric mode) instead");
  out.well_defined = out.im_residual <= 1e-6;

  auto g = [&](double t) -> cplx {
    const CVec f = track.field_at(t, amplitude);
    const Vec vel = path.velocity(t);
    cplx k = 0.0;
    for (Eigen::Index mu = 0; mu < f.size(); ++mu) k += f[mu] * vel[mu];
    return k;
  };
  out.value = integrate_adaptive(g, path.period(), path.breakpoints(), rtol).real();
  return out;
}

double gamma_surface(const HamiltonianModel& model, const ParamPath& path, double amplitude,
                     int radial_nodes, int angular_panels, double curl_step_frac) {
  if (model.param_count() != 2)
    throw UsageError("gamma_surface: exactly two varied parameters required");
  if (!path.cyclic()) throw UsageError("gamma_surface: path must be cyclic");
  if (radial_nodes % 2 != 0) ++radial_nodes;

  const double T = path.period();
  const ParamNames names = path.names();

  // Region centroid and scales from a dense boundary sample.
  Vec centroid = Vec::Zero(2);
  const int m = 512;
  for (int k = 0; k < m; ++k) centroid += path.at(T * k / m).values();
  centroid /= m;
  Vec scale = Vec::Zero(2);
  for (int k = 0; k < m; ++k)
    scale = scale.cwiseMax((path.at(T * k / m).values() - centroid).cwiseAbs());
  const ParamVector center(names, centroid);
  const Frame anchor = model.frame_at(center, nullptr);
  const RoleMap roles = model.roles();

  auto field = [&](const Vec& p) -> Eigen::Vector2d {
    const Frame fr = model.frame_at(ParamVector(names, p), &anchor);
    const CVec f = effective_field(fr, roles, amplitude);
    return Eigen::Vector2d(f[0].real(), f[1].real());
  };
  const Eigen::Vector2d h(curl_step_frac * std::max(scale[0], 1e-300),
                          curl_step_frac * std::max(scale[1], 1e-300));
  auto curl = [&](const Vec& p) {
    Vec pp = p;
    pp[0] = p[0] + h[0];
    const double f1p = field(pp)[1];
    pp[0] = p[0] - h[0];
    const double f1m = field(pp)[1];
    pp[0] = p[0];
    pp[1] = p[1] + h[1];
    const double f0p = field(pp)[0];
    pp[1] = p[1] - h[1];
    const double f0m = field(pp)[0];
    return (f1p - f1m) / (2.0 * h[0]) - (f0p - f0m) / (2.0 * h[1]);
  };

  // G(r, s) = curl(map(r,s)) * signed Jacobian; radial Simpson. The velocity
  // time tv is nudged off path corners so each piece sees its own side.
  auto radial_integral = [&](double s, double tv) {
    const Vec b = path.at(s * T).values();
    const Vec vel = path.velocity(tv);
    const Vec dir = b - centroid;
    const double cross = dir[0] * vel[1] * T - dir[1] * vel[0] * T;
    double sum = 0.0;
    for (int i = 1; i <= radial_nodes; ++i) {  // integrand vanishes at r = 0
      const double r = static_cast<double>(i) / radial_nodes;
      const double wgt = (i == radial_nodes) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      const Vec p = centroid + r * dir;
      sum += wgt * curl(p) * r * cross;
    }
    return sum / (3.0 * radial_nodes);
  };

  // Piecewise-smooth angular integration, composite Simpson per smooth arc.
  std::vector<double> corners{0.0};
  for (double b : path.breakpoints()) {
    const double s = b / T;
    if (s > 1e-12 && s < 1.0 - 1e-12) corners.push_back(s);
  }
  corners.push_back(1.0);
  std::sort(corners.begin(), corners.end());

  double total = 0.0;
  for (std::size_t piece = 0; piece + 1 < corners.size(); ++piece) {
    const double s0 = corners[piece], s1 = corners[piece + 1];
    int sub = std::max(2, static_cast<int>(std::lround(angular_panels * (s1 - s0))));
    if (sub % 2) ++sub;
    const double h = (s1 - s0) / sub;
    for (int i = 0; i <= sub; ++i) {
      const double s = s0 + i * h;
      double tv = s * T;
      if (i == 0) tv = (s + 1e-7 * (s1 - s0)) * T;
      if (i == sub) tv = (s - 1e-7 * (s1 - s0)) * T;
      const double wgt = (i == 0 || i == sub) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      total += wgt * h / 3.0 * radial_integral(s, tv);
    }
  }
  return total;
}

}  // namespace georabi::dynamics
