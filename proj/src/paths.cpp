#include "georabi/paths.hpp"

#include <algorithm>
#include <cmath>

namespace georabi {

HarmonicLoopPath::HarmonicLoopPath(ParamNames names, Vec center, Vec amplitudes, Vec phases,
                                   double omega)
    : names_(std::move(names)),
      center_(std::move(center)),
      amplitudes_(std::move(amplitudes)),
      phases_(std::move(phases)),
      omega_(omega) {
  const auto n = static_cast<Eigen::Index>(names_->size());
  if (center_.size() != n || amplitudes_.size() != n || phases_.size() != n)
    throw ModelError("HarmonicLoopPath: component count mismatch");
  if (!(std::abs(omega_) > 0)) throw ModelError("HarmonicLoopPath: omega must be nonzero");
}

double HarmonicLoopPath::period() const { return 2.0 * M_PI / std::abs(omega_); }

ParamVector HarmonicLoopPath::at(double t) const {
  Vec v = center_;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    v[i] += amplitudes_[i] * std::cos(omega_ * t + phases_[i]);
  return ParamVector(names_, std::move(v));
}

Vec HarmonicLoopPath::velocity(double t) const {
  Vec v(center_.size());
  for (Eigen::Index i = 0; i < v.size(); ++i)
    v[i] = -amplitudes_[i] * omega_ * std::sin(omega_ * t + phases_[i]);
  return v;
}

ArcPath::ArcPath(ParamNames names, Vec center, double radius, double phi0, double phi1,
                 double duration)
    : names_(std::move(names)),
      center_(std::move(center)),
      radius_(radius),
      phi0_(phi0),
      phi1_(phi1),
      duration_(duration) {
  if (names_->size() != 2) throw ModelError("ArcPath: exactly two parameters required");
  if (!(duration_ > 0)) throw ModelError("ArcPath: duration must be positive");
  if (!(radius_ > 0)) throw ModelError("ArcPath: radius must be positive");
}

bool ArcPath::cyclic() const {
  return std::abs(std::abs(phi1_ - phi0_) - 2.0 * M_PI) < 1e-12;
}

ParamVector ArcPath::at(double t) const {
  const double phi = phi0_ + (phi1_ - phi0_) * (t / duration_);
  Vec v(2);
  v[0] = center_[0] + radius_ * std::cos(phi);
  v[1] = center_[1] + radius_ * std::sin(phi);
  return ParamVector(names_, std::move(v));
}

Vec ArcPath::velocity(double t) const {
  const double rate = (phi1_ - phi0_) / duration_;
  const double phi = phi0_ + rate * t;
  Vec v(2);
  v[0] = -radius_ * rate * std::sin(phi);
  v[1] = radius_ * rate * std::cos(phi);
  return v;
}

RadialPath::RadialPath(ParamNames names, Vec center, double phi, double r0, double r1,
                       double duration)
    : names_(std::move(names)), center_(std::move(center)), phi_(phi), r0_(r0), r1_(r1),
      duration_(duration) {
  if (names_->size() != 2) throw ModelError("RadialPath: exactly two parameters required");
  if (!(duration_ > 0)) throw ModelError("RadialPath: duration must be positive");
}

ParamVector RadialPath::at(double t) const {
  const double r = r0_ + (r1_ - r0_) * (t / duration_);
  Vec v(2);
  v[0] = center_[0] + r * std::cos(phi_);
  v[1] = center_[1] + r * std::sin(phi_);
  return ParamVector(names_, std::move(v));
}

Vec RadialPath::velocity(double) const {
  const double rate = (r1_ - r0_) / duration_;
  Vec v(2);
  v[0] = rate * std::cos(phi_);
  v[1] = rate * std::sin(phi_);
  return v;
}

TrackedArcPath::TrackedArcPath(ParamNames names, double radius, double phi0, double phi1,
                               double duration)
    : names_(std::move(names)), radius_(radius), phi0_(phi0), phi1_(phi1), duration_(duration) {
  if (names_->size() != 3) throw ModelError("TrackedArcPath: three parameters required");
  if (!(duration_ > 0)) throw ModelError("TrackedArcPath: duration must be positive");
  if (!(radius_ > 0)) throw ModelError("TrackedArcPath: radius must be positive");
}

ParamVector TrackedArcPath::at(double t) const {
  const double phi = phi0_ + rate() * t;
  Vec v(3);
  v[0] = radius_ * std::cos(phi);
  v[1] = radius_ * std::sin(phi);
  v[2] = 0.5 * phi;
  return ParamVector(names_, std::move(v));
}

Vec TrackedArcPath::velocity(double t) const {
  const double r = rate();
  const double phi = phi0_ + r * t;
  Vec v(3);
  v[0] = -radius_ * r * std::sin(phi);
  v[1] = radius_ * r * std::cos(phi);
  v[2] = 0.5 * r;
  return v;
}

CompositePath::CompositePath(std::vector<std::shared_ptr<const ParamPath>> segments)
    : segments_(std::move(segments)) {
  if (segments_.empty()) throw ModelError("CompositePath: no segments");
  offsets_.push_back(0.0);
  for (const auto& s : segments_) {
    total_ += s->period();
    offsets_.push_back(total_);
  }
  // Continuity at the joins.
  for (std::size_t i = 0; i + 1 < segments_.size(); ++i) {
    const Vec end = segments_[i]->at(segments_[i]->period()).values();
    const Vec start = segments_[i + 1]->at(0.0).values();
    const double scale = std::max(end.norm(), 1e-300);
    if ((end - start).norm() > 1e-9 * scale)
      throw ModelError("CompositePath: segments are not position-continuous");
  }
  const Vec first = segments_.front()->at(0.0).values();
  const Vec last = segments_.back()->at(segments_.back()->period()).values();
  cyclic_ = (first - last).norm() <= 1e-10 * std::max(first.norm(), 1.0);
}

std::pair<int, double> CompositePath::locate(double t) const {
  if (cyclic_ && t > total_) t = std::fmod(t, total_);
  t = std::clamp(t, 0.0, total_);
  int i = static_cast<int>(std::upper_bound(offsets_.begin(), offsets_.end(), t) -
                           offsets_.begin()) - 1;
  i = std::clamp(i, 0, static_cast<int>(segments_.size()) - 1);
  return {i, t - offsets_[i]};
}

ParamVector CompositePath::at(double t) const {
  auto [i, local] = locate(t);
  return segments_[i]->at(local);
}

Vec CompositePath::velocity(double t) const {
  auto [i, local] = locate(t);
  return segments_[i]->velocity(local);
}

std::vector<double> CompositePath::breakpoints() const {
  return {offsets_.begin() + 1, offsets_.end() - 1};
}

SplinePath::SplinePath(ParamNames names, std::vector<double> times, std::vector<Vec> points)
    : names_(std::move(names)), times_(std::move(times)), points_(std::move(points)) {
  const std::size_t n = times_.size();
  if (n < 2 || points_.size() != n) throw ModelError("SplinePath: need >= 2 waypoints");
  if (std::abs(times_.front()) > 1e-15) throw ModelError("SplinePath: times must start at 0");
  for (std::size_t i = 1; i < n; ++i)
    if (!(times_[i] > times_[i - 1])) throw ModelError("SplinePath: times must increase");
  const double scale = std::max(points_.front().norm(), 1.0);
  cyclic_ = (points_.front() - points_.back()).norm() <= 1e-10 * scale;

  // Natural cubic spline second derivatives, per component (Thomas algorithm).
  const auto dim = points_.front().size();
  second_.assign(n, Vec::Zero(dim));
  if (n == 2) return;
  std::vector<double> diag(n - 2), rhs(n - 2), upper(n - 2);
  for (Eigen::Index c = 0; c < dim; ++c) {
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double h0 = times_[i] - times_[i - 1], h1 = times_[i + 1] - times_[i];
      diag[i - 1] = 2.0 * (h0 + h1);
      upper[i - 1] = h1;
      rhs[i - 1] = 6.0 * ((points_[i + 1][c] - points_[i][c]) / h1 -
                          (points_[i][c] - points_[i - 1][c]) / h0);
    }
    for (std::size_t i = 1; i < n - 2; ++i) {
      const double h = times_[i + 1] - times_[i];  // lower coefficient of row i
      const double m = h / diag[i - 1];
      diag[i] -= m * upper[i - 1];
      rhs[i] -= m * rhs[i - 1];
    }
    for (std::size_t i = n - 2; i-- > 0;) {
      double x = rhs[i];
      if (i + 1 < n - 2) x -= upper[i] * second_[i + 2][c];
      second_[i + 1][c] = x / diag[i];
    }
  }
}

double SplinePath::wrap(double t) const {
  const double T = times_.back();
  if (cyclic_ && (t > T || t < 0)) {
    t = std::fmod(t, T);
    if (t < 0) t += T;
  }
  return std::clamp(t, 0.0, T);
}

int SplinePath::segment(double t) const {
  int i = static_cast<int>(std::upper_bound(times_.begin(), times_.end(), t) - times_.begin()) - 1;
  return std::clamp(i, 0, static_cast<int>(times_.size()) - 2);
}

ParamVector SplinePath::at(double t) const {
  t = wrap(t);
  const int i = segment(t);
  const double h = times_[i + 1] - times_[i];
  const double A = (times_[i + 1] - t) / h, B = (t - times_[i]) / h;
  Vec v = A * points_[i] + B * points_[i + 1] +
          ((A * A * A - A) * second_[i] + (B * B * B - B) * second_[i + 1]) * (h * h) / 6.0;
  return ParamVector(names_, std::move(v));
}

Vec SplinePath::velocity(double t) const {
  t = wrap(t);
  const int i = segment(t);
  const double h = times_[i + 1] - times_[i];
  const double A = (times_[i + 1] - t) / h, B = (t - times_[i]) / h;
  return (points_[i + 1] - points_[i]) / h +
         ((3.0 * B * B - 1.0) * second_[i + 1] - (3.0 * A * A - 1.0) * second_[i]) * h / 6.0;
}

double velocity_consistency(const ParamPath& path, int probes) {
  const double T = path.period();
  const double h = 1e-6 * T;
  double worst = 0.0;
  double vscale = 0.0;
  for (int k = 0; k < probes; ++k) {
    const double t = T * (k + 0.5) / probes;
    vscale = std::max(vscale, path.velocity(t).norm());
  }
  if (vscale == 0.0) vscale = 1.0;
  for (int k = 0; k < probes; ++k) {
    const double t = T * (k + 0.5) / probes;
    const Vec fd = (path.at(t + h).values() - path.at(t - h).values()) / (2.0 * h);
    worst = std::max(worst, (fd - path.velocity(t)).norm() / vscale);
  }
  return worst;
}

}  // namespace georabi
