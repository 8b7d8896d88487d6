#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "georabi/params.hpp"

namespace georabi {

// Time-parameterized curve lambda(t) in parameter space. One traversal covers
// [0, period()]; implementations accept any t >= 0 so runs may span several
// cycles. cyclic() promises lambda(t + period) == lambda(t).
class ParamPath {
 public:
  virtual ~ParamPath() = default;

  virtual double period() const = 0;
  virtual bool cyclic() const = 0;
  virtual ParamVector at(double t) const = 0;
  virtual Vec velocity(double t) const = 0;
  // Interior times (within one period) where velocity may jump; quadrature
  // splits at these.
  virtual std::vector<double> breakpoints() const { return {}; }
  virtual ParamNames names() const = 0;
};

// center_i + amp_i * cos(omega t + phase_i) per component. Covers the
// depth-ellipse (phases 0 and -pi/2) and plain parameter circles.
class HarmonicLoopPath final : public ParamPath {
 public:
  HarmonicLoopPath(ParamNames names, Vec center, Vec amplitudes, Vec phases, double omega);

  double period() const override;
  bool cyclic() const override { return true; }
  ParamVector at(double t) const override;
  Vec velocity(double t) const override;
  ParamNames names() const override { return names_; }

  const Vec& center() const { return center_; }
  const Vec& amplitudes() const { return amplitudes_; }
  double omega() const { return omega_; }

 private:
  ParamNames names_;
  Vec center_, amplitudes_, phases_;
  double omega_;
};

// Circular arc in a two-parameter plane: polar angle phi(t) = phi0 + rate * t
// at fixed radius about a center. A full revolution (span 2*pi) is cyclic.
class ArcPath final : public ParamPath {
 public:
  ArcPath(ParamNames names, Vec center, double radius, double phi0, double phi1, double duration);

  double period() const override { return duration_; }
  bool cyclic() const override;
  ParamVector at(double t) const override;
  Vec velocity(double t) const override;
  ParamNames names() const override { return names_; }

 private:
  ParamNames names_;
  Vec center_;
  double radius_, phi0_, phi1_, duration_;
};

// Radial spoke at fixed polar angle, radius r0 -> r1.
class RadialPath final : public ParamPath {
 public:
  RadialPath(ParamNames names, Vec center, double phi, double r0, double r1, double duration);

  double period() const override { return duration_; }
  bool cyclic() const override { return false; }
  ParamVector at(double t) const override;
  Vec velocity(double t) const override;
  ParamNames names() const override { return names_; }

 private:
  ParamNames names_;
  Vec center_;
  double phi_, r0_, r1_, duration_;
};

// Arc in (epsilon, delta) with the polarization angle carried as a third
// component equal to half the (continuously unwound) polar angle. Not cyclic:
// the third component advances by half the arc span per traversal even when
// the (epsilon, delta) projection closes.
class TrackedArcPath final : public ParamPath {
 public:
  TrackedArcPath(ParamNames names, double radius, double phi0, double phi1, double duration);

  double period() const override { return duration_; }
  bool cyclic() const override { return false; }
  ParamVector at(double t) const override;
  Vec velocity(double t) const override;
  ParamNames names() const override { return names_; }
  double phi0() const { return phi0_; }
  double rate() const { return (phi1_ - phi0_) / duration_; }

 private:
  ParamNames names_;
  double radius_, phi0_, phi1_, duration_;
};

// Segments traversed back to back. Velocity may jump at the joins; positions
// must be continuous.
class CompositePath final : public ParamPath {
 public:
  explicit CompositePath(std::vector<std::shared_ptr<const ParamPath>> segments);

  double period() const override { return total_; }
  bool cyclic() const override { return cyclic_; }
  ParamVector at(double t) const override;
  Vec velocity(double t) const override;
  std::vector<double> breakpoints() const override;
  ParamNames names() const override { return segments_.front()->names(); }

 private:
  std::pair<int, double> locate(double t) const;
  std::vector<std::shared_ptr<const ParamPath>> segments_;
  std::vector<double> offsets_;
  double total_ = 0;
  bool cyclic_ = false;
};

// Natural cubic spline through waypoints; cyclic when the first and last
// waypoints coincide.
class SplinePath final : public ParamPath {
 public:
  SplinePath(ParamNames names, std::vector<double> times, std::vector<Vec> points);

  double period() const override { return times_.back(); }
  bool cyclic() const override { return cyclic_; }
  ParamVector at(double t) const override;
  Vec velocity(double t) const override;
  ParamNames names() const override { return names_; }

 private:
  double wrap(double t) const;
  int segment(double t) const;
  ParamNames names_;
  std::vector<double> times_;
  std::vector<Vec> points_, second_;  // second derivatives per waypoint
  bool cyclic_ = false;
};

class StaticPath final : public ParamPath {
 public:
  explicit StaticPath(ParamVector point, double duration = 1.0)
      : point_(std::move(point)), duration_(duration) {}

  double period() const override { return duration_; }
  bool cyclic() const override { return true; }
  ParamVector at(double) const override { return point_; }
  Vec velocity(double) const override { return Vec::Zero(point_.size()); }
  ParamNames names() const override { return point_.names(); }

 private:
  ParamVector point_;
  double duration_;
};

// Finite-difference check of velocity() against at(); returns the worst
// relative mismatch over `probes` interior times.
double velocity_consistency(const ParamPath& path, int probes = 16);

}  // namespace georabi
