#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "georabi/params.hpp"

namespace georabi {

// Which tracked states play which role in the transfer scheme. state0 and
// state2 are the decoupled pair; aux are the intermediate states excited only
// virtually. Indices refer to the model's tracked-state labels, which follow
// physical identity (not energy order) along a path.
struct RoleMap {
  int state0 = 0;
  int state2 = 2;
  std::vector<int> aux{1};

  void validate(int dimension) const;
};

// Model-specific continuation payload used to keep gauge and state identity
// continuous from one frame to the next.
struct FrameAnchor {
  virtual ~FrameAnchor() = default;
};

// Instantaneous-eigenbasis data at a parameter point, in tracked-label order:
// energies E_n, unit-amplitude drive matrix elements <n|H'|m>, and the
// non-adiabatic couplings <n|d/dmu m> per parameter component.
struct Frame {
  ParamVector lambda;
  Vec energies;
  Mat drive;                   // symmetric
  std::vector<Mat> couplings;  // antisymmetric, one per parameter
  std::shared_ptr<const FrameAnchor> anchor;

  int dim() const { return static_cast<int>(energies.size()); }
  // kinetic coupling matrix sum_mu couplings[mu] * vel[mu]
  Mat kinetic(const Vec& vel) const {
    Mat a = Mat::Zero(dim(), dim());
    for (std::size_t m = 0; m < couplings.size(); ++m) a += couplings[m] * vel[m];
    return a;
  }
};

// A parameterized Hamiltonian: a matrix family H0(lambda) driven through a
// coupling operator. frame_at() is the single entry point the propagation
// code uses; the default matrix pipeline lives in spectrum.cpp and concrete
// models may substitute their own (the double-well solver does).
class HamiltonianModel {
 public:
  virtual ~HamiltonianModel() = default;

  virtual int dimension() const = 0;
  virtual ParamNames param_names() const = 0;
  virtual RoleMap roles() const = 0;

  virtual Mat h0_at(const ParamVector& lambda) const = 0;
  // Drive coupling operator at unit amplitude; the physical perturbation is
  // 2 F drive cos(theta).
  virtual Mat drive_at(const ParamVector& lambda) const = 0;
  Mat hprime_at(const ParamVector& lambda, double amplitude) const {
    return amplitude * drive_at(lambda);
  }

  virtual Frame frame_at(const ParamVector& lambda, const Frame* reference) const = 0;

  int param_count() const { return static_cast<int>(param_names()->size()); }

  // Finite-difference step for eigenvector derivatives, per parameter.
  double fd_step(int component) const { return fd_rel_ * param_scale(component); }
  double param_scale(int component) const {
    return param_scales_.empty() ? 1.0 : param_scales_[component];
  }
  void set_param_scales(Vec scales) {
    param_scales_.assign(scales.data(), scales.data() + scales.size());
  }
  void set_fd_relative_step(double r) { fd_rel_ = r; }
  double degeneracy_tol_rel() const { return degeneracy_rel_; }
  void set_degeneracy_tol_rel(double r) { degeneracy_rel_ = r; }

 private:
  std::vector<double> param_scales_;
  double fd_rel_ = 1e-5;
  double degeneracy_rel_ = 1e-8;
};

inline void RoleMap::validate(int dimension) const {
  auto in_range = [dimension](int i) { return i >= 0 && i < dimension; };
  if (!in_range(state0) || !in_range(state2) || state0 == state2)
    throw ModelError("role map: state0/state2 invalid");
  std::vector<bool> seen(dimension, false);
  seen[state0] = seen[state2] = true;
  for (int a : aux) {
    if (!in_range(a) || seen[a]) throw ModelError("role map: duplicate or out-of-range aux index");
    seen[a] = true;
  }
}

// Generic model given by explicit matrix functions of lambda.
class MatrixModel final : public HamiltonianModel {
 public:
  using MatrixFn = std::function<Mat(const ParamVector&)>;

  MatrixModel(int dimension, ParamNames names, MatrixFn h0, MatrixFn drive, RoleMap roles);

  int dimension() const override { return dim_; }
  ParamNames param_names() const override { return names_; }
  RoleMap roles() const override { return roles_; }
  Mat h0_at(const ParamVector& lambda) const override;
  Mat drive_at(const ParamVector& lambda) const override;
  Frame frame_at(const ParamVector& lambda, const Frame* reference) const override;

 private:
  int dim_;
  ParamNames names_;
  MatrixFn h0_, drive_;
  RoleMap roles_;
};

}  // namespace georabi
