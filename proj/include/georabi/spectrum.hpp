#pragma once

#include <optional>
#include <vector>

#include "georabi/model.hpp"

namespace georabi::spectrum {

// Gauge-fixed instantaneous eigenbasis of H0(lambda), energies ascending.
// With no reference the gauge convention is "largest-magnitude component
// positive" per column; with a reference, signs are chosen so that
// <ref_n | phi_n> > 0.
struct EigenFrame {
  ParamVector lambda;
  Vec energies;
  Mat vectors;  // orthonormal columns
};

// Antisymmetric non-adiabatic coupling matrices <phi_i | d/dmu phi_j>, one per
// parameter component.
struct CouplingTensor {
  ParamNames names;
  std::vector<Mat> entries;
};

EigenFrame eigenframe(const HamiltonianModel& model, const ParamVector& lambda,
                      const EigenFrame* reference = nullptr);

// Central-difference derivative of the gauge-fixed eigenvector n, one vector
// per parameter component. Stencil frames are aligned to the frame at lambda.
std::vector<Vec> dphi_dparam(const HamiltonianModel& model, const ParamVector& lambda, int n,
                             std::optional<double> step = std::nullopt);

CouplingTensor coupling_tensor(const HamiltonianModel& model, const ParamVector& lambda,
                               std::optional<double> step = std::nullopt);

// Match the columns of `vectors` to `reference` by largest overlap magnitude
// and fix signs positive; returns the permutation applied (new index of the
// state matching reference column j). Throws when the matching is ambiguous
// (overlap below 0.5): along a path that means frames are too far apart or a
// level collision occurred.
std::vector<int> assign_to_reference(const Mat& reference, Mat& vectors, double min_overlap = 0.5);

// Default Frame pipeline for matrix models: eigendecomposition, tracked-label
// alignment to the reference frame, finite-difference couplings, and the
// drive operator rotated into the eigenbasis.
Frame matrix_frame(const HamiltonianModel& model, const ParamVector& lambda,
                   const Frame* reference);

}  // namespace georabi::spectrum
