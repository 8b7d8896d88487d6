#include "georabi/spectrum.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>

namespace georabi::spectrum {

namespace {

struct MatrixAnchor final : FrameAnchor {
  Mat vectors;  // tracked-label order
};

void require_symmetric(const Mat& h, const char* what) {
  const double scale = std::max(h.cwiseAbs().maxCoeff(), 1e-300);
  if ((h - h.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw ModelError(std::string(what) + " is not symmetric");
}

void require_nondegenerate(const Vec& energies, double tol_rel) {
  const double range = energies[energies.size() - 1] - energies[0];
  const double tol = tol_rel * std::max(range, 1e-300);
  for (Eigen::Index i = 0; i + 1 < energies.size(); ++i) {
    if (energies[i + 1] - energies[i] < tol) {
      std::ostringstream os;
      os << "degenerate eigenvalue pair (" << energies[i] << ", " << energies[i + 1]
         << "), gap below tolerance " << tol;
      throw DegeneracyError(os.str());
    }
  }
}

void canonical_signs(Mat& v) {
  for (Eigen::Index c = 0; c < v.cols(); ++c) {
    Eigen::Index imax = 0;
    v.col(c).cwiseAbs().maxCoeff(&imax);
    if (v(imax, c) < 0) v.col(c) = -v.col(c);
  }
}

}  // namespace

EigenFrame eigenframe(const HamiltonianModel& model, const ParamVector& lambda,
                      const EigenFrame* reference) {
  const Mat h0 = model.h0_at(lambda);
  require_symmetric(h0, "H0");
  Eigen::SelfAdjointEigenSolver<Mat> solver(h0);
  if (solver.info() != Eigen::Success) throw NumericError("eigensolver failed to converge");
  EigenFrame frame{lambda, solver.eigenvalues(), solver.eigenvectors()};
  require_nondegenerate(frame.energies, model.degeneracy_tol_rel());
  if (reference) {
    for (Eigen::Index c = 0; c < frame.vectors.cols(); ++c) {
      const double ov = reference->vectors.col(c).dot(frame.vectors.col(c));
      if (ov == 0.0) throw ModelError("eigenframe: zero overlap with reference");
      if (ov < 0) frame.vectors.col(c) = -frame.vectors.col(c);
    }
  } else {
    canonical_signs(frame.vectors);
  }
  return frame;
}

std::vector<int> assign_to_reference(const Mat& reference, Mat& vectors, double min_overlap) {
  const int n = static_cast<int>(vectors.cols());
  const Mat overlap = reference.transpose() * vectors;
  std::vector<int> match(n, -1);
  std::vector<bool> used(n, false);
  // Greedy on globally largest |overlap| entries.
  for (int pass = 0; pass < n; ++pass) {
    int bi = -1, bj = -1;
    double best = -1.0;
    for (int i = 0; i < n; ++i) {
      if (match[i] >= 0) continue;
      for (int j = 0; j < n; ++j) {
        if (used[j]) continue;
        if (std::abs(overlap(i, j)) > best) {
          best = std::abs(overlap(i, j));
          bi = i;
          bj = j;
        }
      }
    }
    if (best < min_overlap)
      throw ModelError("state assignment ambiguous (overlap " + std::to_string(best) +
                       "): level collision or reference too far away");
    match[bi] = bj;
    used[bj] = true;
  }
  Mat out(vectors.rows(), n);
  for (int i = 0; i < n; ++i) {
    Vec col = vectors.col(match[i]);
    if (reference.col(i).dot(col) < 0) col = -col;
    out.col(i) = col;
  }
  vectors = std::move(out);
  return match;
}

namespace {

// Stencil frames at lambda +- h e_mu, sign/label aligned to the center frame.
struct Stencil {
  Mat plus, minus;
  double h;
};

Stencil stencil_for(const HamiltonianModel& model, const ParamVector& lambda, const Mat& center,
                    int mu, double h) {
  const double scale = model.param_scale(mu);
  if (!(h > 0)) throw UsageError("finite-difference step must be positive");
  if (h <= 1e-12 * scale) throw NumericError("finite-difference step below precision floor");
  Stencil s;
  s.h = h;
  for (int sign : {+1, -1}) {
    EigenFrame f = eigenframe(model, lambda.shifted(mu, sign * h), nullptr);
    assign_to_reference(center, f.vectors);
    (sign > 0 ? s.plus : s.minus) = f.vectors;
  }
  return s;
}

}  // namespace

std::vector<Vec> dphi_dparam(const HamiltonianModel& model, const ParamVector& lambda, int n,
                             std::optional<double> step) {
  if (n < 0 || n >= model.dimension()) throw UsageError("dphi_dparam: state index out of range");
  const EigenFrame center = eigenframe(model, lambda, nullptr);
  std::vector<Vec> out;
  out.reserve(model.param_count());
  for (int mu = 0; mu < model.param_count(); ++mu) {
    const double h = step.value_or(model.fd_step(mu));
    const Stencil s = stencil_for(model, lambda, center.vectors, mu, h);
    out.push_back((s.plus.col(n) - s.minus.col(n)) / (2.0 * h));
  }
  return out;
}

CouplingTensor coupling_tensor(const HamiltonianModel& model, const ParamVector& lambda,
                               std::optional<double> step) {
  const EigenFrame center = eigenframe(model, lambda, nullptr);
  CouplingTensor tensor{model.param_names(), {}};
  for (int mu = 0; mu < model.param_count(); ++mu) {
    const double h = step.value_or(model.fd_step(mu));
    const Stencil s = stencil_for(model, lambda, center.vectors, mu, h);
    Mat raw = center.vectors.transpose() * ((s.plus - s.minus) / (2.0 * h));
    // The exact object is antisymmetric with zero diagonal (real gauge);
    // finite differences leave O(h^2) residue which we strip after checking
    // it is actually small.
    const double scale = std::max(raw.cwiseAbs().maxCoeff(), 1e-300);
    if ((raw + raw.transpose()).cwiseAbs().maxCoeff() > 1e-5 * scale + 1e-9)
      throw NumericError("coupling tensor: antisymmetry residual too large");
    tensor.entries.push_back(0.5 * (raw - raw.transpose()));
  }
  return tensor;
}

Frame matrix_frame(const HamiltonianModel& model, const ParamVector& lambda,
                   const Frame* reference) {
  EigenFrame f = eigenframe(model, lambda, nullptr);
  Mat vectors = f.vectors;
  Vec energies = f.energies;
  if (reference) {
    const auto* anchor = dynamic_cast<const MatrixAnchor*>(reference->anchor.get());
    if (!anchor) throw UsageError("matrix_frame: reference anchor of wrong type");
    const std::vector<int> perm = assign_to_reference(anchor->vectors, vectors);
    Vec e(energies.size());
    for (Eigen::Index i = 0; i < e.size(); ++i) e[i] = energies[perm[i]];
    energies = e;
  }

  Frame frame;
  frame.lambda = lambda;
  frame.energies = energies;
  frame.couplings.reserve(model.param_count());
  for (int mu = 0; mu < model.param_count(); ++mu) {
    const double h = model.fd_step(mu);
    const Stencil s = stencil_for(model, lambda, vectors, mu, h);
    Mat raw = vectors.transpose() * ((s.plus - s.minus) / (2.0 * h));
    frame.couplings.push_back(0.5 * (raw - raw.transpose()));
  }
  const Mat hp = model.drive_at(lambda);
  require_symmetric(hp, "drive operator");
  frame.drive = vectors.transpose() * hp * vectors;
  auto anchor = std::make_shared<MatrixAnchor>();
  anchor->vectors = std::move(vectors);
  frame.anchor = std::move(anchor);
  return frame;
}

}  // namespace georabi::spectrum

namespace georabi {

MatrixModel::MatrixModel(int dimension, ParamNames names, MatrixFn h0, MatrixFn drive,
                         RoleMap roles)
    : dim_(dimension), names_(std::move(names)), h0_(std::move(h0)), drive_(std::move(drive)),
      roles_(std::move(roles)) {
  if (dim_ <= 0) throw ModelError("MatrixModel: dimension must be positive");
  roles_.validate(dim_);
}

Mat MatrixModel::h0_at(const ParamVector& lambda) const {
  Mat h = h0_(lambda);
  if (h.rows() != dim_ || h.cols() != dim_) throw ModelError("MatrixModel: H0 has wrong shape");
  return h;
}

Mat MatrixModel::drive_at(const ParamVector& lambda) const {
  Mat h = drive_(lambda);
  if (h.rows() != dim_ || h.cols() != dim_) throw ModelError("MatrixModel: drive has wrong shape");
  return h;
}

Frame MatrixModel::frame_at(const ParamVector& lambda, const Frame* reference) const {
  return spectrum::matrix_frame(*this, lambda, reference);
}

}  // namespace georabi
