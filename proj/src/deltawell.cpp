#include "georabi/deltawell.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "georabi/dynamics.hpp"

namespace georabi::deltawell {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// (e^z - 1)/z, series below |z| = 0.5.
cplx phi1(cplx z) {
  if (std::abs(z) >= 0.5) return (std::exp(z) - 1.0) / z;
  cplx sum = 0.0, term = 1.0;
  for (int n = 0; n < 22; ++n) {
    sum += term / static_cast<double>(n + 1);
    term *= z / static_cast<double>(n + 1);
  }
  return sum;
}

// (e^z (z-1) + 1)/z^2 = sum_{n>=0} (n+1) z^n / (n+2)!, series below |z| = 0.5.
cplx psi2(cplx z) {
  if (std::abs(z) >= 0.5) return (std::exp(z) * (z - 1.0) + 1.0) / (z * z);
  cplx sum = 0.0, zn = 1.0;
  double fact = 2.0;  // (n+2)! running value
  for (int n = 0; n < 22; ++n) {
    sum += static_cast<double>(n + 1) * zn / fact;
    zn *= z;
    fact *= static_cast<double>(n + 3);
  }
  return sum;
}

cplx term_value(const ExpTerm& t, double x) { return t.coef * std::exp(t.mu * (x - t.xref)); }

// Integral of psi_a psi_b x^p over [lo, hi] (either end may be infinite) for
// two term lists living on that region. Each term pair is reduced to
// k e^{M (x - R)} with k the product of the term values at the finite anchor
// R, which keeps every intermediate bounded by state magnitudes.
cplx integrate_pair_over(const std::vector<ExpTerm>& ta, const std::vector<ExpTerm>& tb, int p,
                         double lo, double hi) {
  if (!(hi > lo)) return 0.0;
  const bool left_inf = std::isinf(lo), right_inf = std::isinf(hi);
  if (left_inf && right_inf) throw NumericError("pair integral: doubly infinite region");
  const double R = left_inf ? hi : lo;
  cplx total = 0.0;
  for (const auto& a : ta) {
    for (const auto& b : tb) {
      const cplx M = a.mu + b.mu;
      const cplx k = term_value(a, R) * term_value(b, R);
      cplx i0, i1;  // integrals of e^{Mu}, u e^{Mu} over the shifted region
      if (left_inf) {
        if (M.real() <= 0) throw NumericError("pair integral: non-decaying left tail");
        i0 = 1.0 / M;
        i1 = -1.0 / (M * M);
      } else if (right_inf) {
        if (M.real() >= 0) throw NumericError("pair integral: non-decaying right tail");
        i0 = -1.0 / M;
        i1 = 1.0 / (M * M);
      } else {
        const double d = hi - lo;
        const cplx z = M * d;
        if (z.real() > 700.0) throw NumericError("pair integral: interval too wide for exp");
        i0 = d * phi1(z);
        i1 = d * d * psi2(z);
      }
      total += k * (p == 0 ? i0 : i1 + R * i0);
    }
  }
  return total;
}

struct Rows {
  double m11, m12, m21, m22;
  double det() const { return m11 * m22 - m12 * m21; }
};

double energy_band(const DeltaWellPotential& pot) {
  return 1e-10 * std::max(pot.vc(), pot.gamma_l * pot.gamma_l / 4.0);
}

// Matching conditions at the two deltas expressed on the interior basis
// {u, v}: row1 . (A,B) = 0 encodes the left delta, row2 the right one. Roots
// of the determinant are the bound energies. The evanescent basis uses the
// shifted exponentials e^{-q(x+a)}, e^{q(x-a)} (same span as sinh/cosh but
// with O(1) entries for deep states).
Rows match_rows(const DeltaWellPotential& pot, double energy) {
  const double a = pot.a;
  const double kap = std::sqrt(-energy);
  const double s = energy + pot.vc();
  const double cl = kap - pot.gamma_l;
  const double cr = pot.gamma_r - kap;
  const double band = energy_band(pot);
  Rows r{};
  if (s > band) {
    const double k = std::sqrt(s);
    const double sa = std::sin(k * a), ca = std::cos(k * a);
    r.m11 = k * sa - cl * ca;
    r.m12 = ca + cl * sa / k;
    r.m21 = -k * sa - cr * ca;
    r.m22 = ca - cr * sa / k;
  } else if (s < -band) {
    const double q = std::sqrt(-s);
    const double e2 = std::exp(-2.0 * q * a);
    r.m11 = -q - cl;
    r.m12 = e2 * (q - cl);
    r.m21 = e2 * (-q - cr);
    r.m22 = q - cr;
  } else {
    // series-safe band around E = -V_c: u'' = -s u with u(0)=1, v(0)=0
    auto u = [s](double x) {
      const double x2 = x * x;
      return 1.0 - s * x2 / 2.0 + s * s * x2 * x2 / 24.0 - s * s * s * x2 * x2 * x2 / 720.0;
    };
    auto v = [s](double x) {
      const double x2 = x * x;
      return x * (1.0 - s * x2 / 6.0 + s * s * x2 * x2 / 120.0 - s * s * s * x2 * x2 * x2 / 5040.0);
    };
    r.m11 = -s * v(-a) - cl * u(-a);
    r.m12 = u(-a) - cl * v(-a);
    r.m21 = -s * v(a) - cr * u(a);
    r.m22 = u(a) - cr * v(a);
  }
  return r;
}

double det_at(const DeltaWellPotential& pot, double energy) { return match_rows(pot, energy).det(); }

std::vector<double> scan_roots(const DeltaWellPotential& pot, const SpectrumOptions& opts,
                               int points) {
  const double e_low = -opts.deepen_factor * std::pow(pot.beta + pot.gamma_l / 2.0, 2);
  const double e_high = opts.energy_floor;
  std::vector<double> grid;
  if (e_low >= e_high) return {};
  const double l0 = std::log(-e_high), l1 = std::log(-e_low);
  grid.reserve(points + 2);
  for (int i = 0; i < points; ++i)
    grid.push_back(-std::exp(l1 + (l0 - l1) * i / (points - 1.0)));
  // Keep brackets from straddling the interior branch switch.
  const double band = energy_band(pot);
  for (double e : {-pot.vc() - 4.0 * band, -pot.vc() + 4.0 * band})
    if (e > e_low && e < e_high) grid.push_back(e);
  std::sort(grid.begin(), grid.end());

  std::vector<double> roots;
  double fprev = det_at(pot, grid[0]);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    double fcur = det_at(pot, grid[i]);
    if (fprev == 0.0) {
      roots.push_back(grid[i - 1]);
    } else if (fprev * fcur < 0.0) {
      double lo = grid[i - 1], hi = grid[i], flo = fprev;
      for (int it = 0; it < 200 && (hi - lo) > 1e-15 * std::abs(lo + hi) / 2.0; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = det_at(pot, mid);
        if (fm == 0.0) {
          lo = hi = mid;
          break;
        }
        if (flo * fm < 0.0) {
          hi = mid;
        } else {
          lo = mid;
          flo = fm;
        }
      }
      roots.push_back(0.5 * (lo + hi));
    }
    fprev = fcur;
  }
  // Deduplicate near-identical roots from inserted split points.
  std::sort(roots.begin(), roots.end());
  std::vector<double> unique;
  for (double r : roots)
    if (unique.empty() || std::abs(r - unique.back()) > 1e-16 + 1e-11 * std::abs(r)) unique.push_back(r);
  return unique;
}

BoundState make_state(const DeltaWellPotential& pot, double energy) {
  const double a = pot.a;
  const Rows r = match_rows(pot, energy);
  const double n1 = std::hypot(r.m11, r.m12), n2 = std::hypot(r.m21, r.m22);
  // Null vector from the better-conditioned row; for a localized state the
  // row at its own delta nearly annihilates in its leading entry.
  double A, B;
  if (n1 >= n2) {
    A = r.m12;
    B = -r.m11;
  } else {
    A = r.m22;
    B = -r.m21;
  }
  const double s = energy + pot.vc();
  const double band = energy_band(pot);

  BoundState state;
  state.energy = energy;
  state.kappa = std::sqrt(-energy);
  state.half_width = a;
  state.interior = s >= 0 ? BoundState::Character::oscillatory : BoundState::Character::evanescent;

  auto& interior = state.regions[1];
  if (s < -band) {
    interior.push_back({A, -std::sqrt(-s), -a});
    interior.push_back({B, +std::sqrt(-s), +a});
  } else {
    const cplx k = std::sqrt(cplx(s, 0.0));
    const cplx ik = cplx(0.0, 1.0) * k;
    const cplx cp = 0.5 * A + B / (2.0 * ik);
    const cplx cm = 0.5 * A - B / (2.0 * ik);
    interior.push_back({cp, ik, 0.0});
    interior.push_back({cm, -ik, 0.0});
  }

  auto interior_value = [&interior](double x) {
    cplx v = 0.0;
    for (const auto& t : interior) v += term_value(t, x);
    return v.real();
  };
  state.regions[0].push_back({interior_value(-a), state.kappa, -a});
  state.regions[2].push_back({interior_value(+a), -state.kappa, +a});

  const double n2norm = pair_integral(state, state, 0);
  if (!(n2norm > 0) || !std::isfinite(n2norm))
    throw NumericError("bound state normalization failed");
  const double inv = 1.0 / std::sqrt(n2norm);
  for (auto& region : state.regions)
    for (auto& t : region) t.coef *= inv;

  // Deterministic sign: peak value positive (ties resolved toward smaller x).
  double best = 0.0, best_val = 0.0;
  for (int i = 0; i <= 2000; ++i) {
    const double x = -4.0 * a + 8.0 * a * i / 2000.0;
    const double v = state.value(x);
    if (std::abs(v) > best) {
      best = std::abs(v);
      best_val = v;
    }
  }
  for (double x : {-a, a}) {
    const double v = state.value(x);
    if (std::abs(v) > best) {
      best = std::abs(v);
      best_val = v;
    }
  }
  if (best_val < 0)
    for (auto& region : state.regions)
      for (auto& t : region) t.coef = -t.coef;
  return state;
}

}  // namespace

void DeltaWellPotential::validate() const {
  if (!(a > 0)) throw ModelError("delta well: half separation must be positive");
  if (!(gamma_r > 0) || !(gamma_l >= gamma_r))
    throw ModelError("delta well: require gamma_l >= gamma_r > 0");
  if (!(beta >= 0)) throw ModelError("delta well: beta must be nonnegative");
}

double BoundState::value(double x) const {
  const auto& terms = x < -half_width ? regions[0] : (x > half_width ? regions[2] : regions[1]);
  cplx v = 0.0;
  for (const auto& t : terms) v += term_value(t, x);
  return v.real();
}

double BoundState::derivative(double x) const {
  const auto& terms = x < -half_width ? regions[0] : (x > half_width ? regions[2] : regions[1]);
  cplx v = 0.0;
  for (const auto& t : terms) v += t.mu * term_value(t, x);
  return v.real();
}

double BoundState::continuity_residual() const {
  auto region_value = [this](int r, double x) {
    cplx v = 0.0;
    for (const auto& t : regions[r]) v += term_value(t, x);
    return v.real();
  };
  const double a = half_width;
  const double scale = std::max({std::abs(region_value(1, -a)), std::abs(region_value(1, a)), 1e-300});
  const double rl = std::abs(region_value(0, -a) - region_value(1, -a));
  const double rr = std::abs(region_value(2, a) - region_value(1, a));
  return std::max(rl, rr) / scale;
}

double BoundState::jump_residual(const DeltaWellPotential& pot) const {
  auto region_deriv = [this](int r, double x) {
    cplx v = 0.0;
    for (const auto& t : regions[r]) v += t.mu * term_value(t, x);
    return v.real();
  };
  const double a = half_width;
  const double vl = value(-a), vr = value(a);
  const double left = region_deriv(1, -a) - region_deriv(0, -a) + pot.gamma_l * vl;
  const double right = region_deriv(2, a) - region_deriv(1, a) + pot.gamma_r * vr;
  const double scale_l =
      std::abs(region_deriv(1, -a)) + std::abs(region_deriv(0, -a)) + pot.gamma_l * std::abs(vl);
  const double scale_r =
      std::abs(region_deriv(2, a)) + std::abs(region_deriv(1, a)) + pot.gamma_r * std::abs(vr);
  return std::max(std::abs(left) / std::max(scale_l, 1e-300),
                  std::abs(right) / std::max(scale_r, 1e-300));
}

double pair_integral(const BoundState& sa, const BoundState& sb, int xpower) {
  return pair_integral_interval(sa, sb, xpower, -kInf, kInf);
}

double pair_integral_interval(const BoundState& sa, const BoundState& sb, int xpower, double c,
                              double d) {
  if (sa.half_width != sb.half_width)
    throw UsageError("pair integral: states from different geometries");
  if (xpower != 0 && xpower != 1) throw UsageError("pair integral: xpower must be 0 or 1");
  const double a = sa.half_width;
  const double bounds[4] = {-kInf, -a, a, kInf};
  cplx total = 0.0;
  for (int r = 0; r < 3; ++r) {
    const double lo = std::max(bounds[r], c);
    const double hi = std::min(bounds[r + 1], d);
    if (hi > lo) total += integrate_pair_over(sa.regions[r], sb.regions[r], xpower, lo, hi);
  }
  return total.real();
}

std::vector<BoundState> bound_spectrum(const DeltaWellPotential& pot, const SpectrumOptions& opts) {
  pot.validate();
  const auto coarse = scan_roots(pot, opts, opts.scan_points);
  const auto fine = scan_roots(pot, opts, 2 * opts.scan_points);
  if (coarse.size() != fine.size()) {
    std::ostringstream os;
    os << "bound state count unstable under grid refinement (" << coarse.size() << " vs "
       << fine.size() << ")";
    throw ResolutionError(os.str());
  }
  std::vector<BoundState> states;
  states.reserve(fine.size());
  for (double e : fine) states.push_back(make_state(pot, e));
  return states;
}

StateClassification classify(const BoundState& state, const DeltaWellPotential& pot) {
  // Window half-widths follow each delta's own bound-state extension 1/gamma;
  // six extensions hold 1 - e^{-6} = 0.9975 of an isolated delta state. For
  // negligible deltas the window is capped so it stays a local probe.
  const double a = pot.a;
  const double wl = std::min(6.0 / pot.gamma_l, 8.0 * a);
  const double wr = std::min(6.0 / pot.gamma_r, 8.0 * a);
  StateClassification c;
  c.weight_left = pair_integral_interval(state, state, 0, -a - wl, std::min(-a + wl, 0.0));
  c.weight_right = pair_integral_interval(state, state, 0, std::max(a - wr, 0.0), a + wr);
  c.weight_center =
      pair_integral_interval(state, state, 0, std::min(-a + wl, 0.0), std::max(a - wr, 0.0));
  if (c.weight_left > 0.9)
    c.label = StateLabel::localized_left;
  else if (c.weight_right > 0.9)
    c.label = StateLabel::localized_right;
  else
    c.label = StateLabel::extended;
  return c;
}

namespace {

struct WellAnchor final : FrameAnchor {
  Mat grid;  // samples x tracked states
  Vec energies;
};

Vec simpson_weights(const Vec& x) {
  const auto n = x.size();
  if (n < 3 || n % 2 == 0) throw UsageError("Simpson grid needs an odd point count >= 3");
  const double dx = (x[n - 1] - x[0]) / static_cast<double>(n - 1);
  Vec w = Vec::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) w[i] = (i == 0 || i == n - 1) ? 1.0 : (i % 2 ? 4.0 : 2.0);
  return w * (dx / 3.0);
}

Vec sample_on_grid(const BoundState& s, const Vec& x) {
  Vec v(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) v[i] = s.value(x[i]);
  return v;
}

}  // namespace

struct DeltaWellModel::Solved {
  std::vector<BoundState> states;  // tracked order, sign-aligned
  Vec energies;
};

DeltaWellPotential DeltaWellModel::potential_at(const ParamVector& lambda) const {
  const double eps_c = lambda.value("eps_c");
  const double eps_r = lambda.value("eps_r");
  if (eps_c < 0) throw ModelError("delta well: eps_c must stay nonnegative on the path");
  if (!(eps_r > 0)) throw ModelError("delta well: eps_r must stay positive on the path");
  DeltaWellPotential pot{base_.a, base_.gamma_l, std::sqrt(eps_r), std::sqrt(eps_c)};
  pot.validate();
  return pot;
}

ParamVector DeltaWellModel::base_point() const {
  Vec v(2);
  v[0] = base_.vc();
  v[1] = base_.gamma_r * base_.gamma_r;
  return ParamVector(names_, std::move(v));
}

RoleMap DeltaWellModel::roles() const {
  RoleMap r;
  r.state0 = 0;
  r.state2 = 1;
  r.aux.clear();
  for (int i = 2; i < dimension(); ++i) r.aux.push_back(i);
  return r;
}

DeltaWellModel::Solved DeltaWellModel::solve_tracked(const ParamVector& lambda,
                                                     const Frame* reference) const {
  const Frame* ref = reference ? reference : base_frame_.get();
  const auto* anchor = dynamic_cast<const WellAnchor*>(ref->anchor.get());
  if (!anchor) throw UsageError("delta well frame: reference anchor of wrong type");

  const DeltaWellPotential pot = potential_at(lambda);
  auto all = bound_spectrum(pot);
  const int K = static_cast<int>(all.size());
  const int N = static_cast<int>(tracked_);
  if (K < N) throw ModelError("delta well: tracked state disappeared (fewer bound states)");

  Mat samples(grid_x_.size(), K);
  for (int j = 0; j < K; ++j) samples.col(j) = sample_on_grid(all[j], grid_x_);
  const Mat ov = anchor->grid.transpose() * grid_w_.asDiagonal() * samples;

  Solved out;
  out.states.reserve(N);
  out.energies.resize(N);
  std::vector<bool> used(K, false);
  for (int i = 0; i < N; ++i) {
    int bj = -1;
    double best = -1.0;
    for (int j = 0; j < K; ++j) {
      if (used[j]) continue;
      if (std::abs(ov(i, j)) > best) {
        best = std::abs(ov(i, j));
        bj = j;
      }
    }
    if (best < 0.5)
      throw ModelError("delta well: state tracking lost (overlap " + std::to_string(best) + ")");
    used[bj] = true;
    BoundState s = std::move(all[bj]);
    if (ov(i, bj) < 0)
      for (auto& region : s.regions)
        for (auto& t : region) t.coef = -t.coef;
    out.energies[i] = s.energy;
    out.states.push_back(std::move(s));
  }
  return out;
}

Mat DeltaWellModel::h0_at(const ParamVector& lambda) const {
  return solve_tracked(lambda, nullptr).energies.asDiagonal();
}

Mat DeltaWellModel::drive_at(const ParamVector& lambda) const {
  const Solved s = solve_tracked(lambda, nullptr);
  const int N = dimension();
  Mat w(N, N);
  for (int i = 0; i < N; ++i)
    for (int j = i; j < N; ++j) w(i, j) = w(j, i) = position_element(s.states[i], s.states[j]);
  return w;
}

Frame DeltaWellModel::frame_at(const ParamVector& lambda, const Frame* reference) const {
  const Solved center = solve_tracked(lambda, reference);
  const int N = dimension();

  Frame frame;
  frame.lambda = lambda;
  frame.energies = center.energies;
  frame.drive.resize(N, N);
  for (int i = 0; i < N; ++i)
    for (int j = i; j < N; ++j)
      frame.drive(i, j) = frame.drive(j, i) =
          position_element(center.states[i], center.states[j]);

  // Couplings <psi_i | d/dmu psi_j> by central differences of the matched and
  // sign-aligned states at lambda +- h, with exact piecewise overlaps.
  for (int mu = 0; mu < 2; ++mu) {
    const double h = fd_step(mu);
    Mat side[2];
    for (int sgn = 0; sgn < 2; ++sgn) {
      const auto shifted = bound_spectrum(potential_at(lambda.shifted(mu, sgn ? -h : +h)));
      const int K = static_cast<int>(shifted.size());
      Mat overlaps(N, N);
      std::vector<bool> used(K, false);
      for (int j = 0; j < N; ++j) {
        int bj = -1;
        double best = -1.0;
        for (int k = 0; k < K; ++k) {
          if (used[k]) continue;
          const double o = overlap(center.states[j], shifted[k]);
          if (std::abs(o) > best) {
            best = std::abs(o);
            bj = k;
          }
        }
        if (best < 0.5) throw ModelError("delta well: stencil state matching lost");
        used[bj] = true;
        const double sign = overlap(center.states[j], shifted[bj]) < 0 ? -1.0 : 1.0;
        for (int i = 0; i < N; ++i)
          overlaps(i, j) = sign * overlap(center.states[i], shifted[bj]);
      }
      side[sgn] = overlaps;
    }
    Mat raw = (side[0] - side[1]) / (2.0 * h);
    const double scale = std::max(raw.cwiseAbs().maxCoeff(), 1e-300);
    if ((raw + raw.transpose()).cwiseAbs().maxCoeff() > 1e-5 * scale + 1e-9)
      throw NumericError("delta well couplings: antisymmetry residual too large");
    frame.couplings.push_back(0.5 * (raw - raw.transpose()));
  }

  auto anchor = std::make_shared<WellAnchor>();
  anchor->grid.resize(grid_x_.size(), N);
  for (int j = 0; j < N; ++j) anchor->grid.col(j) = sample_on_grid(center.states[j], grid_x_);
  anchor->energies = center.energies;
  frame.anchor = std::move(anchor);
  return frame;
}

std::unique_ptr<DeltaWellModel> as_model(const DeltaWellPotential& base, const ParamPath& path,
                                         double truncation_threshold, int probes,
                                         int grid_points) {
  base.validate();
  if (!(truncation_threshold > 0.0) || truncation_threshold > 1.0)
    throw UsageError("truncation threshold must lie in (0, 1]");
  if (grid_points < 4001) grid_points = 4001;
  if (grid_points % 2 == 0) ++grid_points;

  auto model = std::unique_ptr<DeltaWellModel>(new DeltaWellModel());
  model->base_ = base;
  model->names_ = make_param_names({"eps_c", "eps_r"});
  model->grid_x_.resize(grid_points);
  for (int i = 0; i < grid_points; ++i)
    model->grid_x_[i] = -4.0 * base.a + 8.0 * base.a * i / (grid_points - 1.0);
  model->grid_w_ = simpson_weights(model->grid_x_);

  if (*path.names() != *model->names_)
    throw UsageError("delta well path must provide (eps_c, eps_r)");

  // Base spectrum and role identification.
  auto all = bound_spectrum(base);
  int left = -1, right = -1;
  std::vector<int> extended;
  for (int j = 0; j < static_cast<int>(all.size()); ++j) {
    const auto c = classify(all[j], base);
    if (c.label == StateLabel::localized_left) {
      if (left >= 0) throw ModelError("delta well: more than one left-localized state");
      left = j;
    } else if (c.label == StateLabel::localized_right) {
      if (right >= 0) throw ModelError("delta well: more than one right-localized state");
      right = j;
    } else {
      extended.push_back(j);
    }
  }
  if (left < 0 || right < 0)
    throw ModelError("delta well: need exactly two localized states (left and right)");
  if (extended.empty())
    throw ModelError("delta well: no extended states available as auxiliaries");

  auto build_tracked = [&](const std::vector<int>& ext_sel) {
    model->base_indices_ = {left, right};
    for (int j : ext_sel) model->base_indices_.push_back(j);
    model->tracked_ = model->base_indices_.size();
    const int N = static_cast<int>(model->tracked_);
    auto anchor = std::make_shared<WellAnchor>();
    anchor->grid.resize(model->grid_x_.size(), N);
    anchor->energies.resize(N);
    auto frame = std::make_shared<Frame>();
    for (int i = 0; i < N; ++i) {
      anchor->grid.col(i) = sample_on_grid(all[model->base_indices_[i]], model->grid_x_);
      anchor->energies[i] = all[model->base_indices_[i]].energy;
    }
    frame->lambda = model->base_point();
    frame->energies = anchor->energies;
    frame->anchor = std::move(anchor);
    model->base_frame_ = std::move(frame);
  };

  // Parameter scales follow the base point and the actual path excursion.
  {
    const ParamVector base_pt = [&] {
      Vec v(2);
      v[0] = base.vc();
      v[1] = base.gamma_r * base.gamma_r;
      return ParamVector(model->names_, std::move(v));
    }();
    Vec scale(2);
    for (int mu = 0; mu < 2; ++mu) scale[mu] = std::abs(base_pt[mu]);
    for (int k = 0; k <= probes; ++k) {
      const Vec p = path.at(path.period() * k / std::max(probes, 1)).values();
      for (int mu = 0; mu < 2; ++mu)
        scale[mu] = std::max(scale[mu], 2.0 * std::abs(p[mu] - base_pt[mu]));
    }
    for (int mu = 0; mu < 2; ++mu)
      scale[mu] = std::max(scale[mu], 1e-3 * base.gamma_l * base.gamma_l);
    model->set_param_scales(scale);
  }

  // Rank extended states by their contribution to the effective field along
  // the path, then keep the smallest prefix reaching the threshold.
  build_tracked(extended);
  std::vector<double> score(extended.size(), 0.0);
  for (int k = 0; k < probes; ++k) {
    const double t = path.period() * (k + 0.5) / probes;
    const Frame f = model->frame_at(path.at(t), nullptr);
    const auto roles = model->roles();
    const auto terms = dynamics::effective_field_per_aux(f, roles, 1.0);
    for (std::size_t u = 0; u < extended.size(); ++u)
      for (int mu = 0; mu < 2; ++mu)
        score[u] += std::abs(terms[u][mu]) * model->param_scale(mu);
  }
  double total = 0.0;
  for (double s : score) total += s;
  std::vector<int> order(extended.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return score[a] > score[b]; });
  std::vector<int> selected;
  double acc = 0.0;
  for (int idx : order) {
    selected.push_back(extended[idx]);
    acc += score[idx];
    if (total > 0 && acc >= truncation_threshold * total) break;
  }
  std::sort(selected.begin(), selected.end());
  build_tracked(selected);

  // The two localized states must stay localized everywhere on the path.
  for (int k = 0; k <= probes; ++k) {
    const double t = path.period() * k / std::max(probes, 1);
    const ParamVector lam = path.at(t);
    const auto solved = model->solve_tracked(lam, nullptr);
    const DeltaWellPotential pot = model->potential_at(lam);
    if (classify(solved.states[0], pot).label != StateLabel::localized_left ||
        classify(solved.states[1], pot).label != StateLabel::localized_right)
      throw ModelError("delta well: localized-state count != 2 somewhere on the path");
  }
  return model;
}

DeltaWellPotential fig2_potential(double gamma_l) {
  const double a = 44.0 / gamma_l;
  return DeltaWellPotential{a, gamma_l, 22.0 / a, 7.8 / a};
}

std::shared_ptr<HarmonicLoopPath> fig2_path(const DeltaWellPotential& pot, double omega,
                                            double lambda_r_eu, double lambda_c_eu) {
  const double eu = pot.eu();
  auto names = make_param_names({"eps_c", "eps_r"});
  Vec center(2), amps(2), phases(2);
  center << pot.vc(), pot.gamma_r * pot.gamma_r;
  amps << lambda_c_eu * eu, lambda_r_eu * eu;
  phases << -M_PI / 2.0, 0.0;  // eps_c follows sin, eps_r follows cos
  return std::make_shared<HarmonicLoopPath>(names, center, amps, phases, omega);
}

}  // namespace georabi::deltawell
