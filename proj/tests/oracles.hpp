// Independent reference computations used by the tests: these deliberately
// avoid the implementation paths they are checking.
#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "georabi/deltawell.hpp"

namespace oracles {

// Recursive Simpson quadrature of a pointwise-evaluated function.
inline double quad(const std::function<double(double)>& f, double a, double b, double tol,
                   int depth = 0) {
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  std::function<double(double, double, double, double, double, double, int)> rec =
      [&](double lo, double hi, double flo, double fmid, double fhi, double whole,
          int d) -> double {
    const double mid = 0.5 * (lo + hi);
    const double fl = f(0.5 * (lo + mid)), fr = f(0.5 * (mid + hi));
    const double left = (mid - lo) / 6.0 * (flo + 4.0 * fl + fmid);
    const double right = (hi - mid) / 6.0 * (fmid + 4.0 * fr + fhi);
    if (std::abs(left + right - whole) <= 15.0 * tol || d > 24)
      return left + right + (left + right - whole) / 15.0;
    return rec(lo, mid, flo, fl, fmid, left, d + 1) + rec(mid, hi, fmid, fr, fhi, right, d + 1);
  };
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return rec(a, b, fa, fm, fb, whole, depth);
}

// Finite-square-well bound energies from the even/odd transcendental
// relations, for a well of depth beta^2 and half width a (hbar = 1, 2m = 1).
inline std::vector<double> square_well_energies(double a, double beta) {
  std::vector<double> energies;
  const double b = a * beta;
  auto feven = [&](double ka) { return ka * std::tan(ka) - std::sqrt(b * b - ka * ka); };
  auto fodd = [&](double ka) { return -ka / std::tan(ka) - std::sqrt(b * b - ka * ka); };
  auto solve = [&](double lo, double hi, const std::function<double(double)>& f) {
    double flo = f(lo);
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double fm = f(mid);
      if (flo * fm <= 0)
        hi = mid;
      else {
        lo = mid;
        flo = fm;
      }
    }
    return 0.5 * (lo + hi);
  };
  const double eps = 1e-12;
  for (int j = 0;; ++j) {  // even branches start at j pi
    const double lo = j * M_PI;
    if (lo >= b) break;
    const double hi = std::min(lo + M_PI / 2.0, b) - eps;
    if (hi <= lo + eps) break;
    const double ka = solve(lo + eps, hi, feven);
    energies.push_back(ka * ka / (a * a) - beta * beta);
  }
  for (int j = 0;; ++j) {  // odd branches start at j pi + pi/2
    const double lo = j * M_PI + M_PI / 2.0;
    if (lo >= b) break;
    const double hi = std::min(lo + M_PI / 2.0, b) - eps;
    if (hi <= lo + eps) break;
    const double ka = solve(lo + eps, hi, fodd);
    energies.push_back(ka * ka / (a * a) - beta * beta);
  }
  std::sort(energies.begin(), energies.end());
  return energies;
}

// Dense finite-difference grid: the deltas become single-site wells of depth
// gamma/dx. Eigenvalues below `ceiling` via Sturm-sequence bisection.
struct GridOracle {
  Eigen::VectorXd diag;
  double off2 = 0;
  double floor = 0;

  GridOracle(const georabi::deltawell::DeltaWellPotential& pot, double half_box, int points) {
    const double dx = 2.0 * half_box / (points - 1);
    diag.resize(points);
    for (int i = 0; i < points; ++i) {
      const double x = -half_box + i * dx;
      diag[i] = 2.0 / (dx * dx) + ((std::abs(x) < pot.a) ? -pot.vc() : 0.0);
    }
    diag[static_cast<int>(std::lround((-pot.a + half_box) / dx))] -= pot.gamma_l / dx;
    diag[static_cast<int>(std::lround((pot.a + half_box) / dx))] -= pot.gamma_r / dx;
    off2 = 1.0 / (dx * dx) / (dx * dx);
    floor = -1.2 * std::pow(pot.beta + pot.gamma_l / 2.0, 2);
  }

  int count_below(double x) const {
    int count = 0;
    double d = diag[0] - x;
    if (d < 0) ++count;
    for (Eigen::Index i = 1; i < diag.size(); ++i) {
      d = diag[i] - x - off2 / (d == 0.0 ? 1e-300 : d);
      if (d < 0) ++count;
    }
    return count;
  }

  std::vector<double> eigenvalues_below(double ceiling) const {
    const int n = count_below(ceiling);
    std::vector<double> out;
    for (int k = 0; k < n; ++k) {
      double lo = floor, hi = ceiling;
      for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (count_below(mid) >= k + 1)
          hi = mid;
        else
          lo = mid;
      }
      out.push_back(0.5 * (lo + hi));
    }
    return out;
  }
};

inline std::mt19937& rng() {
  static std::mt19937 gen(20240817);
  return gen;
}

inline double uniform(double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  return d(rng());
}

inline Eigen::MatrixXd random_symmetric(int n) {
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = uniform(-1.0, 1.0);
  return 0.5 * (m + m.transpose());
}

}  // namespace oracles
