// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Tolerances are pinned here, next to each check.
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "georabi/deltawell.hpp"
#include "georabi/dynamics.hpp"
#include "georabi/lambda_system.hpp"
#include "oracles.hpp"

using namespace georabi;
namespace dw = georabi::deltawell;
namespace dyn = georabi::dynamics;
namespace ls = georabi::lambda_sys;
using clk = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
  std::printf("criterion %2d: %s  %s\n", criterion, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

double seconds_since(clk::time_point t0) {
  return std::chrono::duration<double>(clk::now() - t0).count();
}

std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof(buf), format, args);
  va_end(args);
  return buf;
}

// Interpolate a recorded population column onto a common time grid.
std::vector<double> resample(const dyn::EvolutionRecord& rec, int column, int points,
                             double t_max) {
  std::vector<double> out;
  std::size_t j = 0;
  for (int k = 0; k <= points; ++k) {
    const double t = t_max * k / points;
    while (j + 1 < rec.times.size() && rec.times[j + 1] < t) ++j;
    const std::size_t j1 = std::min(j + 1, rec.times.size() - 1);
    const double t0 = rec.times[j], t1 = rec.times[j1];
    const double w = t1 > t0 ? (t - t0) / (t1 - t0) : 0.0;
    out.push_back((1.0 - w) * rec.populations[j][column] + w * rec.populations[j1][column]);
  }
  return out;
}

const dw::DeltaWellPotential kFig2 = dw::fig2_potential();
constexpr double kFig2Omega = -9.338e-4;  // traversal rate of the depth ellipse
constexpr double kFig2Amplitude = 2e-3;   // drive amplitude F

struct LambdaSetup {
  ls::LambdaParams params;
  std::shared_ptr<TrackedArcPath> circle;
  std::unique_ptr<MatrixModel> model;
};

LambdaSetup make_lambda(double field, double omega, double radius = 1.0) {
  LambdaSetup s;
  s.params.E_g = 0.0;
  s.params.E_e = 25.0;
  s.params.d = 1.0;
  s.params.field = field;
  s.circle = ls::circle_schedule(radius, omega);
  s.model = ls::to_generic(s.params, radius);
  return s;
}

void criterion1() {
  const auto t0 = clk::now();
  bool pass = true;
  std::string detail;
  try {
    const auto states = dw::bound_spectrum(kFig2);
    int localized = 0;
    for (const auto& s : states)
      if (dw::classify(s, kFig2).label != dw::StateLabel::extended) ++localized;
    const oracles::GridOracle grid(kFig2, 8.0 * kFig2.a, 65537);
    const auto reference = grid.eigenvalues_below(-1e-6);
    double worst = 0.0;
    pass = reference.size() == states.size();
    for (std::size_t k = 0; pass && k < states.size(); ++k)
      worst = std::max(worst, std::abs(reference[k] - states[k].energy) /
                                  std::abs(states[k].energy));
    const double elapsed = seconds_since(t0);
    pass = pass && worst <= 1e-3 && localized == 2 && elapsed < 10.0;
    detail = fmt("bound energies vs dense-grid oracle: %zu states, worst rel %.2e (tol 1e-3), "
                 "%d localized (want 2), %.1f s (limit 10)",
                 states.size(), worst, localized, elapsed);
  } catch (const std::exception& e) {
    pass = false;
    detail = e.what();
  }
  report(1, pass, detail);
}

void criterion2() {
  const auto t0 = clk::now();
  bool pass = true;
  std::string detail;
  try {
    dw::DeltaWellPotential pot{44.0, 1.0, 1e-9, 0.0};
    const auto states = dw::bound_spectrum(pot);
    const double e_err = states.empty() ? 1.0 : std::abs(states[0].energy + 0.25);
    const double k_err = states.empty() ? 1.0 : std::abs(states[0].kappa - 0.5);
    const double elapsed = seconds_since(t0);
    pass = states.size() == 1 && e_err <= 1e-10 && k_err <= 1e-10 && elapsed < 1.0;
    detail = fmt("single delta: |E + gamma^2/4| = %.2e, |kappa - gamma/2| = %.2e (tol 1e-10), "
                 "%.2f s (limit 1)",
                 e_err, k_err, elapsed);
  } catch (const std::exception& e) {
    pass = false;
    detail = e.what();
  }
  report(2, pass, detail);
}

void criterion3() {
  const auto t0 = clk::now();
  bool pass = true;
  std::string detail;
  try {
    const double g = 2e-4, omega = 1.0;
    auto names = make_param_names({"p0"});
    MatrixModel model(
        2, names, [](const ParamVector&) { return (Mat(2, 2) << 0, 0, 0, 1).finished(); },
        [g](const ParamVector&) { return (Mat(2, 2) << 0, g, g, 0).finished(); },
        RoleMap{0, 1, {}});
    StaticPath path(ParamVector(names, Vec::Zero(1)), 3.0 * M_PI / g);  // 3 Rabi periods
    CVec psi0 = CVec::Zero(2);
    psi0[0] = 1.0;
    const auto rec =
        dyn::evolve_full(model, path, dyn::DriveSchedule::fixed(1.0, omega), psi0, {}, 1);
    double worst = 0.0;
    for (std::size_t i = 0; i < rec.times.size(); ++i)
      worst = std::max(worst,
                       std::abs(rec.populations[i][1] - std::pow(std::sin(g * rec.times[i]), 2)));
    const double elapsed = seconds_since(t0);
    pass = worst <= 1e-3 && elapsed < 5.0;
    detail = fmt("resonant Rabi oracle over 3 periods: worst |P2 - sin^2(gt)| = %.2e (tol 1e-3), "
                 "%.1f s (limit 5)",
                 worst, elapsed);
  } catch (const std::exception& e) {
    pass = false;
    detail = e.what();
  }
  report(3, pass, detail);
}

void criterion4() {
  const auto t0 = clk::now();
  bool pass = true;
  std::string detail;
  try {
    const auto path = dw::fig2_path(kFig2, kFig2Omega);
    auto model = dw::as_model(kFig2, *path);
    const auto drive = dyn::DriveSchedule::tracked(kFig2Amplitude);
    const auto rep = dyn::adiabaticity_report(*model, *path, drive, kFig2Amplitude, 32);
    const bool flags_ok = rep.flag() == dyn::ValidityFlag::ok;

    CVec psi0 = CVec::Zero(model->dimension());
    psi0[0] = 1.0;
    const auto full = dyn::evolve_full(*model, *path, drive, psi0, {}, 1);
    const auto rwa = dyn::evolve_rwa(*model, *path, drive, {1.0, 0.0}, {}, 1);
    const auto geo = dyn::evolve_geometric(*model, *path, kFig2Amplitude, {1.0, 0.0}, {}, 1);

    const double T = path->period();
    const auto roles = model->roles();
    double full_vs_rwa = 0.0, rwa_vs_geo = 0.0;
    for (int pair = 0; pair < 2; ++pair) {
      const int role_col = pair == 0 ? roles.state0 : roles.state2;
      const auto a = resample(full, role_col, 256, T);
      const auto b = resample(rwa, pair, 256, T);
      const auto c = resample(geo, pair, 256, T);
      for (std::size_t i = 0; i < a.size(); ++i) {
        full_vs_rwa = std::max(full_vs_rwa, std::abs(a[i] - b[i]));
        rwa_vs_geo = std::max(rwa_vs_geo, std::abs(b[i] - c[i]));
      }
    }
    const double elapsed = seconds_since(t0);
    pass = flags_ok && full_vs_rwa <= 0.05 && rwa_vs_geo <= 0.01 && elapsed < 120.0;
    detail = fmt("fig2 one cycle (flags %s): |full - rwa| = %.2e (tol 0.05), |rwa - geometric| = "
                 "%.2e (tol 0.01), %.1f s (limit 120)",
                 flags_ok ? "ok" : "NOT ok", full_vs_rwa, rwa_vs_geo, elapsed);
  } catch (const std::exception& e) {
    pass = false;
    detail = e.what();
  }
  report(4, pass, detail);
}

void criterion5() {
  bool pass = true;
  std::string detail;
  try {
    auto path1 = dw::fig2_path(kFig2, kFig2Omega);
    auto path2 = dw::fig2_path(kFig2, kFig2Omega / 2.0);
    auto path4 = dw::fig2_path(kFig2, kFig2Omega / 4.0);
    auto model = dw::as_model(kFig2, *path1);

    const double g1 = dyn::gamma_line(*model, *path1, kFig2Amplitude).value;
    const double g2 = dyn::gamma_line(*model, *path2, kFig2Amplitude).value;
    const double g4 = dyn::gamma_line(*model, *path4, kFig2Amplitude).value;
    const double gamma_dev =
        std::max(std::abs(g2 - g1), std::abs(g4 - g1)) / std::abs(g1);

    const auto geo1 = dyn::evolve_geometric(*model, *path1, kFig2Amplitude, {1.0, 0.0}, {}, 1);
    const auto geo2 = dyn::evolve_geometric(*model, *path2, kFig2Amplitude, {1.0, 0.0}, {}, 1);
    const auto geo4 = dyn::evolve_geometric(*model, *path4, kFig2Amplitude, {1.0, 0.0}, {}, 1);
    double pop_dev = 0.0;
    for (int c = 0; c < 2; ++c) {
      pop_dev = std::max(pop_dev, std::abs(geo2.populations.back()[c] -
                                           geo1.populations.back()[c]));
      pop_dev = std::max(pop_dev, std::abs(geo4.populations.back()[c] -
                                           geo1.populations.back()[c]));
    }

    const auto drive = dyn::DriveSchedule::tracked(kFig2Amplitude);
    CVec psi0 = CVec::Zero(model->dimension());
    psi0[0] = 1.0;
    const auto full1 = dyn::evolve_full(*model, *path1, drive, psi0, {}, 1);
    const auto full2 = dyn::evolve_full(*model, *path2, drive, psi0, {}, 1);
    double full_dev = 0.0;
    const auto roles = model->roles();
    for (int role : {roles.state0, roles.state2})
      full_dev = std::max(full_dev, std::abs(full1.populations.back()[role] -
                                             full2.populations.back()[role]));

    pass = gamma_dev <= 1e-6 && pop_dev <= 1e-6 && full_dev <= 0.01;
    detail = fmt("traversal-speed invariance: Gamma rel dev %.2e (tol 1e-6), geometric pop dev "
                 "%.2e (tol 1e-6), full-sim pop dev %.2e (tol 0.01)",
                 gamma_dev, pop_dev, full_dev);
  } catch (const std::exception& e) {
    pass = false;
    detail = e.what();
  }
  report(5, pass, detail);
}

void criterion6() {
  const auto t0 = clk::now();
  bool pass = true;
  std::string detail;
  try {
    // Tuned path: rotation per cycle large enough that N*Gamma reaches pi/2
    // within seconds of simulated drive, flags still "ok".
    auto setup = make_lambda(0.0144, 0.096);
    const auto drive = dyn::DriveSchedule::tracked(setup.params.field);
    const auto rep =
        dyn::adiabaticity_report(*setup.model, *setup.circle, drive, setup.params.field, 32);
    dyn::StepControl fine;
    fine.frames_per_cycle = 800;
    fine.geometric_segments = 16384;
    const double gamma =
        dyn::gamma_line(*setup.model, *setup.circle, setup.params.field, fine, 1e-12).value;
    int n_best = 1;
    double miss = 1e300;
    for (int n = 1; n <= 400; ++n) {
      const double m = std::abs(std::abs(n * gamma) - M_PI / 2.0);
      if (m < miss) {
        miss = m;
        n_best = n;
      }
    }
    const auto u = dyn::geometric_cycle_propagator(*setup.model, *setup.circle,
                                                   setup.params.field, fine);
    Eigen::Matrix2cd un = Eigen::Matrix2cd::Identity();
    for (int k = 0; k < n_best; ++k) un = u * un;
    const double p2_geo = std::norm(un(1, 0));
    const double p2_expected = std::pow(std::sin(n_best * gamma), 2);

    CVec psi0 = CVec::Zero(3);
    psi0[0] = 1.0;
    const auto full =
        dyn::evolve_full(*setup.model, *setup.circle, drive, psi0, {}, n_best);
    const double transfer = full.populations.back()[2];
    const double elapsed = seconds_since(t0);
    pass = rep.flag() == dyn::ValidityFlag::ok && std::abs(p2_geo - p2_expected) <= 1e-9 &&
           transfer >= 0.9 && elapsed < 300.0;
    detail = fmt("full transfer: N = %d, N*Gamma = %.4f, geometric = sin^2(N Gamma) to %.1e "
                 "(tol 1e-9), full-simulation transfer %.3f (want >= 0.9), %.1f s (limit 300)",
                 n_best, n_best * gamma, std::abs(p2_geo - p2_expected), transfer, elapsed);
  } catch (const std::exception& e) {
    pass = false;
    detail = e.what();
  }
  report(6, pass, detail);
}

void criterion7() {
  bool pass = true;
  std::string detail;
  try {
    const auto path = dw::fig2_path(kFig2, kFig2Omega);
    auto model = dw::as_model(kFig2, *path);
    const double line = dyn::gamma_line(*model, *path, kFig2Amplitude).value;
    const double surface = dyn::gamma_surface(*model, *path, kFig2Amplitude, 16, 32);
    const double rel_fig2 = std::abs(surface - line) / std::abs(line);

    // Lambda-system loop avoiding the origin: annular sector.
    ls::LambdaParams p;
    p.E_g = 0.0;
    p.E_e = 25.0;
    p.d = 1.0;
    p.field = 0.01;
    auto model2 = ls::to_generic_tracked2(p, 1.0);
    auto names = model2->param_names();
    const double r1 = 0.6, r2 = 1.2, th1 = 0.4, th2 = 1.2;
    const Vec origin = Vec::Zero(2);
    CompositePath sector({std::make_shared<ArcPath>(names, origin, r2, th1, th2, 1.0),
                          std::make_shared<RadialPath>(names, origin, th2, r2, r1, 1.0),
                          std::make_shared<ArcPath>(names, origin, r1, th2, th1, 1.0),
                          std::make_shared<RadialPath>(names, origin, th1, r1, r2, 1.0)});
    const double line2 = dyn::gamma_line(*model2, sector, p.field).value;
    const double surf2 = dyn::gamma_surface(*model2, sector, p.field, 24, 48);
    const double rel_sector = std::abs(surf2 - line2) / std::abs(line2);
    const double closed = 0.5 * p.d * p.field * (th2 - th1) * (1.0 / r1 - 1.0 / r2);
    const double rel_closed = std::abs(surf2 - closed) / std::abs(closed);

    pass = rel_fig2 <= 1e-3 && rel_sector <= 1e-3 && rel_closed <= 1e-3;
    detail = fmt("Stokes: fig2 ellipse surface vs line rel %.2e, lambda sector rel %.2e "
                 "(closed form rel %.2e), tol 1e-3",
                 rel_fig2, rel_sector, rel_closed);
  } catch (const std::exception& e) {
    pass = false;
    detail = e.what();
  }
  report(7, pass, detail);
}

void criterion8() {
  bool pass = true;
  std::string detail;
  try {
    double worst_ae = 0.0, worst_gamma = 0.0;
    for (double de : {0.005, 0.01, 0.02}) {
      auto setup = make_lambda(de, 0.05);
      CVec psi0 = CVec::Zero(3);
      psi0[0] = 1.0;
      const auto rec = dyn::evolve_full(*setup.model, *setup.circle,
                                        dyn::DriveSchedule::tracked(de), psi0, {}, 1);
      const double ae = std::sqrt(rec.populations.back()[2]);
      worst_ae = std::max(worst_ae, std::abs(ae - std::abs(std::sin(-M_PI * de))));

      ArcPath projection(ls::lambda_param_names_2(), Vec::Zero(2), 1.0, 0.0, 2.0 * M_PI,
                         setup.circle->period());
      const double analytic = ls::gamma_analytic(projection, de);
      const double line = dyn::gamma_line(*setup.model, *setup.circle, de).value;
      worst_gamma = std::max(worst_gamma, std::abs(line - analytic) / std::abs(analytic));
    }
    pass = worst_ae <= 0.02 && worst_gamma <= 1e-6;
    detail = fmt("lambda closed form: worst | |a_e| - |sin(-pi dE/Lambda)| | = %.2e (tol 0.02), "
                 "analytic vs line integral rel %.2e (tol 1e-6)",
                 worst_ae, worst_gamma);
  } catch (const std::exception& e) {
    pass = false;
    detail = e.what();
  }
  report(8, pass, detail);
}

void criterion9() {
  bool pass = true;
  std::string detail;
  try {
    auto base_path = dw::fig2_path(kFig2, kFig2Omega);
    auto model = dw::as_model(kFig2, *base_path);
    std::vector<double> gammas;
    for (double s : {0.25, 0.5, 0.75, 1.0}) {
      auto path = dw::fig2_path(kFig2, kFig2Omega, 0.037 * s, 0.024 * s);
      gammas.push_back(dyn::gamma_line(*model, *path, kFig2Amplitude).value);
    }
    bool increasing = true;
    for (std::size_t i = 1; i < gammas.size(); ++i)
      increasing = increasing && gammas[i] > gammas[i - 1];

    dyn::FrameTrack track(*model, *base_path, 200, 1);
    double im_max = 0.0, abs_max = 0.0;
    for (int i = 0; i < track.node_count(); ++i) {
      const cplx k = track.kappa_at(track.node_time(i), kFig2Amplitude);
      im_max = std::max(im_max, std::abs(k.imag()));
      abs_max = std::max(abs_max, std::abs(k));
    }
    pass = increasing && im_max <= 1e-9 * abs_max;
    detail = fmt("path scaling: Gamma(s) = {%.3e, %.3e, %.3e, %.3e} %s; Im kappa / max |kappa| = "
                 "%.1e (tol 1e-9)",
                 gammas[0], gammas[1], gammas[2], gammas[3],
                 increasing ? "strictly increasing" : "NOT increasing",
                 abs_max > 0 ? im_max / abs_max : 0.0);
  } catch (const std::exception& e) {
    pass = false;
    detail = e.what();
  }
  report(9, pass, detail);
}

void criterion10() {
  bool pass = true;
  std::string detail;
  try {
    const auto path = dw::fig2_path(kFig2, kFig2Omega);
    auto model = dw::as_model(kFig2, *path);
    const double f0 = 2e-4;
    const double g0 = dyn::gamma_line(*model, *path, f0).value;
    double worst = 0.0;
    for (double factor : {std::sqrt(10.0), 10.0}) {
      const double g = dyn::gamma_line(*model, *path, f0 * factor).value;
      worst = std::max(worst, std::abs(g / factor - g0) / std::abs(g0));
    }
    pass = worst <= 1e-9;
    detail = fmt("linearity in the drive amplitude across a decade: worst rel deviation %.2e "
                 "(tol 1e-9)",
                 worst);
  } catch (const std::exception& e) {
    pass = false;
    detail = e.what();
  }
  report(10, pass, detail);
}

}  // namespace

int main() {
  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criterion5();
  criterion6();
  criterion7();
  criterion8();
  criterion9();
  criterion10();
  if (failures) std::printf("%d criterion(s) FAILED\n", failures);
  else std::printf("all criteria passed\n");
  return failures == 0 ? 0 : 1;
}
