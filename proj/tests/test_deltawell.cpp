#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "georabi/deltawell.hpp"
#include "georabi/dynamics.hpp"
#include "oracles.hpp"

using namespace georabi;
namespace dw = georabi::deltawell;
namespace dyn = georabi::dynamics;

namespace {

dw::DeltaWellPotential random_potential() {
  dw::DeltaWellPotential pot;
  pot.a = oracles::uniform(6.0, 50.0);
  pot.gamma_l = oracles::uniform(0.3, 1.2);
  pot.gamma_r = oracles::uniform(0.15, pot.gamma_l / 1.05);
  pot.beta = oracles::uniform(0.0, 0.35);
  return pot;
}

}  // namespace

TEST_CASE("single delta limit: E = -gamma^2/4, decay kappa = gamma/2") {
  dw::DeltaWellPotential pot{44.0, 1.0, 1e-9, 0.0};
  const auto states = dw::bound_spectrum(pot);
  REQUIRE(states.size() == 1);
  CHECK(std::abs(states[0].energy + 0.25) < 1e-12);
  CHECK(std::abs(states[0].kappa - 0.5) < 1e-12);
  CHECK(states[0].interior == dw::BoundState::Character::evanescent);
}

TEST_CASE("pure square well reproduces the transcendental spectrum") {
  const double a = 44.0, beta = 7.8 / 44.0;
  dw::DeltaWellPotential pot{a, 1e-12, 1e-12, beta};
  const auto states = dw::bound_spectrum(pot);
  const auto expect = oracles::square_well_energies(a, beta);
  REQUIRE(expect.size() == 5);  // floor(2 a beta / pi) + 1
  REQUIRE(states.size() == expect.size());
  for (std::size_t k = 0; k < expect.size(); ++k)
    CHECK(std::abs(states[k].energy - expect[k]) < 1e-9 * std::abs(expect[k]));
}

TEST_CASE("paper configuration: two localized states plus several extended") {
  const auto pot = dw::fig2_potential();
  CHECK(pot.a == doctest::Approx(44.0));
  CHECK(pot.gamma_r == doctest::Approx(22.0 / 44.0));
  CHECK(pot.beta == doctest::Approx(7.8 / 44.0));
  const auto states = dw::bound_spectrum(pot);
  REQUIRE(states.size() >= 4);
  const auto c0 = dw::classify(states[0], pot);
  const auto c1 = dw::classify(states[1], pot);
  CHECK(c0.label == dw::StateLabel::localized_left);
  CHECK(c1.label == dw::StateLabel::localized_right);
  CHECK(states[0].energy < states[1].energy);  // gamma_l > gamma_r
  int extended = 0;
  for (std::size_t k = 2; k < states.size(); ++k)
    if (dw::classify(states[k], pot).label == dw::StateLabel::extended) ++extended;
  CHECK(extended == static_cast<int>(states.size()) - 2);
  CHECK(extended >= 3);
  // dense-grid oracle agreement
  const oracles::GridOracle grid(pot, 8.0 * pot.a, 65537);
  const auto ge = grid.eigenvalues_below(-1e-6);
  REQUIRE(ge.size() == states.size());
  for (std::size_t k = 0; k < ge.size(); ++k)
    CHECK(std::abs(ge[k] - states[k].energy) < 1e-3 * std::abs(states[k].energy));
}

TEST_CASE("matching and normalization invariants on randomized potentials") {
  int oscillatory = 0, evanescent = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto pot = random_potential();
    std::vector<dw::BoundState> states;
    try {
      states = dw::bound_spectrum(pot);
    } catch (const ResolutionError&) {
      continue;
    }
    for (const auto& s : states) {
      CHECK(s.energy < 0);
      CHECK(s.kappa > 0);  // decaying exterior tails
      CHECK(s.continuity_residual() < 1e-8);
      CHECK(s.jump_residual(pot) < 1e-8);
      CHECK(std::abs(dw::pair_integral(s, s, 0) - 1.0) < 1e-8);
      (s.interior == dw::BoundState::Character::oscillatory ? oscillatory : evanescent) += 1;
    }
    for (std::size_t i = 0; i < states.size(); ++i)
      for (std::size_t j = i + 1; j < states.size(); ++j)
        CHECK(std::abs(dw::overlap(states[i], states[j])) < 1e-7);
  }
  CHECK(oscillatory > 0);
  CHECK(evanescent > 0);
}

TEST_CASE("grid-oracle agreement on randomized potentials") {
  for (int trial = 0; trial < 5; ++trial) {
    const auto pot = random_potential();
    const auto states = dw::bound_spectrum(pot);
    const double half_box = std::max(4.0 * pot.a, pot.a + 60.0);
    const oracles::GridOracle grid(pot, half_box, 32769);
    const auto ge = grid.eigenvalues_below(-1e-6);
    // compare states bound by more than 1e-2 (weakly bound ones feel the box)
    std::size_t k = 0;
    for (const auto& s : states) {
      if (s.energy > -1e-2) break;
      REQUIRE(k < ge.size());
      CHECK(std::abs(ge[k] - s.energy) < 1e-3 * std::abs(s.energy));
      ++k;
    }
  }
}

TEST_CASE("classification limits") {
  {  // isolated delta: everything at the left spike
    dw::DeltaWellPotential pot{44.0, 1.0, 1e-9, 0.0};
    const auto states = dw::bound_spectrum(pot);
    const auto c = dw::classify(states[0], pot);
    CHECK(c.label == dw::StateLabel::localized_left);
    CHECK(c.weight_left > 0.99);
    CHECK(c.weight_left + c.weight_right + c.weight_center <= 1.0 + 1e-12);
  }
  {  // square well with negligible deltas: ground state is extended
    dw::DeltaWellPotential pot{44.0, 1e-12, 1e-12, 7.8 / 44.0};
    const auto states = dw::bound_spectrum(pot);
    CHECK(dw::classify(states[0], pot).label == dw::StateLabel::extended);
  }
}

TEST_CASE("position elements: parity, smallness, quadrature oracle") {
  {  // symmetric potential: definite parity forces <x>_nn = 0
    dw::DeltaWellPotential pot{10.0, 0.5, 0.5, 0.1};
    const auto states = dw::bound_spectrum(pot);
    REQUIRE(states.size() >= 2);
    for (const auto& s : states) CHECK(std::abs(dw::position_element(s, s)) < 1e-9);
  }
  {  // paper configuration: the localized pair is effectively uncoupled.
    // The true ratio is ~3e-7: the right state keeps e^{-2 q a} ~ 5e-9 of
    // amplitude at the left delta, which the x weight turns into ~1e-8.
    const auto pot = dw::fig2_potential();
    const auto states = dw::bound_spectrum(pot);
    const double xlr = dw::position_element(states[0], states[1]);
    const double xlc = dw::position_element(states[0], states[2]);
    CHECK(std::abs(xlr / xlc) < 1e-6);
    CHECK(std::abs(dw::overlap(states[0], states[1])) < 1e-12);
    // independent pointwise quadrature agrees on the tiny element
    auto integrand = [&](double x) { return states[0].value(x) * x * states[1].value(x); };
    double numeric = 0.0;
    for (int c = 0; c < 24; ++c)
      numeric += oracles::quad(integrand, -pot.a + 2.0 * pot.a * c / 24.0,
                               -pot.a + 2.0 * pot.a * (c + 1) / 24.0, 1e-16);
    numeric += oracles::quad(integrand, -pot.a - 80.0, -pot.a, 1e-16);
    numeric += oracles::quad(integrand, pot.a, pot.a + 80.0, 1e-16);
    CHECK(xlr == doctest::Approx(numeric).epsilon(1e-4));
  }
  {  // closed forms against pointwise quadrature
    dw::DeltaWellPotential pot{12.0, 0.8, 0.5, 0.2};
    const auto states = dw::bound_spectrum(pot);
    REQUIRE(states.size() >= 3);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = i; j < 3; ++j) {
        const double analytic = dw::position_element(states[i], states[j]);
        const double span =
            pot.a + 40.0 / std::min(states[i].kappa, states[j].kappa);
        auto integrand = [&](double x) {
          return states[i].value(x) * x * states[j].value(x);
        };
        // piecewise so the adaptive rule cannot step over the localized bump
        double numeric = oracles::quad(integrand, -span, -pot.a, 1e-14) +
                         oracles::quad(integrand, pot.a, span, 1e-14);
        const int chunks = 16;
        for (int c = 0; c < chunks; ++c)
          numeric += oracles::quad(integrand, -pot.a + 2.0 * pot.a * c / chunks,
                                   -pot.a + 2.0 * pot.a * (c + 1) / chunks, 1e-14);
        CHECK(std::abs(analytic - numeric) <=
              1e-9 * std::max({std::abs(analytic), std::abs(numeric), 1e-3}));
        const double swapped = dw::position_element(states[j], states[i]);
        CHECK(std::abs(analytic - swapped) <=
              1e-14 * std::max(std::abs(analytic), 1e-6));  // symmetry
      }
  }
}

TEST_CASE("deepening the right delta lowers the right-localized energy") {
  auto pot = dw::fig2_potential();
  const auto before = dw::bound_spectrum(pot);
  pot.gamma_r = 0.55;
  const auto after = dw::bound_spectrum(pot);
  CHECK(after[1].energy < before[1].energy);
}

TEST_CASE("as_model: static path gives zero coupling and zero angle") {
  const auto pot = dw::fig2_potential();
  auto names = make_param_names({"eps_c", "eps_r"});
  Vec base(2);
  base << pot.vc(), pot.gamma_r * pot.gamma_r;
  StaticPath path(ParamVector(names, base), 100.0);
  auto model = dw::as_model(pot, path);
  CHECK(std::abs(dyn::effective_kappa(*model, path.at(0.0), path.velocity(0.0), 1.0)) == 0.0);
  const auto g = dyn::gamma_line(*model, path, 1.0);
  CHECK(g.value == 0.0);
}

TEST_CASE("as_model on the paper path: real kappa, positive angle, stable truncation") {
  const auto pot = dw::fig2_potential();
  const auto path = dw::fig2_path(pot, -9.338e-4);
  auto model = dw::as_model(pot, *path);
  CHECK(model->dimension() >= 4);
  const double famp = 2e-3;

  dyn::FrameTrack track(*model, *path, 64, 1);
  double im_max = 0.0, abs_max = 0.0;
  for (int i = 0; i < track.node_count(); ++i) {
    const cplx k = track.kappa_at(track.node_time(i), famp);
    im_max = std::max(im_max, std::abs(k.imag()));
    abs_max = std::max(abs_max, std::abs(k));
  }
  CHECK(abs_max > 0.0);
  CHECK(im_max <= 1e-9 * abs_max);

  const double g99 = dyn::gamma_line(*model, *path, famp).value;
  CHECK(g99 > 0.0);

  auto model999 = dw::as_model(pot, *path, 0.999);
  const double g999 = dyn::gamma_line(*model999, *path, famp).value;
  CHECK(std::abs(g99 - g999) <= 0.01 * std::abs(g999));

  // aggressive truncation drops auxiliaries; the angle keeps sign and order
  auto model_low = dw::as_model(pot, *path, 0.5);
  CHECK(model_low->dimension() < model999->dimension());
  const double glow = dyn::gamma_line(*model_low, *path, famp).value;
  CHECK(glow > 0.0);
  CHECK(std::abs(glow - g999) <= std::abs(g999));
}

TEST_CASE("as_model rejects paths that delocalize the tracked states") {
  const auto pot = dw::fig2_potential();
  // Large eps_r swing drives gamma_r toward zero: the right state merges
  // into the extended band somewhere on the path.
  const auto path = dw::fig2_path(pot, -9.338e-4, 1.03, 0.024);
  CHECK_THROWS_AS(dw::as_model(pot, *path), ModelError);
}

TEST_CASE("as_model rejects symmetric potentials (no left/right identity)") {
  dw::DeltaWellPotential pot{20.0, 0.8, 0.8, 0.1};
  auto names = make_param_names({"eps_c", "eps_r"});
  Vec base(2);
  base << pot.vc(), pot.gamma_r * pot.gamma_r;
  StaticPath path(ParamVector(names, base), 1.0);
  CHECK_THROWS_AS(dw::as_model(pot, path), ModelError);
}

TEST_CASE("angle per cycle is linear in the drive amplitude") {
  const auto pot = dw::fig2_potential();
  const auto path = dw::fig2_path(pot, -9.338e-4);
  auto model = dw::as_model(pot, *path);
  const double g1 = dyn::gamma_line(*model, *path, 2e-4).value;
  const double g2 = dyn::gamma_line(*model, *path, 2e-3).value;
  CHECK(std::abs(g2 - 10.0 * g1) <= 1e-9 * std::abs(g2));
}
