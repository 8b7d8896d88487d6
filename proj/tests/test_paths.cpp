#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "georabi/paths.hpp"

using namespace georabi;

TEST_CASE("velocity matches finite differences of position for every path kind") {
  auto names2 = make_param_names({"a", "b"});
  auto names3 = make_param_names({"a", "b", "c"});

  Vec center(2), amps(2), phases(2);
  center << 0.3, 0.5;
  amps << 0.05, 0.08;
  phases << -M_PI / 2.0, 0.0;
  HarmonicLoopPath loop(names2, center, amps, phases, 2.5);
  CHECK(velocity_consistency(loop) < 1e-6);

  ArcPath arc(names2, Vec::Zero(2), 1.2, 0.3, 2.6, 4.0);
  CHECK(velocity_consistency(arc) < 1e-6);

  RadialPath spoke(names2, Vec::Zero(2), 0.8, 0.4, 1.9, 2.0);
  CHECK(velocity_consistency(spoke) < 1e-6);

  TrackedArcPath tracked(names3, 1.0, 0.0, 2.0 * M_PI, 10.0);
  CHECK(velocity_consistency(tracked) < 1e-6);

  std::vector<double> times{0.0, 1.0, 2.5, 4.0};
  std::vector<Vec> pts;
  for (double t : times) {
    Vec v(2);
    v << std::sin(t), 0.2 * t * t;
    pts.push_back(v);
  }
  SplinePath spline(names2, times, pts);
  CHECK(velocity_consistency(spline) < 1e-6);
}

TEST_CASE("cyclic paths close to 1e-10") {
  auto names2 = make_param_names({"a", "b"});
  Vec center(2), amps(2), phases(2);
  center << 0.3, 0.5;
  amps << 0.05, 0.08;
  phases << -M_PI / 2.0, 0.0;
  HarmonicLoopPath loop(names2, center, amps, phases, 2.5);
  REQUIRE(loop.cyclic());
  const double scale = loop.at(0.0).values().norm();
  CHECK((loop.at(0.0).values() - loop.at(loop.period()).values()).norm() <= 1e-10 * scale);

  ArcPath full(names2, Vec::Zero(2), 1.0, 0.2, 0.2 + 2.0 * M_PI, 3.0);
  CHECK(full.cyclic());
  ArcPath partial(names2, Vec::Zero(2), 1.0, 0.2, 1.5, 3.0);
  CHECK(!partial.cyclic());
}

TEST_CASE("tracked arcs are honest about not closing in parameter space") {
  auto names3 = make_param_names({"a", "b", "c"});
  TrackedArcPath tracked(names3, 1.0, 0.0, 2.0 * M_PI, 10.0);
  CHECK(!tracked.cyclic());
  // the projection closes, the carried angle advances by pi
  const Vec start = tracked.at(0.0).values();
  const Vec end = tracked.at(tracked.period()).values();
  CHECK(std::abs(end[0] - start[0]) < 1e-12);
  CHECK(std::abs(end[1] - start[1]) < 1e-12);
  CHECK(end[2] - start[2] == doctest::Approx(M_PI));
}

TEST_CASE("spline interpolates its waypoints; composite requires continuity") {
  auto names2 = make_param_names({"a", "b"});
  std::vector<double> times{0.0, 1.0, 2.0};
  std::vector<Vec> pts{Vec::Zero(2), Vec::Constant(2, 1.0), Vec::Zero(2)};
  SplinePath spline(names2, times, pts);
  CHECK(spline.cyclic());
  for (std::size_t i = 0; i < times.size(); ++i)
    CHECK((spline.at(times[i]).values() - pts[i]).norm() < 1e-12);

  auto a1 = std::make_shared<ArcPath>(names2, Vec::Zero(2), 1.0, 0.0, 1.0, 1.0);
  auto a2 = std::make_shared<ArcPath>(names2, Vec::Zero(2), 1.0, 1.0, 0.0, 1.0);
  CompositePath ok({a1, a2});
  CHECK(ok.cyclic());
  CHECK(ok.breakpoints().size() == 1);

  auto far = std::make_shared<ArcPath>(names2, Vec::Zero(2), 2.0, 1.0, 0.0, 1.0);
  CHECK_THROWS_AS(CompositePath({a1, far}), ModelError);
}
