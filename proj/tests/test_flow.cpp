#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "shrinklab/flow.hpp"
#include "shrinklab/gaussian.hpp"
#include "shrinklab/shrinkers.hpp"
#include "support/test_helpers.hpp"

using namespace shrinklab;

namespace {
constexpr double kPi = std::numbers::pi;

// r(t) = sqrt(r0^2 - 2n(t+1)), the exact radius law from t = -1.
double radius_law(double r0, int n, double t) {
  return std::sqrt(r0 * r0 - 2.0 * n * (t + 1.0));
}
} // namespace

TEST_CASE("circle flow matches the exact radius law") {
  const auto circle = canonical_shrinker(CanonicalKind::circle, 1, 512);
  const FlowTrace tr = flow_run(circle, -0.25, {});
  CHECK(tr.status == FlowTrace::Status::reachedHorizon);
  const double want = radius_law(std::sqrt(2.0), 1, -0.25); // = sqrt(0.5)
  double worst = 0.0;
  for (const Vec2& v : tr.surfaces.back().curve) worst = std::max(worst, std::abs(v.norm() - want));
  CHECK(worst / want <= 1e-3);
  // spot value from the closed form: r(-0.5) = 1
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    if (std::abs(tr.times[k] + 0.5) < 1e-9) {
      CHECK(tr.surfaces[k].curve[0].norm() == doctest::Approx(1.0).epsilon(1e-3));
    }
  }
}

TEST_CASE("sphere flow matches the exact radius law") {
  const auto sphere = canonical_shrinker(CanonicalKind::sphere, 2, 384);
  const FlowTrace tr = flow_run(sphere, -0.25, {});
  const double want = radius_law(2.0, 2, -0.25); // = 1
  double worst = 0.0;
  for (const Vec2& v : tr.surfaces.back().curve) worst = std::max(worst, std::abs(v.norm() - want));
  CHECK(worst / want <= 1e-3);
}

TEST_CASE("flow accuracy improves at first order in dt") {
  std::vector<double> dts, errs;
  for (double dtMax : {2e-4, 1e-4}) {
    FlowController c;
    c.dtMax = dtMax;
    c.dtSafety = 10.0; // let dtMax control the step
    const auto circle = canonical_shrinker(CanonicalKind::circle, 1, 768);
    const FlowTrace tr = flow_run(circle, -0.5, c);
    const double want = radius_law(std::sqrt(2.0), 1, -0.5);
    errs.push_back(std::abs(tr.surfaces.back().curve[0].norm() - want) + 1e-12);
    dts.push_back(dtMax);
  }
  CHECK(shrinklab::testing::fitted_order(dts, errs) >= 0.9);
}

TEST_CASE("the plane is a fixed point") {
  const auto plane = canonical_shrinker(CanonicalKind::plane, 2, 256, 8.0);
  FlowController c;
  c.saveInterval = 1.0;
  const FlowTrace tr = flow_run(plane, 5.0, c);
  CHECK(tr.status == FlowTrace::Status::reachedHorizon);
  double moved = 0.0;
  for (std::size_t i = 0; i < plane.size(); ++i) {
    moved = std::max(moved, std::abs(tr.surfaces.back().curve[i].x));
  }
  CHECK(moved <= 1e-9);
}

TEST_CASE("steps beyond the stability bound are rejected with a suggestion") {
  const auto circle = canonical_shrinker(CanonicalKind::circle, 1, 128);
  try {
    flow_step(circle, 1.0);
    FAIL("expected StepRejected");
  } catch (const StepRejected& e) {
    CHECK(e.suggestedDt > 0.0);
    CHECK(e.suggestedDt < 1.0);
    CHECK_NOTHROW(flow_step(circle, e.suggestedDt * 0.5));
  }
}

TEST_CASE("sphere flow to extinction is flagged singular at the right point") {
  const auto sphere = canonical_shrinker(CanonicalKind::sphere, 2, 384);
  const FlowTrace tr = flow_run(sphere, 0.0, {});
  CHECK(tr.status == FlowTrace::Status::singular);
  CHECK(std::abs(tr.singularTimeEst - 0.0) <= 1e-3);
  CHECK(tr.singularCenterEst.norm() <= 1e-2);
  tr.validate(); // singular implies increasing max|A| on the last slices
}

TEST_CASE("parabolic rescaling of the exact self-similar flow") {
  // Build the exact trace: slices are round spheres of radius 2 sqrt(-t).
  FlowTrace tr;
  for (double t : {-1.0, -0.64, -0.36, -0.16}) {
    ProfileCurve p = canonical_profile(CanonicalKind::sphere, 384);
    for (Vec2& v : p.nodes) v = v * std::sqrt(-t);
    tr.times.push_back(t);
    tr.surfaces.push_back(geometric_data(p));
  }
  tr.status = FlowTrace::Status::reachedHorizon;
  const auto slices = parabolic_rescale(tr, {{}, 0.0});
  REQUIRE(slices.size() == 4);
  for (const auto& s : slices) {
    CHECK(s.stationarityDefect <= 1e-6);
    for (double r : s.surface.radius) CHECK(r == doctest::Approx(2.0).epsilon(1e-9));
  }
}

TEST_CASE("rescaled non-round flow converges to the tangent shrinking sphere") {
  // Squashed sphere, off-center on the axis: the flow rounds out, so the
  // rescaled slices approach the radius-2 shrinker and the stationarity
  // defect decays.
  ProfileCurve p;
  const int n = 384;
  for (int i = 0; i < n; ++i) {
    const double a = M_PI * i / (n - 1);
    const double rho = 1.7 * (1.0 + 0.06 * std::cos(2.0 * a));
    p.nodes.push_back({rho * std::cos(a) + 0.75, rho * std::sin(a)});
  }
  p.nodes.front().y = 0.0;
  p.nodes.back().y = 0.0;
  p.endA = EndCondition::axis();
  p.endB = EndCondition::axis();
  const FlowTrace tr = flow_run(geometric_data(resample(p, 384)), 0.0, {});
  REQUIRE(tr.status == FlowTrace::Status::singular);
  CHECK(std::abs(tr.singularCenterEst.x - 0.75) < 0.05);
  // Keep the slices safely before the estimated singular time: the very last
  // ones lag the exact law at first order in dt. (exp(-s) = t0 - t.)
  auto slices = parabolic_rescale(tr, {tr.singularCenterEst, tr.singularTimeEst});
  while (!slices.empty() && std::exp(-slices.back().s) < 0.02) slices.pop_back();
  REQUIRE(slices.size() >= 3);
  CHECK(slices.back().stationarityDefect < 0.15 * slices.front().stationarityDefect);
  CHECK(slices.back().stationarityDefect < 5e-3);
  // the rescaled late slice is the round shrinker within a few digits
  for (double r : slices.back().surface.radius) {
    CHECK(std::abs((slices.back().surface.position[slices.back().surface.size() / 2] -
                    Vec3{0,0,0}).norm() - r) < 3.0); // positions stay bounded
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < slices.back().surface.size(); ++i) {
    const Vec3 rel = slices.back().surface.position[i];
    worst = std::max(worst, std::abs(rel.norm() - 2.0));
  }
  CHECK(worst < 0.05);
}

TEST_CASE("avoidance audit on concentric spheres") {
  ProfileCurve inner = canonical_profile(CanonicalKind::sphere, 256);
  ProfileCurve outer = inner;
  for (Vec2& v : outer.nodes) v = v * 1.5;
  const FlowTrace a = flow_run(geometric_data(inner), -0.05, {});
  const FlowTrace b = flow_run(geometric_data(outer), -0.05, {});
  const AvoidanceReport rep = avoidance_audit(a, b);
  CHECK(rep.initialDistance == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(rep.maxDropFromInitial <= 1e-4);
  CHECK(rep.maxStepDecrease <= 1e-4);
  // the exact law: d(t) = sqrt(9 - 4(t+1)) - sqrt(4 - 4(t+1))
  for (std::size_t k = 0; k < rep.times.size(); ++k) {
    const double t = rep.times[k];
    const double want = radius_law(3.0, 2, t) - radius_law(2.0, 2, t);
    CHECK(rep.distance[k] == doctest::Approx(want).epsilon(2e-3));
  }
  // identical traces are at distance zero
  const AvoidanceReport same = avoidance_audit(a, a);
  for (double d : same.distance) CHECK(d == 0.0);
}

TEST_CASE("containment inside a shrinking sphere barrier") {
  // circle of radius 1 flowed; barrier circle of radius 1.2 shrinks by the law
  const auto small = geometric_data([] {
    PlanarCurve c;
    for (int i = 0; i < 256; ++i) {
      const double a = 2.0 * kPi * i / 256;
      c.nodes.push_back({std::cos(a), std::sin(a)});
    }
    c.closed = true;
    return c;
  }());
  const FlowTrace tr = flow_run(small, -0.60, {});
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    const double barrier = radius_law(1.2, 1, tr.times[k]);
    for (const Vec2& v : tr.surfaces[k].curve) CHECK(v.norm() < barrier);
  }
}

TEST_CASE("reported functionals are stable under reparameterization") {
  const auto a = canonical_shrinker(CanonicalKind::circle, 1, 256);
  PlanarCurve c;
  c.closed = true;
  c.nodes = resample_uniform(a.curve, true, 384);
  const auto b = geometric_data(c);
  const double fa = f_functional(a, {}, 1.0, false).value;
  const double fb = f_functional(b, {}, 1.0, false).value;
  CHECK(std::abs(fa - fb) <= 10.0 * a.h * a.h);
}

TEST_CASE("cone barrier audit on the static plane") {
  FlowTrace tr;
  const auto plane = canonical_shrinker(CanonicalKind::plane, 2, 512, 12.0);
  for (double t : {-1.0, -0.5, 0.0}) {
    tr.times.push_back(t);
    tr.surfaces.push_back(plane);
  }
  tr.status = FlowTrace::Status::reachedHorizon;
  Cone cone;
  cone.n = 2;
  cone.linkAngles = {kPi / 2.0};
  const BarrierReport rep = cone_barrier_audit(tr, cone);
  CHECK(rep.hypothesisOk);
  CHECK(rep.Kprime <= rep.K * 1.05 + 0.05);
  for (double v : rep.worstViolationAtK) CHECK(v <= 1e-9);
}

TEST_CASE("cone barrier audit on the self-similar specimen flow") {
  const ShootResult& spec = shrinklab::testing::cached_specimen();
  FlowTrace tr;
  for (double t : {-1.0, -0.49, -0.25}) {
    ProfileCurve p = spec.profile;
    for (Vec2& v : p.nodes) v = v * std::sqrt(-t);
    if (p.endB.kind == EndCondition::Kind::cone) p.endB.truncationRadius *= std::sqrt(-t);
    tr.times.push_back(t);
    tr.surfaces.push_back(geometric_data(p));
  }
  tr.status = FlowTrace::Status::reachedHorizon;
  const BarrierReport rep = cone_barrier_audit(tr, spec.coneFit.cone);
  CHECK(rep.hypothesisOk);
  CHECK(rep.Kprime < 50.0);
}

TEST_CASE("trace round trip through the filesystem") {
  const auto circle = canonical_shrinker(CanonicalKind::circle, 1, 128);
  FlowController c;
  c.saveInterval = 0.1;
  const FlowTrace tr = flow_run(circle, -0.7, c);
  const auto dir = std::filesystem::temp_directory_path() / "shrinklab-trace-test";
  write_trace(dir.string(), tr);
  const FlowTrace back = read_trace(dir.string());
  REQUIRE(back.times.size() == tr.times.size());
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    CHECK(back.times[k] == tr.times[k]);
    CHECK(back.surfaces[k].size() == tr.surfaces[k].size());
  }
  std::filesystem::remove_all(dir);
}
