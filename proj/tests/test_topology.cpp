#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "shrinklab/shrinkers.hpp"
#include "shrinklab/topology.hpp"
#include "support/test_helpers.hpp"

using namespace shrinklab;
using shrinklab::testing::cached_specimen;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("star-shapedness: sphere passes, plane through the origin is the boundary case") {
  const auto sphere = canonical_shrinker(CanonicalKind::sphere, 2, 128);
  const StarShapedReport s = star_shaped_check(sphere);
  CHECK(s.pass);
  CHECK(s.minXdotN == doctest::Approx(2.0).epsilon(1e-9));

  const auto plane = canonical_shrinker(CanonicalKind::plane, 2, 128);
  const StarShapedReport p = star_shaped_check(plane);
  CHECK_FALSE(p.pass); // x.n = 0: the hypothesis is strict
  CHECK(p.minXdotN == doctest::Approx(0.0));
}

TEST_CASE("radial projection of the sphere covers (0, pi) monotonically") {
  const auto sphere = canonical_shrinker(CanonicalKind::sphere, 2, 256);
  Cone dummy;
  dummy.n = 2;
  dummy.linkAngles = {kPi / 2.0};
  const RadialProjectionReport r = radial_projection_check(sphere, dummy, 1.0);
  CHECK(r.monotone);
  CHECK(r.injective);
  CHECK(r.thetaLo == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(r.thetaHi == doctest::Approx(kPi).epsilon(1e-6));
}

TEST_CASE("radial projection preconditions") {
  const auto plane = canonical_shrinker(CanonicalKind::plane, 2, 128);
  Cone cone;
  cone.n = 2;
  cone.linkAngles = {kPi / 2.0};
  CHECK_THROWS(radial_projection_check(plane, cone, 1.0));   // not star-shaped
  const auto sphere = canonical_shrinker(CanonicalKind::sphere, 2, 128);
  CHECK_THROWS(radial_projection_check(sphere, cone, 0.0));  // not disjoint from the cone
}

TEST_CASE("radial projection is equivariant under the axis reflection") {
  const ShootResult& spec = cached_specimen();
  ProfileCurve mirrored = spec.profile;
  for (Vec2& v : mirrored.nodes) v.x = -v.x;
  std::reverse(mirrored.nodes.begin(), mirrored.nodes.end());
  std::swap(mirrored.endA, mirrored.endB);
  orient_outward(mirrored);
  const SurfaceSampleSet a = geometric_data(spec.profile);
  const SurfaceSampleSet b = geometric_data(mirrored);
  // polar angles mirror: theta -> pi - theta
  const double tA = polar_angle(a.curve.front());
  const double tB = polar_angle(b.curve.back());
  CHECK(tA == doctest::Approx(kPi - tB).epsilon(1e-9));
}

TEST_CASE("separation report counts components of the sphere minus the link") {
  Cone one;
  one.n = 2;
  one.linkAngles = {kPi / 4.0};
  const LinkReport r1 = separation_report(one);
  CHECK(r1.components.size() == 2);
  CHECK(r1.linkConnected);
  CHECK(r1.components.front().type == "cap");
  CHECK(r1.components.back().type == "cap");

  Cone two;
  two.n = 2;
  two.linkAngles = {kPi / 4.0, kPi / 2.0};
  const LinkReport r2 = separation_report(two);
  CHECK(r2.components.size() == 3); // the negative control
  CHECK_FALSE(r2.linkConnected);
  CHECK(r2.components[1].type == "band");

  // k circles -> k + 1 components, exactly
  for (int k = 1; k <= 5; ++k) {
    Cone c;
    c.n = 2;
    for (int j = 1; j <= k; ++j) c.linkAngles.push_back(kPi * j / (k + 1.0));
    CHECK(separation_report(c).components.size() == static_cast<std::size_t>(k) + 1);
  }
}

TEST_CASE("pipeline rejects the sphere at the asymptotically-conical precondition") {
  ShootResult sphereShot;
  sphereShot.status = ShootResult::Status::ok;
  sphereShot.profile = canonical_profile(CanonicalKind::sphere, 1024);
  sphereShot.residual = shrinker_residual(geometric_data(sphereShot.profile)).maxAbs;
  sphereShot.coneFit.hasCone = false;
  sphereShot.coneFit.diagnostic = "closed surface";
  const PipelineReport rep = theorem_pipeline(sphereShot);
  CHECK_FALSE(rep.pass);
  CHECK(rep.failedStage == "asymptotically-conical");
}

TEST_CASE("pipeline rejects a rescaled specimen at the residual precondition") {
  const ShootResult& spec = cached_specimen();
  ShootResult scaled = spec;
  for (Vec2& v : scaled.profile.nodes) v = v * 2.0;
  scaled.profile.endB.truncationRadius *= 2.0;
  const PipelineReport rep = theorem_pipeline(scaled);
  CHECK_FALSE(rep.pass);
  CHECK(rep.failedStage == "residual");
}

TEST_CASE("pipeline on the reference specimen: honest rejection, pinpointed stage") {
  // Every conical root of the rotationally symmetric shooting problem is an
  // immersed profile, so the embeddedness precondition of the small-entropy
  // mechanism fails (and its Gaussian area exceeds the cylinder value). The
  // pipeline must pinpoint that stage rather than silently downgrade.
  const PipelineReport rep = theorem_pipeline(cached_specimen());
  CHECK_FALSE(rep.pass);
  CHECK(rep.failedStage == "embedded");
  bool sawResidualPass = false, sawConicalPass = false;
  for (const PipelineStage& s : rep.stages) {
    if (s.name == "residual") sawResidualPass = s.pass;
    if (s.name == "asymptotically-conical") sawConicalPass = s.pass;
  }
  CHECK(sawResidualPass);
  CHECK(sawConicalPass);
}
