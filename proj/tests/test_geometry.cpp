#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>

#include "shrinklab/geometry.hpp"
#include "shrinklab/shrinkers.hpp"
#include "support/test_helpers.hpp"

using namespace shrinklab;
using shrinklab::testing::brute_force_cone_distance;
using shrinklab::testing::fitted_order;

namespace {
constexpr double kPi = std::numbers::pi;

PlanarCurve make_circle(double radius, int n) {
  PlanarCurve c;
  c.closed = true;
  for (int i = 0; i < n; ++i) {
    const double a = 2.0 * kPi * i / n;
    c.nodes.push_back({radius * std::cos(a), radius * std::sin(a)});
  }
  return c;
}
} // namespace

TEST_CASE("circle curvature matches 1/r with second-order convergence") {
  std::vector<double> hs, errs;
  for (int n : {64, 128, 256, 512}) {
    const SurfaceSampleSet s = geometric_data(make_circle(std::sqrt(2.0), n));
    double worst = 0.0;
    for (double h : s.meanCurv) worst = std::max(worst, std::abs(h - 1.0 / std::sqrt(2.0)));
    hs.push_back(s.h);
    errs.push_back(worst);
    if (n == 256) CHECK(worst < 1e-3);
  }
  CHECK(fitted_order(hs, errs) >= 1.8);
}

TEST_CASE("sphere profile H is 1 everywhere") {
  const SurfaceSampleSet s = geometric_data(canonical_profile(CanonicalKind::sphere, 256));
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(s.meanCurv[i] == doctest::Approx(1.0).epsilon(10.0 * s.h * s.h));
  }
}

TEST_CASE("straight line through origin has H = 0") {
  const SurfaceSampleSet s = geometric_data(canonical_curve(CanonicalKind::line, 64, 5.0));
  for (double h : s.meanCurv) CHECK(h == 0.0);
}

TEST_CASE("convergence order of H and normals on analytic surfaces") {
  // catenoid profile r = cosh(x): a minimal surface, so H = 0 exactly.
  std::vector<double> hs, errH, errN;
  for (int n : {200, 400, 800}) {
    ProfileCurve p;
    for (int i = 0; i <= n; ++i) {
      const double x = -1.5 + 3.0 * i / n;
      p.nodes.push_back({x, std::cosh(x)});
    }
    p.endA = EndCondition::cone(0.0, p.nodes.front().norm());
    p.endB = EndCondition::cone(0.0, p.nodes.back().norm());
    const SurfaceSampleSet s = geometric_data(resample(p, static_cast<std::size_t>(n)));
    double worstH = 0.0, worstN = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      worstH = std::max(worstH, std::abs(s.meanCurv[i]));
      // exact inward normal of the catenoid profile: (sinh x, -1)/cosh x
      const double x = s.curve[i].x;
      Vec2 exact{std::sinh(x) / std::cosh(x), -1.0 / std::cosh(x)};
      if (exact.dot(s.curveNormal[i]) < 0.0) exact = exact * -1.0;
      worstN = std::max(worstN, (exact - s.curveNormal[i]).norm());
    }
    hs.push_back(s.h);
    errH.push_back(worstH);
    errN.push_back(std::max(worstN, 1e-15));
  }
  CHECK(fitted_order(hs, errH) >= 1.8);
  CHECK(fitted_order(hs, errN) >= 1.8);
}

TEST_CASE("normals are orthogonal to tangents") {
  const SurfaceSampleSet s = geometric_data(make_circle(2.0, 256));
  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    const Vec2 t = (s.curve[i + 1] - s.curve[i - 1]).normalized();
    CHECK(std::abs(t.dot(s.curveNormal[i])) < 10.0 * s.h * s.h);
  }
}

TEST_CASE("profile H agrees with the independent embedding Laplacian route") {
  const ProfileCurve p = canonical_profile(CanonicalKind::sphere, 400);
  const SurfaceSampleSet s = geometric_data(p);
  // H_alt = -(Lap_Sigma x) . n computed from the 3D components at the
  // meridian: (x_ss + (r_s/r) x_s, r_ss + (r_s/r) r_s - 1/r).
  std::vector<double> xs(s.size()), rs(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    xs[i] = s.curve[i].x;
    rs[i] = s.curve[i].y;
  }
  const FieldDerivatives dx = field_derivatives(s, xs);
  const FieldDerivatives dr = field_derivatives(s, rs);
  for (std::size_t i = 5; i + 5 < s.size(); ++i) {
    const double rr = s.curve[i].y;
    const double rs1 = s.curveNormal[i].x; // tangent r-component
    const double lapX = dx.d2[i] + rs1 / rr * dx.d1[i];
    const double lapY = dr.d2[i] + rs1 / rr * dr.d1[i] - 1.0 / rr;
    const double hAlt = -(lapX * s.curveNormal[i].x + lapY * s.curveNormal[i].y);
    CHECK(hAlt == doctest::Approx(s.meanCurv[i]).epsilon(30.0 * s.h * s.h));
  }
}

TEST_CASE("shrinker residuals of closed forms") {
  ProfileCurve sphere2 = canonical_profile(CanonicalKind::sphere, 256);
  CHECK(shrinker_residual(canonical_shrinker(CanonicalKind::sphere, 2, 256)).maxAbs < 1e-12);
  CHECK(shrinker_residual(canonical_shrinker(CanonicalKind::cylinder, 2, 256)).maxAbs < 1e-12);

  // sphere of radius 1: H = 2, x.n = 1, residual 3/2 at every node
  ProfileCurve unit = sphere2;
  for (Vec2& v : unit.nodes) v = v * 0.5;
  const ResidualReport rep = shrinker_residual(geometric_data(unit));
  for (double r : rep.perNode) CHECK(r == doctest::Approx(1.5).epsilon(1e-3));
}

TEST_CASE("residual is invariant under rotation of the surface") {
  // n = 1: rotate the polygon rigidly; the reduction is exact for n = 2.
  PlanarCurve c = make_circle(std::sqrt(2.0), 128);
  const double r0 = shrinker_residual(geometric_data(c)).maxAbs;
  const double a = 0.7;
  for (Vec2& v : c.nodes) {
    v = {v.x * std::cos(a) - v.y * std::sin(a), v.x * std::sin(a) + v.y * std::cos(a)};
  }
  const double r1 = shrinker_residual(geometric_data(c)).maxAbs;
  CHECK(r0 == doctest::Approx(r1).epsilon(1e-10));
}

TEST_CASE("distance to cone: closed form against brute force") {
  Cone cone;
  cone.n = 2;
  cone.linkAngles = {kPi / 4.0};
  CHECK(distance_to_cone({1.0, 0.0, 0.0}, cone) == doctest::Approx(std::sqrt(2.0) / 2.0).epsilon(1e-12));
  CHECK(distance_to_cone({1.0, 0.0, 0.0}, cone) ==
        doctest::Approx(brute_force_cone_distance({1.0, 0.0, 0.0}, cone)).epsilon(1e-3));
  // points on the cone
  const Vec3 onCone{2.0 * std::cos(kPi / 4.0), 2.0 * std::sin(kPi / 4.0), 0.0};
  CHECK(distance_to_cone(onCone, cone) < 1e-12);
  // apex
  CHECK(distance_to_cone({0.0, 0.0, 0.0}, cone) == 0.0);
  // a few random probes against the oracle
  for (int k = 0; k < 5; ++k) {
    const Vec3 p{0.3 + 0.9 * k, 0.2 * k, 0.4};
    CHECK(distance_to_cone(p, cone) == doctest::Approx(brute_force_cone_distance(p, cone)).epsilon(2e-3));
  }
  // n = 1 rays
  Cone rays;
  rays.n = 1;
  rays.rayDirections = {{1.0, 0.0}, {-1.0, 0.0}};
  CHECK(distance_to_cone({0.0, 1.0, 0.0}, rays) == doctest::Approx(1.0));
  CHECK(distance_to_cone({3.0, 0.0, 0.0}, rays) == doctest::Approx(0.0));
}

TEST_CASE("tube membership") {
  Cone cone;
  cone.n = 2;
  cone.linkAngles = {kPi / 4.0};
  // the cone itself, sampled as a profile
  ProfileCurve onCone;
  for (int i = 0; i <= 100; ++i) {
    const double rho = 0.2 + 8.0 * i / 100.0;
    onCone.nodes.push_back({rho * std::cos(kPi / 4), rho * std::sin(kPi / 4)});
  }
  onCone.endA = EndCondition::cone(1.0, onCone.nodes.front().norm());
  onCone.endB = EndCondition::cone(1.0, onCone.nodes.back().norm());
  const SurfaceSampleSet coneSample = geometric_data(onCone);
  CHECK(tube_membership(coneSample, cone, 0.01, 0.0).inside);

  // sphere of radius 2 vs any cone with the ball excluding everything
  const SurfaceSampleSet sphere = geometric_data(canonical_profile(CanonicalKind::sphere, 64));
  const TubeReport vac = tube_membership(sphere, cone, 0.01, 10.0);
  CHECK(vac.inside);
  CHECK(vac.checkedNodes == 0);

  // sphere vs narrow tube with no exclusion: fails with a reported offender
  const TubeReport bad = tube_membership(sphere, cone, 0.01, 0.0);
  CHECK_FALSE(bad.inside);
  CHECK(bad.worstViolation > 0.1);
}

TEST_CASE("resample preserves endpoints and interpolates at high order") {
  ProfileCurve p;
  const double k = 0.214;
  for (int i = 0; i <= 500; ++i) {
    const double s = 2e-3 * i;
    p.nodes.push_back({1.0 - 0.5 * k * s * s, s});
  }
  p.endA = EndCondition::axis();
  p.endB = EndCondition::cone(1.0, p.nodes.back().norm());
  const ProfileCurve q = resample(p, 1801);
  CHECK(q.nodes.front().x == p.nodes.front().x);
  CHECK(q.nodes.back().y == p.nodes.back().y);
  for (std::size_t i = 0; i < q.nodes.size(); i += 97) {
    const double r = q.nodes[i].y;
    CHECK(q.nodes[i].x == doctest::Approx(1.0 - 0.5 * k * r * r).epsilon(1e-10));
  }
}

TEST_CASE("surface CSV round trip") {
  const ProfileCurve p = canonical_profile(CanonicalKind::sphere, 64);
  const std::string path = (std::filesystem::temp_directory_path() / "roundtrip.csv").string();
  write_surface_csv(path, p);
  const LoadedSurface s = read_surface_csv(path);
  REQUIRE(s.profile.has_value());
  REQUIRE(s.profile->nodes.size() == p.nodes.size());
  for (std::size_t i = 0; i < p.nodes.size(); ++i) {
    CHECK(s.profile->nodes[i].x == p.nodes[i].x);
    CHECK(s.profile->nodes[i].y == p.nodes[i].y);
  }
  CHECK(s.profile->endA.kind == EndCondition::Kind::axis);
  CHECK(s.profile->endB.kind == EndCondition::Kind::axis);
  std::filesystem::remove(path);
}

TEST_CASE("invalid inputs are rejected") {
  PlanarCurve tiny;
  tiny.nodes = {{0, 0}, {1, 0}, {2, 0}};
  CHECK_THROWS(geometric_data(tiny));

  ProfileCurve interiorAxis = canonical_profile(CanonicalKind::sphere, 64);
  interiorAxis.nodes[30].y = 0.0;
  CHECK_THROWS(geometric_data(interiorAxis));

  PlanarCurve dup = make_circle(1.0, 64);
  dup.nodes[5] = dup.nodes[4];
  CHECK_THROWS(geometric_data(dup));
}

TEST_CASE("polyline simplicity") {
  CHECK(polyline_is_simple(make_circle(1.0, 64).nodes, true));
  std::vector<Vec2> eight;
  for (int i = 0; i < 64; ++i) {
    const double t = 2.0 * kPi * i / 64;
    eight.push_back({std::sin(2 * t), std::sin(t)});
  }
  CHECK_FALSE(polyline_is_simple(eight, true));
}

TEST_CASE("surface distance between concentric circles") {
  const SurfaceSampleSet a = geometric_data(make_circle(1.0, 128));
  const SurfaceSampleSet b = geometric_data(make_circle(2.5, 128));
  CHECK(surface_distance(a, b) == doctest::Approx(1.5).epsilon(1e-3));
}

TEST_CASE("weights reproduce total measure") {
  const SurfaceSampleSet sphere = geometric_data(canonical_profile(CanonicalKind::sphere, 512));
  CHECK(sphere.totalMeasure() == doctest::Approx(16.0 * kPi).epsilon(1e-5));
  const SurfaceSampleSet circle = geometric_data(make_circle(std::sqrt(2.0), 512));
  CHECK(circle.totalMeasure() == doctest::Approx(2.0 * kPi * std::sqrt(2.0)).epsilon(1e-4));
}
