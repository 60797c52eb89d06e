#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "shrinklab/flow.hpp"
#include "shrinklab/gaussian.hpp"
#include "shrinklab/shrinkers.hpp"
#include "support/test_helpers.hpp"

using namespace shrinklab;

namespace {
constexpr double kPi = std::numbers::pi;
const double kE = std::exp(1.0);
} // namespace

TEST_CASE("Gaussian area goldens against the closed forms") {
  const auto plane = canonical_shrinker(CanonicalKind::plane, 2, 2400, 14.0);
  const auto circle = canonical_shrinker(CanonicalKind::circle, 1, 512);
  const auto sphere = canonical_shrinker(CanonicalKind::sphere, 2, 512);
  CHECK(f_functional(plane, {}, 1.0).value == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(f_functional(circle, {}, 1.0).value ==
        doctest::Approx(std::sqrt(2.0 * kPi / kE)).epsilon(1e-4));
  CHECK(f_functional(sphere, {}, 1.0).value == doctest::Approx(4.0 / kE).epsilon(1e-4));
  CHECK_THROWS(f_functional(plane, {}, -1.0));
}

TEST_CASE("off-axis centers integrate the azimuth correctly") {
  // Oracle: direct 2D quadrature over (arc, azimuth).
  const auto sphere = canonical_shrinker(CanonicalKind::sphere, 2, 512);
  const Vec3 x0{0.3, 0.5, 0.0};
  const double t0 = 1.3;
  double oracle = 0.0;
  const int m = 512;
  for (std::size_t i = 0; i < sphere.size(); ++i) {
    const double x = sphere.curve[i].x, r = sphere.curve[i].y;
    double az = 0.0;
    for (int j = 0; j < m; ++j) {
      const double phi = 2.0 * kPi * j / m;
      const Vec3 p{x, r * std::cos(phi), r * std::sin(phi)};
      az += std::exp(-(p - x0).norm2() / (4.0 * t0));
    }
    oracle += az / m * sphere.weight[i];
  }
  oracle /= 4.0 * kPi * t0;
  CHECK(f_functional(sphere, x0, t0).value == doctest::Approx(oracle).epsilon(1e-8));
}

TEST_CASE("translation and scaling covariance of F") {
  const auto sphere = canonical_shrinker(CanonicalKind::sphere, 2, 256);
  const double rho = 1.7;
  const Vec3 shift{0.4, 0.0, 0.0};
  ProfileCurve moved = canonical_profile(CanonicalKind::sphere, 256);
  for (Vec2& v : moved.nodes) v = {v.x * rho + shift.x, v.y * rho};
  const SurfaceSampleSet movedS = geometric_data(moved);

  const Vec3 x0{1.1, 0.0, 0.0};
  const double t0 = 2.3;
  const double lhs = f_functional(movedS, x0, t0, false).value;
  const double rhs = f_functional(sphere, (x0 - shift) / rho, t0 / (rho * rho), false).value;
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-6));
}

TEST_CASE("tail bound dominates the truncation change") {
  const auto plane8 = canonical_shrinker(CanonicalKind::plane, 2, 1200, 8.0);
  const auto plane16 = canonical_shrinker(CanonicalKind::plane, 2, 2400, 16.0);
  const FValue f8 = f_functional(plane8, {}, 1.0, false);
  const FValue f16 = f_functional(plane16, {}, 1.0, false);
  CHECK(std::abs(f16.value - f8.value) <= f8.tailBound + 1e-9);
  // strict mode rejects an unconverged tail (large t0 on a short surface)
  CHECK_THROWS(f_functional(plane8, {}, 40.0, true));
}

TEST_CASE("entropy of the sphere is 4/e at the shrinker point") {
  const auto sphere = canonical_shrinker(CanonicalKind::sphere, 2, 512);
  const EntropyResult r = entropy(sphere);
  CHECK(r.lambda == doctest::Approx(4.0 / kE).epsilon(1e-4));
  CHECK(std::abs(r.t0 - 1.0) < 0.02);
  CHECK(r.center.norm() < 0.02);
  CHECK(r.status == EntropyResult::Status::converged);
  CHECK(r.lambda >= f_functional(sphere, {}, 1.0).value - 1e-12);
}

TEST_CASE("entropy is translation invariant (offset plane)") {
  ProfileCurve pl = canonical_profile(CanonicalKind::plane, 4800, 14.0);
  for (Vec2& v : pl.nodes) v.x += 5.0;
  const EntropyResult r = entropy(geometric_data(pl));
  CHECK(r.lambda == doctest::Approx(1.0).epsilon(2e-6));
  CHECK(r.center.x == doctest::Approx(5.0).epsilon(0.01));
}

TEST_CASE("entropy is scale invariant with the equivariant argmax") {
  ProfileCurve sp = canonical_profile(CanonicalKind::sphere, 512);
  for (Vec2& v : sp.nodes) v = v * 3.0;
  const EntropyResult r = entropy(geometric_data(sp));
  CHECK(r.lambda == doctest::Approx(4.0 / kE).epsilon(1e-3));
  CHECK(r.t0 == doctest::Approx(9.0).epsilon(0.02));
}

TEST_CASE("G derivatives vanish at the critical point of a shrinker") {
  const auto sphere = canonical_shrinker(CanonicalKind::sphere, 2, 512);
  std::vector<double> f(sphere.size(), std::sqrt(kE / (16.0 * kPi)));
  const GEvaluation g = g_derivatives(sphere, f, {}, 1.0, 0.0);
  CHECK(std::abs(g.ds) < 1e-5);
  CHECK(std::abs(g.dt0) < 1e-5);
  CHECK(g.dx0.norm() < 1e-5);
}

TEST_CASE("ds of G vanishes on the plane through the origin") {
  const auto plane = canonical_shrinker(CanonicalKind::plane, 2, 1200, 12.0);
  std::vector<double> f(plane.size());
  for (std::size_t i = 0; i < plane.size(); ++i) {
    f[i] = std::exp(-0.05 * plane.radius[i] * plane.radius[i]); // any decaying field
  }
  const GEvaluation g = g_derivatives(plane, f, {}, 1.0, 0.0);
  CHECK(std::abs(g.ds) < 1e-10);
}

TEST_CASE("analytic dt0 and ds match central finite differences") {
  const auto sphere = canonical_shrinker(CanonicalKind::sphere, 2, 512);
  std::vector<double> f(sphere.size(), std::sqrt(kE / (16.0 * kPi)));

  const double t0 = 2.0;
  const GEvaluation g = g_derivatives(sphere, f, {}, t0, 0.0);
  const double dt = 1e-4;
  const double fdT0 = (g_derivatives(sphere, f, {}, t0 + dt, 0.0).value -
                       g_derivatives(sphere, f, {}, t0 - dt, 0.0).value) /
                      (2.0 * dt);
  CHECK(g.dt0 == doctest::Approx(fdT0).epsilon(1e-4));

  const double ds = 1e-4;
  const double fdS = (g_derivatives(sphere, f, {}, t0, ds).value -
                      g_derivatives(sphere, f, {}, t0, -ds).value) /
                     (2.0 * ds);
  CHECK(g.ds == doctest::Approx(fdS).epsilon(1e-3));

  // 5-point stencil agreement on a probe set (n = 1 exercises the curve path)
  const auto circle = canonical_shrinker(CanonicalKind::circle, 1, 512);
  std::vector<double> fc(circle.size(), 0.3);
  for (double t0p : {0.7, 1.0, 1.9}) {
    const GEvaluation gc = g_derivatives(circle, fc, {0.2, 0.1, 0.0}, t0p, 0.0);
    const double h = 1e-3;
    auto val = [&](double tt) { return g_derivatives(circle, fc, {0.2, 0.1, 0.0}, tt, 0.0).value; };
    const double fd5 = (-val(t0p + 2 * h) + 8 * val(t0p + h) - 8 * val(t0p - h) + val(t0p - 2 * h)) /
                       (12.0 * h);
    CHECK(gc.dt0 == doctest::Approx(fd5).epsilon(1e-3));
  }
}

TEST_CASE("g_derivatives rejects an invalid graph amplitude") {
  const auto sphere = canonical_shrinker(CanonicalKind::sphere, 2, 128);
  std::vector<double> f(sphere.size(), 1.0);
  CHECK_THROWS(g_derivatives(sphere, f, {}, 1.0, 5.0));
}

TEST_CASE("density is constant on a self-similar flow and decreasing off-center") {
  const auto circle = canonical_shrinker(CanonicalKind::circle, 1, 384);
  FlowTrace tr = flow_run(circle, -0.3, {});
  const DensityAudit a = monotonicity_audit(tr, {{}, 0.0});
  CHECK(a.maxDrift <= 1e-4);
  CHECK(a.maxUpwardStep <= 5e-4);
  CHECK(a.value.front() == doctest::Approx(std::sqrt(2.0 * kPi / kE)).epsilon(1e-4));

  // sphere audited about an off-center point: strictly decreasing
  const auto sphere = canonical_shrinker(CanonicalKind::sphere, 2, 384);
  FlowTrace ts = flow_run(sphere, -0.5, {});
  const DensityAudit b = monotonicity_audit(ts, {{1.0, 0.0, 0.0}, 0.25});
  CHECK(b.maxUpwardStep <= 0.0);
  CHECK(b.value.back() < b.value.front());
  CHECK_THROWS(monotonicity_audit(ts, {{}, -0.9})); // t0 inside the trace
}

TEST_CASE("Hessian of G rejects the sphere's non-orthogonal eigen direction") {
  // On the sphere the lowest eigenfunction is constant, parallel to H.
  const auto sphere = canonical_shrinker(CanonicalKind::sphere, 2, 256);
  std::vector<double> f(sphere.size(), std::sqrt(kE / (16.0 * kPi)));
  CHECK_THROWS(hessian_G_at_critical(sphere, f, -1.0));
}
