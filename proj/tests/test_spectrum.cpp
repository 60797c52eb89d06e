#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "shrinklab/gaussian.hpp"
#include "shrinklab/shrinkers.hpp"
#include "shrinklab/spectrum.hpp"
#include "shrinklab/tridiag.hpp"
#include "support/test_helpers.hpp"

using namespace shrinklab;
using shrinklab::testing::cached_specimen;
using shrinklab::testing::cached_specimen_sample;

namespace {
constexpr double kPi = std::numbers::pi;
const double kE = std::exp(1.0);

double rayleigh(const OperatorPencil& p, const std::vector<double>& v) {
  double num = 0.0, den = 0.0;
  const std::size_t m = p.diag.size();
  for (std::size_t i = 0; i < m; ++i) {
    double Av = p.diag[i] * v[i];
    if (i > 0) Av += p.off[i - 1] * v[i - 1];
    if (i + 1 < m) Av += p.off[i] * v[i + 1];
    if (p.cyclic) {
      if (i == 0) Av += p.cornerOff * v[m - 1];
      if (i + 1 == m) Av += p.cornerOff * v[0];
    }
    num += v[i] * Av;
    den += v[i] * v[i] * p.mass[i];
  }
  return num / den;
}
} // namespace

TEST_CASE("quadratic form on constants: sphere and cylinder give -1, plane -1/2") {
  const auto sphere = canonical_shrinker(CanonicalKind::sphere, 2, 512);
  const OperatorPencil ps = assemble_operator(sphere, 10.0);
  CHECK(rayleigh(ps, std::vector<double>(ps.diag.size(), 1.0)) == doctest::Approx(-1.0).epsilon(1e-6));

  const auto cyl = canonical_shrinker(CanonicalKind::cylinder, 2, 1600, 16.0);
  const OperatorPencil pc = assemble_operator(cyl, 20.0);
  CHECK(rayleigh(pc, std::vector<double>(pc.diag.size(), 1.0)) == doctest::Approx(-1.0).epsilon(1e-6));

  const auto plane = canonical_shrinker(CanonicalKind::plane, 2, 1600, 16.0);
  const SpectralResult rp = lowest_eigenpair(plane, {14.0});
  CHECK(rp.mu == doctest::Approx(-0.5).epsilon(1e-5));
}

TEST_CASE("lowest eigenpair of the sphere: mu = -1 with the constant eigenfunction") {
  const auto sphere = canonical_shrinker(CanonicalKind::sphere, 2, 512);
  const SpectralResult r = lowest_eigenpair(sphere, {10.0, 15.0});
  CHECK(r.mu == doctest::Approx(-1.0).epsilon(1e-3));
  const double want = std::sqrt(kE / (16.0 * kPi));
  for (double v : r.f) CHECK(v == doctest::Approx(want).epsilon(5e-4));
  CHECK(std::abs(r.f[10] - want) <= 1e-4);
  // normalization against the node quadrature
  double norm = 0.0;
  for (std::size_t i = 0; i < sphere.size(); ++i) {
    norm += r.f[i] * r.f[i] * std::exp(-0.25 * sphere.position[i].norm2()) * sphere.weight[i];
  }
  CHECK(norm == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("lowest eigenpair of the cylinder: mu = -1, constant along the axis") {
  const auto cyl = canonical_shrinker(CanonicalKind::cylinder, 2, 1600, 16.0);
  const SpectralResult r = lowest_eigenpair(cyl, {10.0, 12.0, 14.0});
  CHECK(r.mu == doctest::Approx(-1.0).epsilon(1e-3));
  double lo = 1e300, hi = 0.0;
  for (std::size_t i = 0; i < cyl.size(); ++i) {
    if (cyl.radius[i] < 8.0) {
      lo = std::min(lo, r.f[i]);
      hi = std::max(hi, r.f[i]);
    }
  }
  CHECK((hi - lo) / hi < 1e-3);
}

TEST_CASE("eigenvector agrees with an independent randomized inverse iteration") {
  const auto sphere = canonical_shrinker(CanonicalKind::sphere, 2, 256);
  const OperatorPencil p = assemble_operator(sphere, 10.0);
  const SpectralResult r = lowest_eigenpair(sphere, {10.0});

  // test-side inverse iteration from a random start at a fixed shift
  const std::size_t m = p.diag.size();
  std::mt19937_64 rng(1234);
  std::uniform_real_distribution<double> uni(0.1, 1.0);
  std::vector<double> v(m);
  for (double& x : v) x = uni(rng);
  const double shift = -3.0;
  std::vector<double> lower(m, 0.0), diag(m), upper(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    diag[i] = p.diag[i] - shift * p.mass[i];
    if (i + 1 < m) {
      lower[i + 1] = p.off[i];
      upper[i] = p.off[i];
    }
  }
  for (int it = 0; it < 200; ++it) {
    std::vector<double> rhs(m);
    for (std::size_t i = 0; i < m; ++i) rhs[i] = p.mass[i] * v[i];
    v = solve_tridiagonal(lower, diag, upper, rhs);
    double norm = 0.0;
    for (std::size_t i = 0; i < m; ++i) norm += v[i] * v[i] * p.mass[i];
    for (double& x : v) x /= std::sqrt(norm);
  }
  double sum = 0.0;
  for (double x : v) sum += x;
  if (sum < 0.0) for (double& x : v) x = -x;
  CHECK(rayleigh(p, v) == doctest::Approx(r.mu).epsilon(1e-10));
  for (std::size_t i = 0; i < m; ++i) {
    CHECK(v[i] == doctest::Approx(r.f[p.nodeIndex[i]]).epsilon(1e-6));
  }
}

TEST_CASE("specimen: mu < -1, monotone in R, Rayleigh-consistent, decay bracket") {
  const SurfaceSampleSet sigma = cached_specimen_sample();
  const SpectralResult r = lowest_eigenpair(sigma, {4.0, 5.0, 6.0, 8.0, 15.0});
  CHECK(r.mu < -1.0);
  CHECK(-1.0 - r.mu > 0.05); // strictly negative margin, reported
  for (std::size_t k = 1; k < r.muByR.size(); ++k) {
    CHECK(r.muByR[k].second <= r.muByR[k - 1].second + 1e-12);
  }
  CHECK(r.rayleigh == doctest::Approx(r.mu).epsilon(1e-8));
  REQUIRE(r.decayFitDone);
  const double lo = 1.0 + 2.0 * r.mu - 2.0 * r.beta;
  const double hi = 1.0 + 2.0 * r.mu + 2.0 * r.beta;
  CHECK(r.decaySlope >= lo);
  CHECK(r.decaySlope <= hi);
  CHECK(r.beta == doctest::Approx(0.5 * std::min(1.0, -r.mu - 1.0)));
  CHECK(r.C0 >= 1.0);
  CHECK(r.C1 >= 1.0);
}

TEST_CASE("weighted Poincare inequality holds on shrinkers") {
  const auto plane = canonical_shrinker(CanonicalKind::plane, 2, 1200, 14.0);
  CHECK(weighted_poincare_test(plane, 200, 11) <= 1.0 + 1e-3);
  const auto cyl = canonical_shrinker(CanonicalKind::cylinder, 2, 1200, 14.0);
  CHECK(weighted_poincare_test(cyl, 200, 12) <= 1.0 + 1e-3);
  const SurfaceSampleSet sigma = cached_specimen_sample();
  CHECK(weighted_poincare_test(sigma, 200, 13) <= 1.0 + 1e-3);

  // a single far bump on the cylinder stays below 1
  // (covered by the seeded trials; spot-check a small ratio near the origin)
  const auto circle = canonical_shrinker(CanonicalKind::circle, 1, 512);
  CHECK(weighted_poincare_test(circle, 50, 14) <= 1.0 + 1e-3);

  // non-shrinkers are rejected
  ProfileCurve unit = canonical_profile(CanonicalKind::sphere, 128);
  for (Vec2& v : unit.nodes) v = v * 0.5;
  CHECK_THROWS(weighted_poincare_test(geometric_data(unit), 10, 15));
}

TEST_CASE("perturbation of the sphere by its constant eigenfunction") {
  const auto sphere = canonical_shrinker(CanonicalKind::sphere, 2, 512);
  const SpectralResult r = lowest_eigenpair(sphere, {10.0});
  const double eps = 0.01;
  const PerturbationSpec spec = build_perturbation(sphere, r, eps);
  const double c0 = std::sqrt(kE / (16.0 * kPi));
  const double radius = 2.0 + eps * c0;
  for (double rr : spec.surface.radius) CHECK(rr == doctest::Approx(radius).epsilon(1e-6));
  // S^{O,-1} = 2H - r on the concentric sphere, in closed form; growing the
  // sphere makes it negative for the outward normal, so the suitable choice
  // flips the orientation.
  const double sWant = 2.0 * (2.0 / radius) - radius;
  CHECK(sWant < 0.0);
  CHECK(spec.smcSign == -1);
  const double floorWant = -sWant * std::pow(1.0 + radius * radius, -r.mu);
  CHECK(spec.smcFloor == doctest::Approx(floorWant).epsilon(1e-3));
  CHECK(spec.embeddedGraph);

  // eps = 0 degenerates to Sigma with floor 0 up to discretization
  const PerturbationSpec zero = build_perturbation(sphere, r, 0.0);
  CHECK(std::abs(zero.smcFloor) < 5e-4);
  CHECK(zero.smcFloorOk);

  // validity bound is enforced
  CHECK_THROWS(build_perturbation(sphere, r, 100.0));
}

TEST_CASE("specimen perturbations pass the Gamma^eps checks on both sides") {
  const ShootResult& spec = cached_specimen();
  const SurfaceSampleSet sigma = cached_specimen_sample();
  const SpectralResult r = lowest_eigenpair(sigma, {10.0, 15.0, 20.0, 30.0});
  for (double eps : {0.05, -0.05}) {
    const PerturbationSpec p = build_perturbation(sigma, r, eps, &spec.coneFit.cone);
    CHECK(p.validity);
    CHECK(p.tubeOk);
    CHECK(p.smcFloor > 0.0);
    CHECK(p.smcFloorOk);
    CHECK(p.localGraphGradient < 0.3);
  }
}

TEST_CASE("entropy decrease of the specimen matches the Hessian prediction") {
  const SurfaceSampleSet sigma = cached_specimen_sample();
  const SpectralResult r = lowest_eigenpair(sigma, {10.0, 15.0, 20.0, 30.0});
  EntropyBudget budget;
  budget.refineTop = 2;
  const EntropyDecreaseTable tab =
      entropy_decrease_check(sigma, r, {-0.1, -0.05, 0.0, 0.05, 0.1}, budget);
  CHECK(tab.strictDecrease);
  CHECK(tab.conclusive);
  for (const auto& row : tab.rows) {
    if (row.epsilon == 0.0) CHECK(row.delta == 0.0);
    else CHECK(row.delta < 0.0);
  }
  CHECK(std::abs(tab.predictionRatio - 1.0) <= 0.3);

  // Hessian at the critical point: negative definite with the mu entry
  const HessianResult h = hessian_G_at_critical(sigma, r.f, r.mu);
  CHECK(h.negativeDefinite);
  CHECK(h.eigenvalues.back() < 0.0);
  CHECK(h.fDiagonal / h.prefactor == doctest::Approx(r.mu).epsilon(1e-2));
  CHECK(std::abs(h.crossFH) <= 1e-3);
  CHECK(std::abs(h.crossFY) <= 1e-3);
}

TEST_CASE("operator assembly clips R beyond the surface extent") {
  const auto sphere = canonical_shrinker(CanonicalKind::sphere, 2, 128);
  const OperatorPencil p = assemble_operator(sphere, 50.0);
  CHECK(p.clipped);
  CHECK_THROWS(lowest_eigenpair(sphere, {}));
}
