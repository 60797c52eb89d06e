#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "shrinklab/flow.hpp"
#include "shrinklab/shrinkers.hpp"
#include "shrinklab/smc.hpp"
#include "support/test_helpers.hpp"

using namespace shrinklab;
using shrinklab::testing::cached_specimen;

namespace {
double sphere_radius(double r0, double t) { return std::sqrt(r0 * r0 - 4.0 * (t + 1.0)); }
} // namespace

TEST_CASE("shrinker mean curvature closed forms") {
  // sphere of radius 1 at t = -1 about the space-time origin: S = 2*2 - 1 = 3
  ProfileCurve unit = canonical_profile(CanonicalKind::sphere, 256);
  for (Vec2& v : unit.nodes) v = v * 0.5;
  const SMCField f = smc(geometric_data(unit), {{}, 0.0}, -1.0);
  for (double v : f.value) CHECK(v == doctest::Approx(3.0).epsilon(1e-3));
  for (double e : f.eta) CHECK(e >= 1.0);

  // plane through the origin: S = 0 for any reference time
  const SMCField fp = smc(canonical_shrinker(CanonicalKind::plane, 2, 128), {{}, 0.0}, -0.3);
  for (double v : fp.value) CHECK(v == 0.0);
}

TEST_CASE("S vanishes on self-similar slices") {
  const ShootResult& spec = cached_specimen();
  for (double t : {-1.0, -0.49}) {
    ProfileCurve p = spec.profile;
    for (Vec2& v : p.nodes) v = v * std::sqrt(-t);
    const SurfaceSampleSet s = geometric_data(p);
    const SMCField f = smc(s, {{}, 0.0}, t);
    double worst = 0.0;
    for (double v : f.value) worst = std::max(worst, std::abs(v));
    CHECK(worst <= 10.0 * s.h * s.h);
  }
}

TEST_CASE("gauge identity: time reindexing is exact") {
  const SurfaceSampleSet s = geometric_data(canonical_profile(CanonicalKind::sphere, 128));
  const double t = -0.4, t0 = 0.25;
  const SMCField a = smc(s, {{0.3, 0.0, 0.0}, t0}, t);
  const SMCField b = smc(s, {{0.3, 0.0, 0.0}, t0 - t}, 0.0);
  for (std::size_t i = 0; i < a.value.size(); ++i) CHECK(a.value[i] == b.value[i]);
}

TEST_CASE("translation equivariance is exact") {
  const ProfileCurve p = canonical_profile(CanonicalKind::sphere, 128);
  ProfileCurve moved = p;
  const double shift = 0.8; // along the axis to stay rotationally symmetric
  for (Vec2& v : moved.nodes) v.x += shift;
  const SMCField a = smc(geometric_data(p), {{0.1, 0.0, 0.0}, 0.5}, -1.0);
  const SMCField b = smc(geometric_data(moved), {{0.1 + shift, 0.0, 0.0}, 0.5}, -1.0);
  for (std::size_t i = 0; i < a.value.size(); ++i) {
    CHECK(a.value[i] == doctest::Approx(b.value[i]).epsilon(1e-9));
  }
}

TEST_CASE("evolution residual is small on a self-similar flow") {
  const auto circle = canonical_shrinker(CanonicalKind::circle, 1, 384);
  const FlowTrace tr = flow_run(circle, -0.5, {});
  const EvolutionResidualReport rep = smc_evolution_residual(tr, {{}, 0.0});
  CHECK(rep.overallMax <= 1e-3);
}

TEST_CASE("evolution residual matches the closed-form S on shrinking spheres") {
  // X0 = (0, t0) with t0 != extinction so S is nonzero:
  // S(t) = 2 (t0 - t) (2 / r) - r with r(t) = sqrt(4 - 4(t+1)).
  const double t0 = 0.5;
  const auto sphere = canonical_shrinker(CanonicalKind::sphere, 2, 384);
  const FlowTrace tr = flow_run(sphere, -0.5, {});
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    const double r = sphere_radius(2.0, tr.times[k]);
    const double want = 2.0 * (t0 - tr.times[k]) * (2.0 / r) - r;
    const SMCField f = smc(tr.surfaces[k], {{}, t0}, tr.times[k]);
    CHECK(f.value[f.value.size() / 2] == doctest::Approx(want).epsilon(1e-3));
  }
  const EvolutionResidualReport rep = smc_evolution_residual(tr, {{}, t0});
  CHECK(rep.overallMax < 2e-2);
}

TEST_CASE("evolution residual converges under refinement") {
  std::vector<double> hs, errs;
  for (int lvl = 0; lvl < 2; ++lvl) {
    const int n = lvl ? 512 : 256;
    FlowController c;
    c.saveInterval = lvl ? 0.025 : 0.05;
    const auto sphere = canonical_shrinker(CanonicalKind::sphere, 2, n);
    const FlowTrace tr = flow_run(sphere, -0.5, c);
    const EvolutionResidualReport rep = smc_evolution_residual(tr, {{}, 0.5});
    hs.push_back(c.saveInterval);
    errs.push_back(rep.overallMax);
  }
  const double order = std::log2(errs[0] / errs[1]);
  CHECK(order >= 0.9);
}

TEST_CASE("lower bound audit on the shrinking unit sphere, closed form") {
  ProfileCurve unit = canonical_profile(CanonicalKind::sphere, 256);
  for (Vec2& v : unit.nodes) v = v * 0.5;
  const FlowTrace tr = flow_run(geometric_data(unit), -0.9, {});
  // S(-1) = 3 on the initial slice; c = 3, alpha = 0.
  const LowerBoundReport rep = lower_bound_audit(tr, {{}, 0.0}, 3.0, 0.0, 1e-3);
  CHECK(rep.initialHypothesis);
  CHECK(rep.pass);
  // closed-form check of S along the trace: S = 2(0-t)(2/r) - r, r = sqrt(1-4(t+1))
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    const double r = std::sqrt(1.0 - 4.0 * (tr.times[k] + 1.0));
    const double want = 2.0 * (0.0 - tr.times[k]) * (2.0 / r) - r;
    const SMCField f = smc(tr.surfaces[k], {{}, 0.0}, tr.times[k]);
    CHECK(f.value[f.value.size() / 2] == doctest::Approx(want).epsilon(2e-3));
    CHECK(want >= 3.0 - 1e-9);
  }
}

TEST_CASE("lower bound audit rejects a violated initial hypothesis") {
  const auto plane = canonical_shrinker(CanonicalKind::plane, 2, 128);
  FlowTrace tr;
  tr.times = {-1.0};
  tr.surfaces = {plane};
  tr.status = FlowTrace::Status::reachedHorizon;
  CHECK_THROWS(lower_bound_audit(tr, {{}, 0.0}, 1.0, 0.0)); // S = 0 < 1
  // c = 0 passes trivially on the self-similar (S = 0) plane
  const LowerBoundReport rep = lower_bound_audit(tr, {{}, 0.0}, 0.0, 0.0);
  CHECK(rep.pass);
}

TEST_CASE("curvature ratio audit: plane and shrinking sphere") {
  const auto plane = canonical_shrinker(CanonicalKind::plane, 2, 128);
  FlowTrace planeTr;
  planeTr.times = {-1.0, -0.9};
  planeTr.surfaces = {plane, plane};
  planeTr.status = FlowTrace::Status::reachedHorizon;
  // |A| = 0 everywhere: the ratio passes with 0 (S = 0 nodes carry no curvature)
  const RatioReport rp = curvature_ratio_audit(planeTr, {{}, 0.0}, 1.0, 0.0, 0.0, 1.0);
  CHECK(rp.pass);
  CHECK(rp.maxRatio == 0.0);

  ProfileCurve unit = canonical_profile(CanonicalKind::sphere, 256);
  for (Vec2& v : unit.nodes) v = v * 0.5;
  const FlowTrace tr = flow_run(geometric_data(unit), -0.9, {});
  const RatioReport rep = curvature_ratio_audit(tr, {{}, 0.0}, 3.0, 0.0, 0.0);
  CHECK(rep.pass);
  CHECK_FALSE(rep.hypothesisBreach);
  // scale-invariant combination |A| S = sqrt(2) on the unit-sphere flow at
  // X0 = extinction; here X0 = O gives the closed forms checked above, so
  // just pin the measured envelope constant instead.
  CHECK(rep.mTilde > 0.0);
}

TEST_CASE("max principle audit accepts the constant and trivial fields") {
  const auto circle = canonical_shrinker(CanonicalKind::circle, 1, 256);
  const FlowTrace tr = flow_run(circle, -0.6, {});
  MaxPrincipleInput input;
  input.c0 = 1.0;
  input.R = 0.0;
  for (std::size_t k = 0; k < tr.surfaces.size(); ++k) {
    input.u.emplace_back(tr.surfaces[k].size(), 1.0);
    input.b.emplace_back(tr.surfaces[k].size(), 0.0);
  }
  const MaxPrincipleReport rep = max_principle_audit(tr, input);
  CHECK(rep.boundaryHypothesis);
  CHECK(rep.pass);
  CHECK(rep.worstMargin == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(rep.m1 == 0.0);

  // u = -t on [-1, 0): positive, passes with c0 = 0 even though the
  // supersolution inequality itself fails (du/dt = -1 < 0, reported).
  MaxPrincipleInput decreasing = input;
  decreasing.c0 = 0.0;
  for (std::size_t k = 0; k < tr.surfaces.size(); ++k) {
    std::fill(decreasing.u[k].begin(), decreasing.u[k].end(), -tr.times[k]);
  }
  const MaxPrincipleReport rep2 = max_principle_audit(tr, decreasing);
  CHECK(rep2.pass);
  CHECK(rep2.hypothesisIWorst < -0.5); // measured violation of hypothesis (i)
}

TEST_CASE("max principle audit rejects a bad parabolic boundary") {
  const auto circle = canonical_shrinker(CanonicalKind::circle, 1, 128);
  FlowTrace tr;
  tr.times = {-1.0};
  tr.surfaces = {circle};
  tr.status = FlowTrace::Status::reachedHorizon;
  MaxPrincipleInput input;
  input.c0 = 2.0;
  input.u.emplace_back(circle.size(), 1.0); // u = 1 < c0 on the initial slice
  input.b.emplace_back(circle.size(), 0.0);
  CHECK_THROWS(max_principle_audit(tr, input));
}

TEST_CASE("max principle audit on the propagated SMC field of the sphere") {
  ProfileCurve unit = canonical_profile(CanonicalKind::sphere, 256);
  for (Vec2& v : unit.nodes) v = v * 0.5;
  const FlowTrace tr = flow_run(geometric_data(unit), -0.9, {});
  MaxPrincipleInput input;
  input.c0 = 3.0;
  input.R = 0.0;
  for (std::size_t k = 0; k < tr.surfaces.size(); ++k) {
    const SurfaceSampleSet& s = tr.surfaces[k];
    const SMCField f = smc(s, {{}, 0.0}, tr.times[k]);
    input.u.push_back(f.value);
    std::vector<double> b(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) b[i] = s.normA[i] * s.normA[i];
    input.b.push_back(std::move(b));
  }
  const MaxPrincipleReport rep = max_principle_audit(tr, input, 1e-3);
  CHECK(rep.boundaryHypothesis);
  CHECK(rep.m1 == 0.0);
  CHECK(rep.pass);
  CHECK(!rep.weightedIntegrals.empty());
  for (double w : rep.weightedIntegrals) CHECK(std::isfinite(w));
}
