#include "shrinklab/topology.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace shrinklab {

namespace {

constexpr double kPi = std::numbers::pi;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

} // namespace

StarShapedReport star_shaped_check(const SurfaceSampleSet& surface) {
  StarShapedReport rep;
  rep.minXdotN = 1e300;
  for (std::size_t i = 0; i < surface.size(); ++i) {
    const double v = surface.position[i].dot(surface.normal[i]);
    if (v < rep.minXdotN) {
      rep.minXdotN = v;
      rep.worstNode = i;
    }
  }
  rep.pass = rep.minXdotN > 0.0;
  return rep;
}

RadialProjectionReport radial_projection_check(const SurfaceSampleSet& surface, const Cone& cone,
                                               double minConeDistance) {
  if (!star_shaped_check(surface).pass) {
    throw std::invalid_argument("radial_projection_check: surface is not star-shaped");
  }
  if (!(minConeDistance > 0.0)) {
    throw std::invalid_argument("radial_projection_check: surface must be disjoint from the cone");
  }
  RadialProjectionReport rep;
  const std::size_t n = surface.size();
  std::vector<double> theta(n);
  for (std::size_t i = 0; i < n; ++i) {
    theta[i] = surface.n == 2 ? polar_angle(surface.curve[i])
                              : std::atan2(surface.curve[i].y, surface.curve[i].x);
  }
  rep.monotone = true;
  rep.minStep = 1e300;
  const double dir = theta[n - 1] > theta[0] ? 1.0 : -1.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double step = dir * (theta[i + 1] - theta[i]);
    if (step <= 0.0 && rep.monotone) {
      rep.monotone = false;
      rep.offendingNode = i;
    }
    rep.minStep = std::min(rep.minStep, step);
  }
  rep.thetaLo = std::min(theta.front(), theta.back());
  rep.thetaHi = std::max(theta.front(), theta.back());
  rep.injective = rep.monotone;

  // The open image interval should run from a pole to a link angle.
  double mismatch = 1e300;
  for (double a : cone.linkAngles) {
    mismatch = std::min(mismatch, std::min(std::abs(rep.thetaLo - a), std::abs(rep.thetaHi - a)));
  }
  rep.endpointMismatch = mismatch;
  const bool touchesPole = rep.thetaLo < 0.05 || rep.thetaHi > kPi - 0.05;
  rep.endpointsMatchLink = touchesPole && mismatch < 0.05;
  return rep;
}

LinkReport separation_report(const Cone& cone) {
  cone.validate();
  if (cone.n != 2) throw std::invalid_argument("separation_report: rotationally symmetric cones only");
  LinkReport rep;
  rep.link = cone;
  std::vector<double> angles = cone.linkAngles;
  std::sort(angles.begin(), angles.end());
  double lo = 0.0;
  for (std::size_t k = 0; k <= angles.size(); ++k) {
    const double hi = (k < angles.size()) ? angles[k] : kPi;
    ComponentInfo comp;
    comp.lo = lo;
    comp.hi = hi;
    comp.type = (lo == 0.0 || hi == kPi) ? "cap" : "band";
    rep.components.push_back(comp);
    lo = hi;
  }
  rep.linkConnected = angles.size() == 1;
  return rep;
}

PipelineReport theorem_pipeline(const ShootResult& specimen, const PipelineConfig& config) {
  PipelineReport report;
  auto stage = [&](const std::string& name, bool pass, const std::string& detail) {
    report.stages.push_back({name, pass, detail});
    if (!pass && report.failedStage.empty()) report.failedStage = name;
    return pass;
  };

  if (!stage("input", specimen.ok() && specimen.profile.nodes.size() >= 32,
             specimen.ok() ? "shoot ok" : "shoot failed: " + specimen.diagnostic)) {
    return report;
  }

  SurfaceSampleSet sigma = geometric_data(specimen.profile);
  report.residual = shrinker_residual(sigma).maxAbs;
  if (!stage("residual", report.residual <= config.residualTol,
             "max |H - x.n/2| = " + fmt(report.residual) + " vs tol " + fmt(config.residualTol))) {
    return report;
  }

  const bool conical = specimen.coneFit.hasCone && specimen.coneFit.cone.linkAngles.size() == 1;
  if (!stage("asymptotically-conical", conical,
             specimen.coneFit.hasCone
                 ? "link angles: " + std::to_string(specimen.coneFit.cone.linkAngles.size())
                 : "no cone fit: " + specimen.coneFit.diagnostic)) {
    return report;
  }
  const Cone cone = specimen.coneFit.cone;

  const bool embedded = polyline_is_simple(specimen.profile.nodes, false);
  if (!stage("embedded", embedded,
             embedded ? "profile is simple" : "generating curve self-intersects (immersed)")) {
    return report;
  }

  // Entropy bound lambda[Sigma] <= lambda_1 (cylinder value).
  {
    const SurfaceSampleSet cyl = canonical_shrinker(CanonicalKind::cylinder, 2, 1600, 16.0);
    report.lambdaCylinder = f_functional(cyl, {}, 1.0).value;
    const EntropyResult es = entropy(sigma, config.entropyBudget);
    report.lambdaSigma = es.lambda;
    if (!stage("entropy-bound", es.lambda <= report.lambdaCylinder,
               "lambda[Sigma] = " + fmt(es.lambda) + " vs lambda_1 = " + fmt(report.lambdaCylinder))) {
      return report;
    }
  }

  // Lowest eigenpair of the stability operator.
  SpectralResult spectral = lowest_eigenpair(sigma, config.rSchedule);
  report.mu = spectral.mu;
  if (!stage("spectrum", spectral.mu < -1.0,
             "mu = " + fmt(spectral.mu) + " (margin " + fmt(-1.0 - spectral.mu) + ")")) {
    return report;
  }

  // Two-sided perturbations: start at half the admissible amplitude and
  // halve until the measured floor clears the bound on both sides (the
  // quadratic remainder shrinks one order per halving).
  PerturbationSpec plus = build_perturbation(sigma, spectral, 1e-3, &cone);
  double eps = 0.5 * plus.maxAdmissibleEps;
  PerturbationSpec minus;
  for (int attempt = 0; attempt < 12; ++attempt) {
    plus = build_perturbation(sigma, spectral, eps, &cone);
    minus = build_perturbation(sigma, spectral, -eps, &cone);
    if (plus.smcFloorOk && minus.smcFloorOk) break;
    eps *= 0.5;
  }
  report.epsilon = eps;
  report.smcFloorPlus = plus.smcFloor;
  report.smcFloorMinus = minus.smcFloor;
  if (!stage("perturbation",
             plus.validity && minus.validity && plus.embeddedGraph && minus.embeddedGraph &&
                 plus.tubeOk && minus.tubeOk && plus.smcFloorOk && minus.smcFloorOk,
             "eps = " + fmt(eps) + ", floors " + fmt(plus.smcFloor) + " / " + fmt(minus.smcFloor) +
                 " vs bound " + fmt(plus.smcFloorBound))) {
    return report;
  }

  // Strict entropy decrease with the quadratic model cross-check.
  report.entropyTable = entropy_decrease_check(
      sigma, spectral, {-eps, -0.5 * eps, 0.0, 0.5 * eps, eps}, config.entropyBudget);
  const double ratio = report.entropyTable.predictionRatio;
  if (!stage("entropy-decrease",
             report.entropyTable.strictDecrease && report.entropyTable.conclusive &&
                 std::abs(ratio - 1.0) <= 0.3,
             "strict=" + std::string(report.entropyTable.strictDecrease ? "yes" : "no") +
                 " quadratic/hessian = " + fmt(ratio))) {
    return report;
  }

  // Orient each perturbation so its shrinker mean curvature is positive, then
  // flow both to t = 0.
  auto orientForFlow = [&](const PerturbationSpec& spec) {
    ProfileCurve p = spec.profile;
    if (spec.smcSign < 0) p.flipNormal = !p.flipNormal;
    p = resample(p, config.flowNodes);
    return geometric_data(p);
  };
  FlowController ctrl;
  ctrl.saveInterval = config.saveInterval;
  FlowTrace tracePlus = flow_run(orientForFlow(plus), config.horizon, ctrl);
  FlowTrace traceMinus = flow_run(orientForFlow(minus), config.horizon, ctrl);
  if (!stage("no-singularity",
             tracePlus.status == FlowTrace::Status::reachedHorizon &&
                 traceMinus.status == FlowTrace::Status::reachedHorizon,
             "status " + std::to_string(static_cast<int>(tracePlus.status)) + " / " +
                 std::to_string(static_cast<int>(traceMinus.status)))) {
    return report;
  }

  // Shrinker mean curvature stays above the propagated floor on both flows.
  {
    const double c = -spectral.mu * eps / spectral.C0;
    const double alpha = -spectral.mu;
    const LowerBoundReport lbPlus = lower_bound_audit(tracePlus, {{}, 0.0}, c, alpha);
    const LowerBoundReport lbMinus = lower_bound_audit(traceMinus, {{}, 0.0}, c, alpha);
    if (!stage("smc-floor", lbPlus.pass && lbMinus.pass,
               "worst margins " + fmt(lbPlus.worstMargin) + " / " + fmt(lbMinus.worstMargin))) {
      return report;
    }
  }

  // Disjointness from the self-similar flow of Sigma for t < 0 and from the
  // cone at t = 0.
  {
    double minDist = 1e300;
    for (const FlowTrace* tr : {&tracePlus, &traceMinus}) {
      for (std::size_t k = 0; k < tr->times.size(); ++k) {
        const double t = tr->times[k];
        if (!(t < 0.0)) continue;
        ProfileCurve scaled = specimen.profile;
        const double lambda = std::sqrt(-t);
        for (Vec2& v : scaled.nodes) v = v * lambda;
        if (scaled.endB.kind == EndCondition::Kind::cone) scaled.endB.truncationRadius *= lambda;
        minDist = std::min(minDist, surface_distance(tr->surfaces[k], geometric_data(scaled)));
      }
    }
    report.minDistSelfSimilar = minDist;
    double coneDist = 1e300;
    for (const FlowTrace* tr : {&tracePlus, &traceMinus}) {
      const SurfaceSampleSet& last = tr->surfaces.back();
      for (std::size_t i = 0; i < last.size(); ++i) {
        coneDist = std::min(coneDist, distance_to_cone(last.position[i], cone));
      }
    }
    report.coneDistanceAtZero = coneDist;
    const double h = tracePlus.surfaces.back().h;
    if (!stage("disjointness", minDist > 1e-9 && coneDist > 3.0 * h,
               "min dist to sqrt(-t) Sigma = " + fmt(minDist) + ", cone distance at 0 = " +
                   fmt(coneDist) + " vs 3h = " + fmt(3.0 * h))) {
      return report;
    }
  }

  // Graph decomposition over the self-similar flow: measured envelope of the
  // normal-graph heights.
  {
    double envelope = 0.0;
    bool projected = true;
    for (std::size_t k = 0; k < tracePlus.times.size(); ++k) {
      const double t = tracePlus.times[k];
      if (!(t < 0.0)) continue;
      ProfileCurve scaled = specimen.profile;
      const double lambda = std::sqrt(-t);
      for (Vec2& v : scaled.nodes) v = v * lambda;
      const SurfaceSampleSet& g = tracePlus.surfaces[k];
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (g.radius[i] < 2.0) continue;
        const PolylineProjection proj = project_to_polyline(g.curve[i], scaled.nodes, false);
        if (proj.distance > 0.5) {
          projected = false;
          continue;
        }
        envelope = std::max(envelope, proj.distance * (1.0 + g.radius[i]));
      }
    }
    report.graphEnvelope = envelope;
    stage("graph-decomposition", projected,
          "measured sup |f_t| (1+|x|) = " + fmt(envelope));
    if (!projected) return report;
  }

  // Star-shapedness and injective radial projection at t = 0 for both sides.
  {
    const StarShapedReport ssPlus = star_shaped_check(tracePlus.surfaces.back());
    const StarShapedReport ssMinus = star_shaped_check(traceMinus.surfaces.back());
    report.minXdotNAtZero = std::min(ssPlus.minXdotN, ssMinus.minXdotN);
    if (!stage("star-shaped", ssPlus.pass && ssMinus.pass,
               "min x.n = " + fmt(report.minXdotNAtZero))) {
      return report;
    }
    const RadialProjectionReport rpPlus =
        radial_projection_check(tracePlus.surfaces.back(), cone, report.coneDistanceAtZero);
    const RadialProjectionReport rpMinus =
        radial_projection_check(traceMinus.surfaces.back(), cone, report.coneDistanceAtZero);
    if (!stage("radial-projection", rpPlus.injective && rpMinus.injective,
               "theta intervals (" + fmt(rpPlus.thetaLo) + ", " + fmt(rpPlus.thetaHi) + ") / (" +
                   fmt(rpMinus.thetaLo) + ", " + fmt(rpMinus.thetaHi) + ")")) {
      return report;
    }

    report.separation = separation_report(cone);
    const double thetaLink = cone.linkAngles.front();
    // The two images must be the two components: one interval per side of the
    // link angle, jointly covering (0, pi).
    const double tol = 0.05;
    const bool plusBelow = rpPlus.thetaHi < thetaLink + tol && rpPlus.thetaLo < tol;
    const bool plusAbove = rpPlus.thetaLo > thetaLink - tol && rpPlus.thetaHi > kPi - tol;
    const bool minusBelow = rpMinus.thetaHi < thetaLink + tol && rpMinus.thetaLo < tol;
    const bool minusAbove = rpMinus.thetaLo > thetaLink - tol && rpMinus.thetaHi > kPi - tol;
    const bool covered = (plusBelow && minusAbove) || (plusAbove && minusBelow);
    double gap = 0.0;
    if (covered) {
      const RadialProjectionReport& below = plusBelow ? rpPlus : rpMinus;
      const RadialProjectionReport& above = plusBelow ? rpMinus : rpPlus;
      gap = std::max({below.thetaLo - 0.0, std::abs(below.thetaHi - thetaLink),
                      std::abs(above.thetaLo - thetaLink), kPi - above.thetaHi});
    }
    report.imageCoverageGap = gap;
    if (!stage("separation",
               report.separation.components.size() == 2 && report.separation.linkConnected &&
                   covered,
               "components = " + std::to_string(report.separation.components.size()) +
                   ", coverage gap = " + fmt(gap))) {
      return report;
    }
  }

  report.pass = report.failedStage.empty();
  return report;
}

} // namespace shrinklab
