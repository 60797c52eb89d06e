#pragma once

#include <string>
#include <vector>

#include "shrinklab/flow.hpp"
#include "shrinklab/gaussian.hpp"
#include "shrinklab/geometry.hpp"
#include "shrinklab/shrinkers.hpp"
#include "shrinklab/smc.hpp"
#include "shrinklab/spectrum.hpp"

namespace shrinklab {

struct StarShapedReport {
  bool pass = false;
  double minXdotN = 0.0;
  std::size_t worstNode = 0;
};

// min over nodes of x.n; star-shaped iff strictly positive.
StarShapedReport star_shaped_check(const SurfaceSampleSet& surface);

struct RadialProjectionReport {
  bool injective = false;
  bool monotone = false;
  double thetaLo = 0.0, thetaHi = 0.0; // image interval of the polar angle
  double minStep = 0.0;                // smallest |dtheta| along the profile
  std::size_t offendingNode = 0;       // first non-monotone arc, if any
  bool endpointsMatchLink = false;
  double endpointMismatch = 0.0;
};

// Injectivity of the radial projection in the rotationally symmetric
// reduction: the polar angle must be strictly monotone along the profile.
// Preconditions: star-shaped and strictly disjoint from the cone.
RadialProjectionReport radial_projection_check(const SurfaceSampleSet& surface, const Cone& cone,
                                               double minConeDistance);

struct ComponentInfo {
  double lo = 0.0, hi = 0.0; // polar angle interval
  std::string type;          // "cap" or "band"
};

struct LinkReport {
  Cone link;
  std::vector<ComponentInfo> components;
  bool linkConnected = false;
};

// Components of S^2 minus the link circles, by angle intervals.
LinkReport separation_report(const Cone& cone);

// ---------------------------------------------------------------------------
// End-to-end pipeline

struct PipelineStage {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct PipelineReport {
  bool pass = false;
  std::string failedStage; // empty when pass
  std::vector<PipelineStage> stages;

  // Measured quantities for the record.
  double residual = 0.0;
  double lambdaSigma = 0.0;
  double lambdaCylinder = 0.0;
  double mu = 0.0;
  double epsilon = 0.0;
  EntropyDecreaseTable entropyTable;
  double smcFloorPlus = 0.0, smcFloorMinus = 0.0;
  double minDistSelfSimilar = 0.0; // min over saved t < 0 of dist(Gamma_t, sqrt(-t) Sigma)
  double coneDistanceAtZero = 0.0;
  double minXdotNAtZero = 0.0;
  double graphEnvelope = 0.0; // measured sup of |f_t| (1+|x|)
  LinkReport separation;
  double imageCoverageGap = 0.0; // mismatch between the two images and S^2 \ link
};

struct PipelineConfig {
  double residualTol = 1e-5;
  double horizon = 0.0;
  double saveInterval = 0.05;
  std::size_t flowNodes = 900;
  EntropyBudget entropyBudget;
  std::vector<double> rSchedule{10.0, 15.0, 20.0, 30.0};
};

// The full small-entropy topology experiment: preconditions, spectral data,
// two-sided perturbations, both flows to t = 0, shrinker-mean-curvature and
// disjointness audits, star-shapedness, radial projection, and the component
// count of the sphere minus the link. Every stage is recorded; the report
// pinpoints the first failing stage.
PipelineReport theorem_pipeline(const ShootResult& specimen, const PipelineConfig& config = {});

} // namespace shrinklab
