#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "shrinklab/flow.hpp"
#include "shrinklab/geometry.hpp"

namespace shrinklab {

struct FValue {
  double value = 0.0;
  double tailBound = 0.0; // upper bound on the mass beyond the truncation radius
};

// Gaussian surface area (4 pi t0)^{-n/2} \int e^{-|x-x0|^2/(4 t0)} dmu.
// Off-axis centers on surfaces of revolution integrate the azimuth through a
// scaled Bessel kernel. With strictTail the call rejects quadratures whose
// conical-tail bound exceeds 1e-8 of the value.
FValue f_functional(const SurfaceSampleSet& surface, const Vec3& x0, double t0,
                    bool strictTail = true);

struct EntropyBudget {
  int logT0Grid = 17;     // stations of log t0 in [-4, 4]
  int centerGrid = 9;     // axis (n=2) / per-coordinate (n=1) center stations
  double centerExtent = 4.0;
  int refineTop = 3;      // local searches started from the best grid points
  int offAxisProbes = 8;  // seeded random centers guarding the symmetry reduction
  int maxIterations = 260;
  double tolerance = 1e-11;
  std::uint64_t seed = 0x5eed5eedULL;
};

struct EntropyResult {
  double lambda = 0.0;
  Vec3 center{};
  double t0 = 1.0;
  enum class Status { converged, lowerBoundOnly };
  Status status = Status::lowerBoundOnly;
  double tailAtArgmax = 0.0;
  // (iterate, value) pairs: the best point of every start plus the winner.
  std::vector<std::pair<std::vector<double>, double>> trace;
};

// Entropy sup F over centers and scales: coarse grid, then simplex refinement.
// The result is certified to be >= F(0,1) - 1e-12.
EntropyResult entropy(const SurfaceSampleSet& surface, const EntropyBudget& budget = {});

struct GEvaluation {
  double value = 0.0;
  double dt0 = 0.0;
  double ds = 0.0;
  Vec3 dx0{};
  double normalAlignmentMin = 0.0; // min n_Sigma . n_Gamma over nodes
};

// G(x0, t0, s) with its first variations. `f` is a node field on Sigma and
// Gamma^s is its normal graph scaled by s. Analytic x0-derivatives are
// restricted to centers on the symmetry axis for n = 2.
GEvaluation g_derivatives(const SurfaceSampleSet& sigma, const std::vector<double>& f,
                          const Vec3& x0, double t0, double s);

struct HessianResult {
  int dim = 0;              // (n+1) translation directions + dilation + graph
  double matrix[5][5] = {}; // ordered: y_1..y_{n+1}, a, b
  std::vector<double> eigenvalues;
  bool negativeDefinite = false;
  double crossFH = 0.0;       // (4pi)^{-n/2} \int f H e^{-|x|^2/4} dmu
  double crossFY = 0.0;       // max over translation directions of the f-cross term
  double fDiagonal = 0.0;     // b-direction entry, mu (4pi)^{-n/2} when normalized
  double prefactor = 0.0;     // (4pi)^{-n/2}
};

// Quadratic form of G at the critical point (0, 1, 0) of a shrinker, with the
// cross-term orthogonality checks. Throws if the eigenfunction fails the
// orthogonality the construction guarantees (beyond 1e-3).
HessianResult hessian_G_at_critical(const SurfaceSampleSet& sigma,
                                    const std::vector<double>& f, double mu);

struct DensityAudit {
  std::vector<double> times;
  std::vector<double> value;   // Theta(t)
  double maxUpwardStep = 0.0;  // max increase between consecutive samples
  double maxDrift = 0.0;       // max |Theta(t) - Theta(-1)|
};

// Gaussian density F[(Sigma_t - x0)/sqrt(t0 - t)] along a flow.
DensityAudit monotonicity_audit(const FlowTrace& trace, const SpaceTimePoint& x0);

// Scaled modified Bessel function I0(z) e^{-z}, stable for large z.
double bessel_i0_scaled(double z);

} // namespace shrinklab
