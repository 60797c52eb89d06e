#pragma once

#include <vector>

#include "shrinklab/flow.hpp"
#include "shrinklab/geometry.hpp"

namespace shrinklab {

// Shrinker mean curvature S = 2(t0 - t) H - (x - x0).n of a slice, together
// with the barrier weight eta = 1 + |x|^2 + 2n(t + 1).
struct SMCField {
  std::vector<double> value;
  std::vector<double> eta;
  SpaceTimePoint reference;
  double time = 0.0;
};

SMCField smc(const SurfaceSampleSet& surface, const SpaceTimePoint& x0, double t);

struct EvolutionResidualReport {
  std::vector<double> times;       // interior saved times
  std::vector<double> maxResidual; // max |dS/dt - Lap S - |A|^2 S| per time
  double overallMax = 0.0;
};

// Residual of the Jacobi-type evolution of S along the flow. The material
// time derivative uses nearest-point projection between consecutive saved
// slices (rejection radius 2h).
EvolutionResidualReport smc_evolution_residual(const FlowTrace& trace, const SpaceTimePoint& x0);

struct LowerBoundReport {
  bool initialHypothesis = false; // S >= c (1+|x|^2)^{-alpha} at t = -1
  bool pass = false;
  double worstMargin = 0.0; // min over nodes/times of S eta^alpha - c
  std::size_t worstTimeIndex = 0;
  std::size_t worstNode = 0;
  std::vector<double> perTimeMin;
};

// Propagation audit of the lower bound S >= c eta^{-alpha}.
LowerBoundReport lower_bound_audit(const FlowTrace& trace, const SpaceTimePoint& x0, double c,
                                   double alpha, double tol = 1e-9);

struct RatioReport {
  bool pass = false;
  bool hypothesisBreach = false; // S <= 0 encountered where the bound is evaluated
  double maxRatio = 0.0;         // max |A| / (mTilde c^{-1} eta_R^alpha S)
  double mTilde = 0.0;
  std::vector<double> perTimeMax;
};

// Curvature-ratio audit |A| <= c^{-1} mTilde eta_R^alpha S. When mTilde is not
// supplied (<= 0) it is measured from the trace.
RatioReport curvature_ratio_audit(const FlowTrace& trace, const SpaceTimePoint& x0, double c,
                                  double alpha, double R, double mTilde = 0.0,
                                  double tol = 1e-6);

struct MaxPrincipleInput {
  std::vector<std::vector<double>> u;        // one field per saved slice
  std::vector<std::vector<double>> b;        // zeroth-order coefficient
  std::vector<std::vector<double>> aTangent; // drift along arclength (may be empty)
  double c0 = 0.0;
  double R = 0.0;
  double weightT = 0.0; // reference time of the Gaussian weight (default: after the trace)
};

struct MaxPrincipleReport {
  bool boundaryHypothesis = false; // u >= c0 on the parabolic boundary
  bool pass = false;               // inf u >= c0 e^{M1 (t+1)} on every slice
  double worstMargin = 0.0;
  double m0 = 0.0; // sup |a|^2 + |b|
  double m1 = 0.0; // min{inf b, 0}
  double hypothesisIWorst = 0.0; // most negative (d/dt - Lap - a.grad - b) u
  std::vector<double> weightedIntegrals; // per time, the hypothesis (iii) integrand mass
};

// Audit of the weighted non-compact maximum principle: boundary hypothesis,
// integrability report, and the propagated infimum bound.
MaxPrincipleReport max_principle_audit(const FlowTrace& trace, const MaxPrincipleInput& input,
                                       double tol = 1e-9);

} // namespace shrinklab
