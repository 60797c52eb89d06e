#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "shrinklab/geometry.hpp"

namespace shrinklab {

struct FlowController {
  double dtSafety = 0.4;    // dt <= dtSafety h^2 / (1 + max|A|^2 h^2)
  double dtMax = 5e-3;
  double blowupNormA = 1e3; // singularity trigger on max |A|
  double typeIFactor = 10.0;
  double saveInterval = 0.05;
  double qualityA = 0.35;   // refine when max|A| h exceeds this
  double refineFactor = 4.0; // node-count headroom for refinement
  std::size_t maxSteps = 4000000;
};

struct FlowTrace {
  std::vector<double> times;               // saved slice times, starting at -1
  std::vector<SurfaceSampleSet> surfaces;  // one sample set per saved time
  FlowController controller;
  enum class Status { running, reachedHorizon, singular };
  Status status = Status::running;
  double singularTimeEst = 0.0;
  Vec3 singularCenterEst{};
  std::size_t stepsTaken = 0;

  void validate() const;
};

struct StepRejected : std::runtime_error {
  explicit StepRejected(double suggested)
      : std::runtime_error("time step exceeds the stability bound"), suggestedDt(suggested) {}
  double suggestedDt;
};

// One semi-implicit mean curvature flow step: the arclength Laplacian of the
// position is implicit (tridiagonal solve), the rotational curvature term of
// profiles is explicit, truncated ends are clamped, and the result is
// resampled to uniform arclength. Throws StepRejected when dt violates the
// controller bound.
SurfaceSampleSet flow_step(const SurfaceSampleSet& surface, double dt,
                           const FlowController& controller = {});

// Integrate from t = -1 until the horizon or a detected singularity.
FlowTrace flow_run(const SurfaceSampleSet& initial, double horizon,
                   const FlowController& controller = {});

struct RescaledSlice {
  double s = 0.0; // -log(t0 - t)
  SurfaceSampleSet surface;
  double stationarityDefect = 0.0; // \int (H - x.n/2)^2 e^{-|x|^2/4} dmu
};

// Parabolic rescaling of the trace about X0; for n = 2 the center must lie on
// the symmetry axis.
std::vector<RescaledSlice> parabolic_rescale(const FlowTrace& trace, const SpaceTimePoint& x0);

struct AvoidanceReport {
  std::vector<double> times;
  std::vector<double> distance;
  double initialDistance = 0.0;
  double maxDropFromInitial = 0.0; // max over t of d(-1) - d(t)
  double maxStepDecrease = 0.0;    // max over consecutive samples of d(t_k) - d(t_{k+1})
};

AvoidanceReport avoidance_audit(const FlowTrace& a, const FlowTrace& b);

struct BarrierReport {
  double K = 0.0;      // fitted (or supplied) initial tube constant
  double Kprime = 0.0; // smallest constant passing the propagated inclusion
  bool hypothesisOk = false;
  std::vector<double> times;
  std::vector<double> worstViolationAtK; // tube excess at K' = K, per time (not clamped)
};

// Cone barrier audit: hypothesis Gamma_{-1} \ B_{KR} in T_{1/R}(C) on a grid
// of R, then the propagated inclusion with the smallest passing K'.
BarrierReport cone_barrier_audit(const FlowTrace& trace, const Cone& cone, double K = 0.0);

// Trace I/O: one surface CSV per saved slice plus a JSON manifest.
void write_trace(const std::string& directory, const FlowTrace& trace);
FlowTrace read_trace(const std::string& directory);

} // namespace shrinklab
