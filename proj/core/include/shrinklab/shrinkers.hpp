#pragma once

#include <string>
#include <vector>

#include "shrinklab/geometry.hpp"

namespace shrinklab {

enum class CanonicalKind { plane, sphere, cylinder, line, circle };

// Exact sample of a standard self-shrinker (analytic normals and curvatures).
// `resolution` is the node count; `extent` truncates the non-compact kinds at
// this distance from the origin.
SurfaceSampleSet canonical_shrinker(CanonicalKind kind, int n, int resolution,
                                    double extent = 12.0);

// Generating curves of the canonical shrinkers, for the discretized pipeline.
PlanarCurve canonical_curve(CanonicalKind kind, int resolution, double extent = 12.0);
ProfileCurve canonical_profile(CanonicalKind kind, int resolution, double extent = 12.0);

struct ConeFitResult {
  Cone cone;
  double fitError = 0.0;       // max over window of distance-to-cone / |x|
  double fitErrorInner = 0.0;  // same measure on the inner half of the window
  double fitErrorOuter = 0.0;  // ... and on the outer half
  bool hasCone = false;
  std::string diagnostic;
};

// Least-squares fit of the asymptote over the trailing window of each
// truncated end (polar angle against 1/rho^2, matching the 1/R tube decay of
// conical shrinker ends). Closed surfaces and cylinder-like ends are flagged
// no-cone.
ConeFitResult asymptotic_cone(const ProfileCurve& profile, double windowFraction);

enum class ShootFamily {
  equator,    // start at (0, sqrt(2)+param) with horizontal tangent, even in x
  axis,       // start on the axis at (param, 0), perpendicular to it
  coneInward  // start on the asymptote with link angle `param` at rho = rmax
              // and integrate inward; the unstable end mode is stable in this
              // direction, so this is the family that reaches residual-grade
              // asymptotically conical specimens
};

struct ShootResult {
  enum class Status { ok, shootFailed, refinementNeeded, noCone };
  Status status = Status::shootFailed;
  ProfileCurve profile;
  double residual = 0.0; // max |H - x.n/2| recomputed by the geometry pipeline
  double shootParam = 0.0;
  ShootFamily family = ShootFamily::equator;
  ConeFitResult coneFit;
  std::string diagnostic;

  bool ok() const { return status == Status::ok; }
};

// Integrate the arclength form of the rotationally symmetric shrinker
// equation from the initial condition indexed by `param`, then re-verify the
// profile through geometric_data. `tol` bounds the recomputed residual (the
// output spacing refines until it is met).
ShootResult shoot_rotsym_shrinker(double param, double rmax, double tol,
                                  ShootFamily family = ShootFamily::equator,
                                  double outputSpacing = 2e-3);

// End behavior of a single shot, used to organize parameter sweeps. A shot
// `curled` when the tangent turned more than pi/2 away from the radial
// direction after having pointed outward: the sign of `curl` records which
// way the unstable mode bent the end, and flips across a conical escape.
struct ShotOutcome {
  enum class Kind { escaped, curled, axisHit, axisCrash, wandered, failed };
  Kind kind = Kind::failed;
  double curl = 0.0;
  double finalTheta = 0.0;
  double finalRho = 0.0;
};

ShotOutcome classify_shot(double param, double rmax, ShootFamily family);

// Sweep a parameter interval, bisect every sign change of the curl, and
// return the conical specimens found (residual verified at `tol`).
std::vector<ShootResult> sweep_conical_specimens(double paramLo, double paramHi,
                                                 int coarseSteps, double rmax, double tol,
                                                 ShootFamily family,
                                                 double outputSpacing = 2e-3);

// The pinned non-flat asymptotically conical specimen used across the test
// and experiment suites (axis-family shot, deterministic).
ShootResult reference_specimen(double rmax = 10.0, double tol = 1e-6,
                               double outputSpacing = 2e-3);

} // namespace shrinklab
