#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "shrinklab/gaussian.hpp"
#include "shrinklab/geometry.hpp"

namespace shrinklab {

// Discrete pencil of the stability operator restricted to rotationally
// invariant functions: symmetric tridiagonal stiffness-potential matrix
// against a lumped Gaussian-weighted mass, with a Dirichlet cut at the
// truncation radius.
struct OperatorPencil {
  std::vector<double> diag, off; // K - P (off[i] couples dof i and i+1)
  std::vector<double> mass;      // lumped weighted mass
  double cornerOff = 0.0;        // wrap coupling for closed curves
  bool cyclic = false;
  std::vector<std::size_t> nodeIndex; // dof -> surface node
  double truncationRadius = 0.0;
  bool clipped = false; // R exceeded the surface extent
};

OperatorPencil assemble_operator(const SurfaceSampleSet& surface, double R);

struct SpectralResult {
  double mu = 0.0;
  std::vector<double> f;  // node field on the full surface (0 beyond the cut)
  double truncationRadius = 0.0;
  std::vector<std::pair<double, double>> muByR;
  double rayleigh = 0.0;  // quotient of the returned eigenvector
  // Decay fit of log f against log |x| over the outer window (conical ends
  // only; slope NaN otherwise).
  double decaySlope = 0.0;
  double decaySlopeStderr = 0.0;
  bool decayFitDone = false;
  double beta = 0.0; // (1/2) min{1, -mu - 1}
  double C0 = 1.0;   // measured envelope constants of the eigenfunction
  double C1 = 1.0;
};

SpectralResult lowest_eigenpair(const SurfaceSampleSet& surface,
                                const std::vector<double>& rSchedule);

// Worst LHS/RHS ratio of the weighted inequality
//   int phi^2 |x|^2 w <= 16 int |grad phi|^2 w + 4 n int phi^2 w
// over seeded random compactly supported bump combinations. Requires the
// surface to satisfy the shrinker relation (residual <= residualTol).
double weighted_poincare_test(const SurfaceSampleSet& surface, int trials, std::uint64_t seed,
                              double residualTol = 1e-4);

struct PerturbationSpec {
  double epsilon = 0.0;
  SurfaceSampleSet surface; // Gamma^eps
  ProfileCurve profile;     // generating curve of Gamma^eps (n = 2)
  PlanarCurve curve;        // n = 1
  bool validity = false;    // |eps| max f below the measured tubular radius
  double maxAdmissibleEps = 0.0;
  int smcSign = 1;          // orientation choice making the floor positive
  double smcFloor = 0.0;    // min S^{O,-1} (1+|x|^2)^{-mu}
  double smcFloorBound = 0.0; // -mu |eps| / C0
  bool smcFloorOk = false;
  bool embeddedGraph = false; // the perturbed generating curve is simple
  double tubeK = 0.0;         // fitted K with Gamma^eps \ B_{KR} in T_{1/R}
  bool tubeOk = false;
  double localGraphGradient = 0.0; // measured far-field graph gradient bound
};

PerturbationSpec build_perturbation(const SurfaceSampleSet& sigma, const SpectralResult& spectral,
                                    double epsilon, const Cone* cone = nullptr);

struct EntropyDecreaseRow {
  double epsilon = 0.0;
  double lambda = 0.0;
  double delta = 0.0; // lambda[Gamma^eps] - lambda[Sigma]
  bool converged = false;
};

struct EntropyDecreaseTable {
  double lambdaSigma = 0.0;
  std::vector<EntropyDecreaseRow> rows;
  bool strictDecrease = false; // every eps != 0 row has delta < 0
  bool conclusive = false;     // all optimizer runs converged
  double quadraticCoefficient = 0.0; // LS fit of delta against eps^2
  double hessianPrediction = 0.0;    // (1/2) mu (4 pi)^{-n/2}
  double predictionRatio = 0.0;
};

EntropyDecreaseTable entropy_decrease_check(const SurfaceSampleSet& sigma,
                                            const SpectralResult& spectral,
                                            const std::vector<double>& epsGrid,
                                            const EntropyBudget& budget = {});

} // namespace shrinklab
