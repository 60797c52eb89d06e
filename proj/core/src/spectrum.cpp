#include "shrinklab/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "shrinklab/tridiag.hpp"

namespace shrinklab {

namespace {

constexpr double kPi = std::numbers::pi;

// Gaussian-weighted measure density along the generating curve.
double weight_density(const SurfaceSampleSet& s, std::size_t i) {
  const double gauss = std::exp(-0.25 * s.position[i].norm2());
  return s.n == 2 ? gauss * 2.0 * kPi * s.curve[i].y : gauss;
}

} // namespace

OperatorPencil assemble_operator(const SurfaceSampleSet& surface, double R) {
  OperatorPencil pencil;
  pencil.truncationRadius = R;
  const std::size_t n = surface.size();

  double extent = 0.0;
  for (double r : surface.radius) extent = std::max(extent, r);
  if (R >= extent && !surface.closed &&
      (surface.endA.kind == EndCondition::Kind::cone ||
       surface.endB.kind == EndCondition::Kind::cone)) {
    pencil.clipped = true;
  }
  if (surface.closed || (surface.endA.kind == EndCondition::Kind::axis &&
                         surface.endB.kind == EndCondition::Kind::axis)) {
    pencil.clipped = true; // compact surface: the cut is vacuous
  }

  std::vector<bool> active(n);
  for (std::size_t i = 0; i < n; ++i) {
    active[i] = surface.closed || surface.radius[i] < R ||
                (surface.endA.kind == EndCondition::Kind::axis && i == 0) ||
                (surface.endB.kind == EndCondition::Kind::axis && i + 1 == n);
  }
  // Dirichlet rows are simply dropped; keep a contiguous run of dofs.
  std::size_t first = 0, last = n;
  if (!surface.closed) {
    first = 0;
    while (first < n && !active[first]) ++first;
    last = n;
    while (last > first && !active[last - 1]) --last;
    if (last - first < 8) throw std::invalid_argument("assemble_operator: truncation leaves too few nodes");
  }
  const std::size_t m = surface.closed ? n : last - first;
  pencil.nodeIndex.resize(m);
  for (std::size_t k = 0; k < m; ++k) pencil.nodeIndex[k] = surface.closed ? k : first + k;

  pencil.diag.assign(m, 0.0);
  pencil.off.assign(m > 0 ? m - 1 : 0, 0.0);
  pencil.mass.assign(m, 0.0);
  pencil.cyclic = surface.closed;

  auto addElement = [&](std::size_t ka, std::size_t kb) {
    const std::size_t ia = pencil.nodeIndex[ka];
    const std::size_t ib = pencil.nodeIndex[kb];
    const double h = (surface.curve[ib] - surface.curve[ia]).norm();
    const double wMid = 0.5 * (weight_density(surface, ia) + weight_density(surface, ib));
    const double k = wMid / h; // P1 stiffness
    pencil.diag[ka] += k;
    pencil.diag[kb] += k;
    if (kb == ka + 1) pencil.off[ka] -= k;
    else pencil.cornerOff -= k; // wrap element of a closed curve
    pencil.mass[ka] += 0.5 * wMid * h;
    pencil.mass[kb] += 0.5 * wMid * h;
  };
  for (std::size_t k = 0; k + 1 < m; ++k) addElement(k, k + 1);
  if (surface.closed) addElement(m - 1, 0);
  // Dirichlet closure: the element reaching into the first dropped node pins
  // its value to zero but still stiffens the boundary dof (without it the cut
  // would act as a free boundary and the R-monotonicity of mu would be lost).
  auto pinBoundary = [&](std::size_t kLive, std::size_t iDropped) {
    const std::size_t iLive = pencil.nodeIndex[kLive];
    const double h = (surface.curve[iDropped] - surface.curve[iLive]).norm();
    const double wMid = 0.5 * (weight_density(surface, iLive) + weight_density(surface, iDropped));
    pencil.diag[kLive] += wMid / h;
    pencil.mass[kLive] += 0.5 * wMid * h;
  };
  if (!surface.closed) {
    if (first > 0) pinBoundary(0, first - 1);
    if (last < n) pinBoundary(m - 1, last);
  }

  // Potential: -(|A|^2 + 1/2) against the lumped mass.
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t i = pencil.nodeIndex[k];
    pencil.diag[k] -= (surface.normA[i] * surface.normA[i] + 0.5) * pencil.mass[k];
  }
  return pencil;
}

namespace {

struct EigenPair {
  double value = 0.0;
  std::vector<double> vec;
};

// Smallest eigenpair of (K - P) v = mu M v via inverse iteration shifted
// below the spectrum (Gershgorin bound).
EigenPair lowest_pencil_eigenpair(const OperatorPencil& p) {
  const std::size_t m = p.diag.size();
  double shift = 1e300;
  for (std::size_t i = 0; i < m; ++i) {
    double row = p.diag[i];
    double offsum = 0.0;
    if (i > 0) offsum += std::abs(p.off[i - 1]);
    if (i + 1 < m) offsum += std::abs(p.off[i]);
    if (p.cyclic && (i == 0 || i + 1 == m)) offsum += std::abs(p.cornerOff);
    shift = std::min(shift, (row - offsum) / p.mass[i]);
  }
  shift -= 0.5;

  std::vector<double> lower(m, 0.0), diag(m), upper(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    diag[i] = p.diag[i] - shift * p.mass[i];
    if (i + 1 < m) {
      lower[i + 1] = p.off[i];
      upper[i] = p.off[i];
    }
  }

  std::vector<double> v(m, 1.0);
  double mu = 0.0;
  for (int it = 0; it < 400; ++it) {
    std::vector<double> rhs(m);
    for (std::size_t i = 0; i < m; ++i) rhs[i] = p.mass[i] * v[i];
    std::vector<double> w = p.cyclic
                                ? solve_cyclic_tridiagonal(lower, diag, upper, p.cornerOff,
                                                           p.cornerOff, rhs)
                                : solve_tridiagonal(lower, diag, upper, rhs);
    double norm = 0.0;
    for (std::size_t i = 0; i < m; ++i) norm += w[i] * w[i] * p.mass[i];
    norm = std::sqrt(norm);
    for (double& x : w) x /= norm;
    // Rayleigh quotient of w.
    double num = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      double Av = p.diag[i] * w[i];
      if (i > 0) Av += p.off[i - 1] * w[i - 1];
      if (i + 1 < m) Av += p.off[i] * w[i + 1];
      if (p.cyclic) {
        if (i == 0) Av += p.cornerOff * w[m - 1];
        if (i + 1 == m) Av += p.cornerOff * w[0];
      }
      num += w[i] * Av;
    }
    const double muNew = num;
    const bool done = it > 2 && std::abs(muNew - mu) < 1e-14 * (1.0 + std::abs(muNew));
    mu = muNew;
    v = std::move(w);
    if (done) break;
  }
  double sum = 0.0;
  for (double x : v) sum += x;
  if (sum < 0.0) for (double& x : v) x = -x;
  EigenPair out;
  out.value = mu;
  out.vec = std::move(v);
  return out;
}

} // namespace

SpectralResult lowest_eigenpair(const SurfaceSampleSet& surface,
                                const std::vector<double>& rSchedule) {
  if (rSchedule.empty()) throw std::invalid_argument("lowest_eigenpair: empty R schedule");
  SpectralResult out;
  EigenPair pair;
  OperatorPencil pencil;
  for (double R : rSchedule) {
    pencil = assemble_operator(surface, R);
    pair = lowest_pencil_eigenpair(pencil);
    out.muByR.push_back({R, pair.value});
  }
  out.mu = out.muByR.back().second;
  out.truncationRadius = rSchedule.back();
  out.rayleigh = pair.value;

  for (double x : pair.vec) {
    if (!(x > 0.0)) {
      throw std::runtime_error("lowest_eigenpair: eigenvector not positive (Perron violation)");
    }
  }
  out.f.assign(surface.size(), 0.0);
  for (std::size_t k = 0; k < pencil.nodeIndex.size(); ++k) {
    out.f[pencil.nodeIndex[k]] = pair.vec[k];
  }

  out.beta = 0.5 * std::min(1.0, std::max(0.0, -out.mu - 1.0));

  // Envelope constants and the decay fit, windowed by the surface extent and
  // kept away from any Dirichlet layer.
  double extent = 0.0;
  for (double r : surface.radius) extent = std::max(extent, r);
  const double rEff = std::min(out.truncationRadius, extent);
  const double rCut = 0.8 * rEff;
  double c0 = 1.0, c1 = 1.0;
  const auto deriv = field_derivatives(surface, out.f);
  const bool conical = surface.endA.kind == EndCondition::Kind::cone ||
                       surface.endB.kind == EndCondition::Kind::cone;
  double sxx = 0, sx = 0, sy = 0, sxy = 0, syy = 0, cnt = 0;
  for (std::size_t i = 0; i < surface.size(); ++i) {
    if (out.f[i] <= 0.0 || surface.radius[i] > rCut) continue;
    const double q = 1.0 + surface.radius[i] * surface.radius[i];
    c0 = std::max(c0, out.f[i] / std::pow(q, 0.5 + out.mu + out.beta));
    c0 = std::max(c0, std::pow(q, 0.5 + out.mu - out.beta) / out.f[i]);
    c1 = std::max(c1, std::abs(deriv.d1[i]) / std::pow(q, out.mu + out.beta));
    if (conical && surface.radius[i] >= 0.45 * rEff) {
      const double lx = std::log(surface.radius[i]);
      const double ly = std::log(out.f[i]);
      sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly; syy += ly * ly; cnt += 1;
    }
  }
  out.C0 = c0;
  out.C1 = c1;
  if (cnt > 8) {
    const double det = cnt * sxx - sx * sx;
    out.decaySlope = (cnt * sxy - sx * sy) / det;
    const double intercept = (sy - out.decaySlope * sx) / cnt;
    double ss = 0.0;
    // residual variance for a crude standard error
    ss = syy - intercept * sy - out.decaySlope * sxy;
    const double sigma2 = std::max(ss, 0.0) / std::max(cnt - 2.0, 1.0);
    out.decaySlopeStderr = std::sqrt(sigma2 * cnt / det);
    out.decayFitDone = true;
  }
  return out;
}

double weighted_poincare_test(const SurfaceSampleSet& surface, int trials, std::uint64_t seed,
                              double residualTol) {
  const double residual = shrinker_residual(surface).maxAbs;
  if (residual > residualTol) {
    throw std::invalid_argument("weighted_poincare_test: surface is not a shrinker (residual " +
                                std::to_string(residual) + ")");
  }
  const std::size_t n = surface.size();
  std::vector<double> s(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) s[i] = s[i - 1] + (surface.curve[i] - surface.curve[i - 1]).norm();
  const double total = s.back();

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::uniform_int_distribution<int> nBumps(1, 3);

  double worst = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    const int k = nBumps(rng);
    std::vector<double> center(static_cast<std::size_t>(k)), width(static_cast<std::size_t>(k)),
        amp(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j) {
      width[static_cast<std::size_t>(j)] = 0.3 + 1.7 * uni(rng);
      const double margin = surface.closed ? 0.0 : width[static_cast<std::size_t>(j)] + 0.05 * total;
      center[static_cast<std::size_t>(j)] = margin + (total - 2.0 * margin) * uni(rng);
      amp[static_cast<std::size_t>(j)] = 2.0 * uni(rng) - 1.0;
    }
    double lhs = 0.0, grad = 0.0, l2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double phi = 0.0, dphi = 0.0;
      for (int j = 0; j < k; ++j) {
        double u = (s[i] - center[static_cast<std::size_t>(j)]) / width[static_cast<std::size_t>(j)];
        if (surface.closed) {
          // nearest periodic image
          u -= total / width[static_cast<std::size_t>(j)] *
               std::round((s[i] - center[static_cast<std::size_t>(j)]) / total);
        }
        if (std::abs(u) >= 1.0) continue;
        const double bump = std::exp(-1.0 / (1.0 - u * u));
        phi += amp[static_cast<std::size_t>(j)] * bump;
        dphi += amp[static_cast<std::size_t>(j)] * bump *
                (-2.0 * u / ((1.0 - u * u) * (1.0 - u * u))) / width[static_cast<std::size_t>(j)];
      }
      if (phi == 0.0 && dphi == 0.0) continue;
      const double w = std::exp(-0.25 * surface.position[i].norm2()) * surface.weight[i];
      lhs += phi * phi * surface.position[i].norm2() * w;
      grad += dphi * dphi * w;
      l2 += phi * phi * w;
    }
    if (l2 <= 0.0) continue;
    const double rhs = 16.0 * grad + 4.0 * surface.n * l2;
    worst = std::max(worst, lhs / rhs);
  }
  return worst;
}

PerturbationSpec build_perturbation(const SurfaceSampleSet& sigma, const SpectralResult& spectral,
                                    double epsilon, const Cone* cone) {
  PerturbationSpec spec;
  spec.epsilon = epsilon;

  double maxF = 0.0;
  for (double v : spectral.f) maxF = std::max(maxF, v);
  double maxA = 0.0;
  for (double a : sigma.normA) maxA = std::max(maxA, a);
  const double tubularRadius = 0.4 / std::max(maxA, 1e-12);
  spec.maxAdmissibleEps = tubularRadius / std::max(maxF, 1e-300);
  spec.validity = std::abs(epsilon) * maxF < tubularRadius;
  if (!spec.validity) {
    throw std::invalid_argument("build_perturbation: |eps| exceeds the admissible bound " +
                                std::to_string(spec.maxAdmissibleEps));
  }

  if (sigma.n == 2) {
    spec.profile = normal_graph(sigma, spectral.f, epsilon);
    spec.surface = geometric_data(spec.profile);
    spec.embeddedGraph = polyline_is_simple(spec.profile.nodes, false);
  } else {
    PlanarCurve tag;
    tag.closed = sigma.closed;
    spec.curve = normal_graph(sigma, spectral.f, epsilon, tag);
    spec.surface = geometric_data(spec.curve);
    spec.embeddedGraph = polyline_is_simple(spec.curve.nodes, sigma.closed);
  }

  // Tube condition against the asymptotic cone over a grid of R.
  if (cone != nullptr) {
    const std::vector<double> rGrid{1.5, 2.0, 3.0, 4.0, 6.0, 8.0};
    double needed = 1.0;
    for (double R : rGrid) {
      for (std::size_t i = 0; i < spec.surface.size(); ++i) {
        if (distance_to_cone(spec.surface.position[i], *cone) > 1.0 / R) {
          needed = std::max(needed, spec.surface.radius[i] / R);
        }
      }
    }
    spec.tubeK = needed * (1.0 + 1e-9);
    spec.tubeOk = true;
    for (double R : rGrid) {
      if (!tube_membership(spec.surface, *cone, 1.0 / R, spec.tubeK * R).inside) {
        spec.tubeOk = false;
      }
    }
  }

  // Far-field local-graph condition: tangent spread within balls of radius
  // kappa |x| stays small.
  {
    const double kappa = 0.2;
    double worst = 0.0;
    const auto& nodes = sigma.n == 2 ? spec.profile.nodes : spec.curve.nodes;
    const std::size_t n = nodes.size();
    for (std::size_t i = 0; i < n; i += 7) {
      const double rho = nodes[i].norm();
      if (rho < 3.0) continue;
      const double radius = kappa * rho;
      Vec2 t0{};
      bool haveT0 = false;
      for (std::size_t j = 1; j < n; ++j) {
        if ((nodes[j] - nodes[i]).norm() > radius) continue;
        const Vec2 t = (nodes[j] - nodes[j - 1]).normalized();
        if (!haveT0) {
          t0 = t;
          haveT0 = true;
        } else {
          const double cross = std::abs(t0.x * t.y - t0.y * t.x);
          const double dot = t0.dot(t);
          if (dot > 0.0) worst = std::max(worst, cross / dot);
          else worst = 10.0; // folded within the window
        }
      }
    }
    spec.localGraphGradient = worst;
  }

  // Shrinker mean curvature floor with the suitable normal: S = 2H - x.n at
  // the space-time origin and t = -1.
  {
    double floorPlus = 1e300, floorMinus = 1e300;
    for (std::size_t i = 0; i < spec.surface.size(); ++i) {
      const double S = 2.0 * spec.surface.meanCurv[i] -
                       spec.surface.position[i].dot(spec.surface.normal[i]);
      const double scale = std::pow(1.0 + spec.surface.position[i].norm2(), -spectral.mu);
      floorPlus = std::min(floorPlus, S * scale);
      floorMinus = std::min(floorMinus, -S * scale);
    }
    if (floorPlus >= floorMinus) {
      spec.smcSign = 1;
      spec.smcFloor = floorPlus;
    } else {
      spec.smcSign = -1;
      spec.smcFloor = floorMinus;
    }
    spec.smcFloorBound = -spectral.mu * std::abs(epsilon) / spectral.C0;
    spec.smcFloorOk = epsilon == 0.0 ? spec.smcFloor >= -1e-12
                                     : spec.smcFloor >= spec.smcFloorBound - 1e-12;
  }
  return spec;
}

EntropyDecreaseTable entropy_decrease_check(const SurfaceSampleSet& sigma,
                                            const SpectralResult& spectral,
                                            const std::vector<double>& epsGrid,
                                            const EntropyBudget& budget) {
  EntropyDecreaseTable table;
  const EntropyResult base = entropy(sigma, budget);
  table.lambdaSigma = base.lambda;
  table.conclusive = base.status == EntropyResult::Status::converged;
  table.strictDecrease = true;

  double sE4 = 0.0, sDE2 = 0.0;
  for (double eps : epsGrid) {
    EntropyDecreaseRow row;
    row.epsilon = eps;
    if (eps == 0.0) {
      row.lambda = base.lambda;
      row.delta = 0.0;
      row.converged = table.conclusive;
    } else {
      const PerturbationSpec spec = build_perturbation(sigma, spectral, eps);
      const EntropyResult er = entropy(spec.surface, budget);
      row.lambda = er.lambda;
      row.delta = er.lambda - base.lambda;
      row.converged = er.status == EntropyResult::Status::converged;
      table.conclusive = table.conclusive && row.converged;
      if (!(row.delta < 0.0)) table.strictDecrease = false;
      sE4 += eps * eps * eps * eps;
      sDE2 += row.delta * eps * eps;
    }
    table.rows.push_back(row);
  }
  table.quadraticCoefficient = sE4 > 0.0 ? sDE2 / sE4 : 0.0;
  const double pref = sigma.n == 1 ? 1.0 / std::sqrt(4.0 * kPi) : 1.0 / (4.0 * kPi);
  table.hessianPrediction = 0.5 * spectral.mu * pref;
  table.predictionRatio = table.hessianPrediction != 0.0
                              ? table.quadraticCoefficient / table.hessianPrediction
                              : 0.0;
  return table;
}

} // namespace shrinklab
