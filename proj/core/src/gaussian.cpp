#include "shrinklab/gaussian.hpp"

#include <algorithm>
#include <functional>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace shrinklab {

namespace {

constexpr double kPi = std::numbers::pi;

double prefactor(int n, double t0) {
  return n == 1 ? 1.0 / std::sqrt(4.0 * kPi * t0) : 1.0 / (4.0 * kPi * t0);
}

// Upper bound on the Gaussian mass of the surface beyond its truncation
// radius: the far field lies within a thin tube of the asymptote, so its area
// element is bounded by a padded cone (or cylinder) density.
double tail_bound(const SurfaceSampleSet& s, const Vec3& x0, double t0) {
  if (s.closed) return 0.0;
  double bound = 0.0;
  const double c0 = x0.norm();
  auto endContribution = [&](const EndCondition& ec, double rEnd) {
    if (ec.kind != EndCondition::Kind::cone) return 0.0;
    const double rhoEnd = ec.truncationRadius > 0.0 ? ec.truncationRadius : rEnd;
    const double hi = rhoEnd + c0 + 40.0 * std::sqrt(t0) + 1.0;
    const int m = 400;
    const double dr = (hi - rhoEnd) / m;
    double acc = 0.0;
    for (int i = 0; i <= m; ++i) {
      const double rho = rhoEnd + dr * i;
      const double d = std::max(0.0, rho - c0);
      double density;
      if (s.n == 1) {
        density = 1.5;
      } else if (std::isinf(ec.slope) || ec.slope != 0.0) {
        const double theta = ec.polarAngle();
        density = 2.0 * kPi * rho * std::sin(theta) * 1.5;
      } else {
        density = 2.0 * kPi * rEnd * 1.5; // cylinder-like truncation
      }
      const double f = density * std::exp(-d * d / (4.0 * t0));
      acc += (i == 0 || i == m) ? 0.5 * f : f;
    }
    return acc * dr;
  };
  double rFront = 0.0, rBack = 0.0;
  if (!s.curve.empty()) {
    rFront = s.n == 2 ? s.curve.front().y : 0.0;
    rBack = s.n == 2 ? s.curve.back().y : 0.0;
  }
  bound += endContribution(s.endA, rFront);
  bound += endContribution(s.endB, rBack);
  return bound * prefactor(s.n, t0);
}

} // namespace

double bessel_i0_scaled(double z) {
  if (z < 0.0) z = -z;
  if (z < 30.0) {
    return std::cyl_bessel_i(0.0, z) * std::exp(-z);
  }
  const double iz = 1.0 / z;
  const double series = 1.0 + 0.125 * iz + 0.0703125 * iz * iz + 0.0732421875 * iz * iz * iz;
  return series / std::sqrt(2.0 * kPi * z);
}

FValue f_functional(const SurfaceSampleSet& surface, const Vec3& x0, double t0,
                    bool strictTail) {
  if (!(t0 > 0.0)) throw std::invalid_argument("f_functional: t0 must be positive");
  FValue out;
  const double pref = prefactor(surface.n, t0);
  const double inv4t = 1.0 / (4.0 * t0);
  double sum = 0.0;
  if (surface.n == 1) {
    for (std::size_t i = 0; i < surface.size(); ++i) {
      sum += std::exp(-(surface.position[i] - x0).norm2() * inv4t) * surface.weight[i];
    }
  } else {
    const double rho0 = std::hypot(x0.y, x0.z);
    if (rho0 < 1e-14) {
      for (std::size_t i = 0; i < surface.size(); ++i) {
        const double dx = surface.curve[i].x - x0.x;
        const double r = surface.curve[i].y;
        sum += std::exp(-(dx * dx + r * r) * inv4t) * surface.weight[i];
      }
    } else {
      // Azimuthal integral of the kernel on a surface of revolution.
      for (std::size_t i = 0; i < surface.size(); ++i) {
        const double dx = surface.curve[i].x - x0.x;
        const double r = surface.curve[i].y;
        const double z = r * rho0 * 2.0 * inv4t;
        const double nearest = dx * dx + (r - rho0) * (r - rho0);
        sum += std::exp(-nearest * inv4t) * bessel_i0_scaled(z) * surface.weight[i];
      }
    }
  }
  out.value = pref * sum;
  out.tailBound = tail_bound(surface, x0, t0);
  if (strictTail && out.tailBound > 1e-8 * std::max(out.value, 1e-30)) {
    throw std::runtime_error("f_functional: unconverged tail (bound " +
                             std::to_string(out.tailBound) + " vs value " +
                             std::to_string(out.value) + ")");
  }
  return out;
}

namespace {

// Deterministic Nelder-Mead on a small parameter vector.
struct SimplexResult {
  std::vector<double> point;
  double value = -1e300;
  bool converged = false;
  int evaluations = 0;
};

SimplexResult nelder_mead_max(const std::function<double(const std::vector<double>&)>& f,
                              std::vector<double> start, double scale, int maxIter,
                              double tol) {
  const std::size_t d = start.size();
  std::vector<std::vector<double>> pts(d + 1, start);
  std::vector<double> vals(d + 1);
  for (std::size_t i = 0; i < d; ++i) pts[i + 1][i] += scale;
  SimplexResult res;
  for (std::size_t i = 0; i <= d; ++i) {
    vals[i] = f(pts[i]);
    ++res.evaluations;
  }
  auto order = [&]() {
    std::vector<std::size_t> idx(d + 1);
    for (std::size_t i = 0; i <= d; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return vals[a] > vals[b]; });
    std::vector<std::vector<double>> np(d + 1);
    std::vector<double> nv(d + 1);
    for (std::size_t i = 0; i <= d; ++i) { np[i] = pts[idx[i]]; nv[i] = vals[idx[i]]; }
    pts = std::move(np);
    vals = std::move(nv);
  };
  for (int it = 0; it < maxIter; ++it) {
    order();
    double spread = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      spread = std::max(spread, std::abs(pts[d][i] - pts[0][i]));
    }
    if (std::abs(vals[0] - vals[d]) < tol && spread < std::sqrt(tol)) {
      res.converged = true;
      break;
    }
    std::vector<double> centroid(d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t k = 0; k < d; ++k) centroid[k] += pts[i][k] / static_cast<double>(d);
    }
    auto blend = [&](double c) {
      std::vector<double> p(d);
      for (std::size_t k = 0; k < d; ++k) p[k] = centroid[k] + c * (pts[d][k] - centroid[k]);
      return p;
    };
    auto reflected = blend(-1.0);
    const double fr = f(reflected);
    ++res.evaluations;
    if (fr > vals[0]) {
      auto expanded = blend(-2.0);
      const double fe = f(expanded);
      ++res.evaluations;
      if (fe > fr) { pts[d] = expanded; vals[d] = fe; }
      else { pts[d] = reflected; vals[d] = fr; }
    } else if (fr > vals[d - 1]) {
      pts[d] = reflected;
      vals[d] = fr;
    } else {
      auto contracted = blend(0.5);
      const double fc = f(contracted);
      ++res.evaluations;
      if (fc > vals[d]) { pts[d] = contracted; vals[d] = fc; }
      else {
        for (std::size_t i = 1; i <= d; ++i) {
          for (std::size_t k = 0; k < d; ++k) pts[i][k] = 0.5 * (pts[i][k] + pts[0][k]);
          vals[i] = f(pts[i]);
          ++res.evaluations;
        }
      }
    }
  }
  order();
  res.point = pts[0];
  res.value = vals[0];
  return res;
}

} // namespace

EntropyResult entropy(const SurfaceSampleSet& surface, const EntropyBudget& budget) {
  EntropyResult result;
  const int n = surface.n;

  // Scales below the mesh resolution are not quadrature-resolvable; the
  // search domain is log t0 in [-4, 4] intersected with that floor.
  const double t0Floor = std::min(0.25, 25.0 * surface.h * surface.h);
  auto evalParams = [&](const std::vector<double>& q) {
    const double tau = q.back();
    if (tau < -4.0 || tau > 4.0) return -1e300;
    const double t0 = std::max(std::exp(tau), t0Floor);
    Vec3 c{};
    if (n == 1) {
      c = {q[0], q[1], 0.0};
    } else if (q.size() == 2) {
      c = {q[0], 0.0, 0.0};
    } else {
      c = {q[0], q[1], q[2]};
    }
    return f_functional(surface, c, t0, false).value;
  };

  struct Start {
    std::vector<double> q;
    double value;
  };
  std::vector<Start> starts;
  auto addStart = [&](std::vector<double> q) {
    starts.push_back({q, evalParams(q)});
  };

  const double A = budget.centerExtent;
  for (int it0 = 0; it0 < budget.logT0Grid; ++it0) {
    const double tau = -4.0 + 8.0 * it0 / std::max(1, budget.logT0Grid - 1);
    if (n == 2) {
      for (int ic = 0; ic < budget.centerGrid; ++ic) {
        const double a = -A + 2.0 * A * ic / std::max(1, budget.centerGrid - 1);
        addStart({a, tau});
      }
    } else {
      for (int ix = 0; ix < budget.centerGrid; ++ix) {
        for (int iy = 0; iy < budget.centerGrid; ++iy) {
          const double cx = -A + 2.0 * A * ix / std::max(1, budget.centerGrid - 1);
          const double cy = -A + 2.0 * A * iy / std::max(1, budget.centerGrid - 1);
          addStart({cx, cy, tau});
        }
      }
    }
  }
  // Random off-axis probes guard the symmetry reduction of the center search.
  std::mt19937_64 rng(budget.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int k = 0; k < budget.offAxisProbes; ++k) {
    const double px = 2.0 * unit(rng);
    const double py = 2.0 * unit(rng);
    const double pz = n == 2 ? 2.0 * unit(rng) : 0.0;
    const double tau = 2.0 * unit(rng);
    if (n == 2) addStart({px, py, pz, tau});
    else addStart({px, py, tau});
  }

  std::sort(starts.begin(), starts.end(), [](const Start& a, const Start& b) {
    if (a.value != b.value) return a.value > b.value;
    return a.q < b.q;
  });

  bool allConverged = true;
  std::vector<double> bestQ;
  double bestV = -1e300;
  const int nRefine = std::min<std::size_t>(starts.size(), static_cast<std::size_t>(budget.refineTop));
  for (int k = 0; k < nRefine; ++k) {
    SimplexResult r = nelder_mead_max(evalParams, starts[static_cast<std::size_t>(k)].q, 0.25,
                                      budget.maxIterations, budget.tolerance);
    allConverged = allConverged && r.converged;
    result.trace.push_back({r.point, r.value});
    if (r.value > bestV || (r.value == bestV && r.point < bestQ)) {
      bestV = r.value;
      bestQ = r.point;
    }
  }

  // Certificate: the sup dominates the value at the shrinker point (0, 1).
  std::vector<double> origin(n == 2 ? 2 : 3, 0.0);
  const double f01 = evalParams(origin);
  if (f01 - 1e-12 > bestV) {
    bestV = f01;
    bestQ = origin;
  }

  result.lambda = bestV;
  result.status = allConverged ? EntropyResult::Status::converged
                               : EntropyResult::Status::lowerBoundOnly;
  result.t0 = std::max(std::exp(bestQ.back()), t0Floor);
  if (n == 1) result.center = {bestQ[0], bestQ[1], 0.0};
  else if (bestQ.size() == 2) result.center = {bestQ[0], 0.0, 0.0};
  else result.center = {bestQ[0], bestQ[1], bestQ[2]};
  result.tailAtArgmax = f_functional(surface, result.center, result.t0, false).tailBound;
  result.trace.push_back({bestQ, bestV});
  return result;
}

GEvaluation g_derivatives(const SurfaceSampleSet& sigma, const std::vector<double>& f,
                          const Vec3& x0, double t0, double s) {
  if (!(t0 > 0.0)) throw std::invalid_argument("g_derivatives: t0 must be positive");
  if (f.size() != sigma.size()) throw std::invalid_argument("g_derivatives: field size mismatch");
  if (sigma.n == 2 && std::hypot(x0.y, x0.z) > 1e-12) {
    throw std::invalid_argument("g_derivatives: center must lie on the symmetry axis for n=2");
  }
  double fMax = 0.0;
  for (double v : f) fMax = std::max(fMax, std::abs(v));
  double maxA = 0.0;
  for (double a : sigma.normA) maxA = std::max(maxA, a);
  const double validity = 0.4 / std::max(maxA, 1e-12);
  if (std::abs(s) * fMax > validity) {
    throw std::invalid_argument("g_derivatives: |s| exceeds the normal-graph validity bound");
  }

  SurfaceSampleSet gamma;
  if (s == 0.0) {
    gamma = sigma;
  } else if (sigma.n == 2) {
    gamma = geometric_data(normal_graph(sigma, f, s));
  } else {
    PlanarCurve tag;
    tag.closed = sigma.closed;
    gamma = geometric_data(normal_graph(sigma, f, s, tag));
  }

  GEvaluation out;
  out.normalAlignmentMin = 1.0;
  const double pref = prefactor(sigma.n, t0);
  const double inv4t = 1.0 / (4.0 * t0);
  double value = 0.0, ds = 0.0, dt0 = 0.0;
  Vec3 dx0{};
  for (std::size_t i = 0; i < gamma.size(); ++i) {
    const Vec3 rel = gamma.position[i] - x0;
    const double d2 = rel.norm2();
    const double kern = std::exp(-d2 * inv4t) * gamma.weight[i];
    value += kern;
    const double align = sigma.normal[i].dot(gamma.normal[i]);
    out.normalAlignmentMin = std::min(out.normalAlignmentMin, align);
    const double fGamma = f[i] * align;
    ds += fGamma * (gamma.meanCurv[i] - rel.dot(gamma.normal[i]) / (2.0 * t0)) * kern;
    dt0 += (d2 * inv4t / t0 - sigma.n / (2.0 * t0)) * kern;
    dx0 += rel * (kern / (2.0 * t0));
  }
  out.value = pref * value;
  out.ds = pref * ds;
  out.dt0 = pref * dt0;
  out.dx0 = dx0 * pref;
  if (sigma.n == 2) {
    out.dx0.y = 0.0; // exact by rotational symmetry
    out.dx0.z = 0.0;
  }
  return out;
}

namespace {

// Jacobi eigenvalues of a small symmetric matrix.
std::vector<double> jacobi_eigenvalues(double m[5][5], int dim) {
  double a[5][5];
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) a[i][j] = m[i][j];
  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < dim; ++i)
      for (int j = i + 1; j < dim; ++j) off += a[i][j] * a[i][j];
    if (off < 1e-26) break;
    for (int p = 0; p < dim; ++p) {
      for (int q = p + 1; q < dim; ++q) {
        if (std::abs(a[p][q]) < 1e-300) continue;
        const double theta = 0.5 * (a[q][q] - a[p][p]) / a[p][q];
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sSin = t * c;
        for (int k = 0; k < dim; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - sSin * akq;
          a[k][q] = sSin * akp + c * akq;
        }
        for (int k = 0; k < dim; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - sSin * aqk;
          a[q][k] = sSin * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> ev(static_cast<std::size_t>(dim));
  for (int i = 0; i < dim; ++i) ev[static_cast<std::size_t>(i)] = a[i][i];
  std::sort(ev.begin(), ev.end());
  return ev;
}

} // namespace

HessianResult hessian_G_at_critical(const SurfaceSampleSet& sigma,
                                    const std::vector<double>& f, double mu) {
  if (f.size() != sigma.size()) throw std::invalid_argument("hessian: field size mismatch");
  const int nTrans = sigma.n + 1;
  HessianResult out;
  out.dim = nTrans + 2;
  out.prefactor = sigma.n == 1 ? 1.0 / std::sqrt(4.0 * kPi) : 1.0 / (4.0 * kPi);

  // Weighted integrals at (0, 1, 0). On surfaces of revolution the node
  // weight spans the whole azimuthal ring, so transverse normal components
  // enter through their ring averages: <n.e_y> = 0 and <(n.e_y)^2> = n_r^2/2.
  double normF = 0.0, fh = 0.0, hh = 0.0;
  double fy[3] = {0, 0, 0};
  double yy[3][3] = {};
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    const double w = std::exp(-0.25 * sigma.position[i].norm2()) * sigma.weight[i];
    const double H = sigma.meanCurv[i];
    const Vec3& nu = sigma.normal[i];
    normF += f[i] * f[i] * w;
    fh += f[i] * H * w;
    hh += H * H * w;
    if (sigma.n == 2) {
      fy[0] += f[i] * nu.x * w;
      const double nr2 = nu.y * nu.y + nu.z * nu.z;
      yy[0][0] += nu.x * nu.x * w;
      yy[1][1] += 0.5 * nr2 * w;
      yy[2][2] += 0.5 * nr2 * w;
    } else {
      const double nc[3] = {nu.x, nu.y, nu.z};
      for (int a = 0; a < 3; ++a) {
        fy[a] += f[i] * nc[a] * w;
        for (int b = 0; b < 3; ++b) yy[a][b] += nc[a] * nc[b] * w;
      }
    }
  }

  out.crossFH = out.prefactor * fh;
  out.crossFY = 0.0;
  for (int a = 0; a < nTrans; ++a) out.crossFY = std::max(out.crossFY, std::abs(0.5 * out.prefactor * fy[a]));
  if (std::abs(out.crossFH) > 1e-3 || out.crossFY > 1e-3) {
    throw std::runtime_error(
        "hessian_G_at_critical: eigenfunction is not orthogonal to the mean-curvature/"
        "translation directions (cross terms " + std::to_string(out.crossFH) + ", " +
        std::to_string(out.crossFY) + ")");
  }

  // Quadratic form in (y, a, b): translations, dilation, graph direction.
  const int ai = nTrans;      // dilation index
  const int bi = nTrans + 1;  // graph index
  for (int p = 0; p < nTrans; ++p) {
    for (int q = 0; q < nTrans; ++q) {
      out.matrix[p][q] = -0.5 * out.prefactor * yy[p][q];
    }
  }
  out.matrix[ai][ai] = -out.prefactor * hh;
  out.matrix[bi][bi] = mu * out.prefactor * normF;
  out.matrix[ai][bi] = out.matrix[bi][ai] = out.prefactor * fh;
  for (int p = 0; p < nTrans; ++p) {
    out.matrix[p][bi] = out.matrix[bi][p] = 0.5 * out.prefactor * fy[p];
    out.matrix[p][ai] = out.matrix[ai][p] = 0.0;
  }
  out.fDiagonal = out.matrix[bi][bi];
  out.eigenvalues = jacobi_eigenvalues(out.matrix, out.dim);
  out.negativeDefinite = out.eigenvalues.back() < 0.0;
  return out;
}

DensityAudit monotonicity_audit(const FlowTrace& trace, const SpaceTimePoint& x0) {
  DensityAudit audit;
  for (std::size_t k = 0; k < trace.times.size(); ++k) {
    const double t = trace.times[k];
    if (!(x0.t > t)) {
      throw std::invalid_argument("monotonicity_audit: t0 must exceed every trace time");
    }
    const double value = f_functional(trace.surfaces[k], x0.x, x0.t - t, false).value;
    audit.times.push_back(t);
    audit.value.push_back(value);
  }
  for (std::size_t k = 1; k < audit.value.size(); ++k) {
    audit.maxUpwardStep = std::max(audit.maxUpwardStep, audit.value[k] - audit.value[k - 1]);
  }
  for (double v : audit.value) {
    audit.maxDrift = std::max(audit.maxDrift, std::abs(v - audit.value.front()));
  }
  return audit;
}

} // namespace shrinklab
