#include "shrinklab/smc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace shrinklab {

namespace {

double eta_weight(const Vec3& x, double t, int n) {
  return 1.0 + x.norm2() + 2.0 * n * (t + 1.0);
}

// Largest audited radius of a slice: the diffusive layer of the artificial
// far-field clamp (parabolic width with a safety factor, plus a few nodes)
// is excluded; the cone-barrier audit certifies that region instead.
double audited_radius_limit(const SurfaceSampleSet& s, double t) {
  double trunc = 0.0;
  if (s.endA.kind == EndCondition::Kind::cone) trunc = std::max(trunc, s.endA.truncationRadius);
  if (s.endB.kind == EndCondition::Kind::cone) trunc = std::max(trunc, s.endB.truncationRadius);
  if (trunc <= 0.0) return 1e300;
  return trunc - 4.0 * std::sqrt(std::max(0.0, t + 1.0)) - 0.5 - 5.0 * s.h;
}

std::vector<double> smc_values(const SurfaceSampleSet& s, const SpaceTimePoint& x0, double t) {
  std::vector<double> v(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    v[i] = 2.0 * (x0.t - t) * s.meanCurv[i] - (s.position[i] - x0.x).dot(s.normal[i]);
  }
  return v;
}

// Sample a node field of `from` at the nearest-point projections of the nodes
// of `at`. The rejection radius covers both the mesh width and the normal
// motion over the time gap.
std::vector<double> project_field(const SurfaceSampleSet& at, const SurfaceSampleSet& from,
                                  const std::vector<double>& field, double timeGap) {
  std::vector<double> out(at.size());
  double maxH = 0.0;
  for (double h : from.meanCurv) maxH = std::max(maxH, std::abs(h));
  const double reject = 2.0 * std::max(at.h, from.h) + 1.5 * std::abs(timeGap) * maxH + 1e-12;
  for (std::size_t i = 0; i < at.size(); ++i) {
    const PolylineProjection proj = project_to_polyline(at.curve[i], from.curve, from.closed);
    if (proj.distance > reject) {
      throw std::runtime_error("slice correspondence lost: projection distance " +
                               std::to_string(proj.distance));
    }
    out[i] = interpolate_field(field, proj, from.closed);
  }
  return out;
}

} // namespace

SMCField smc(const SurfaceSampleSet& surface, const SpaceTimePoint& x0, double t) {
  SMCField field;
  field.reference = x0;
  field.time = t;
  field.value = smc_values(surface, x0, t);
  field.eta.resize(surface.size());
  for (std::size_t i = 0; i < surface.size(); ++i) {
    field.eta[i] = eta_weight(surface.position[i], t, surface.n);
  }
  return field;
}

EvolutionResidualReport smc_evolution_residual(const FlowTrace& trace, const SpaceTimePoint& x0) {
  if (trace.surfaces.size() < 3) {
    throw std::invalid_argument("smc_evolution_residual: need at least 3 saved slices");
  }
  EvolutionResidualReport rep;
  for (std::size_t k = 1; k + 1 < trace.surfaces.size(); ++k) {
    const SurfaceSampleSet& prev = trace.surfaces[k - 1];
    const SurfaceSampleSet& cur = trace.surfaces[k];
    const SurfaceSampleSet& next = trace.surfaces[k + 1];
    const double dtSpan = trace.times[k + 1] - trace.times[k - 1];

    const auto sPrev = project_field(cur, prev, smc_values(prev, x0, trace.times[k - 1]),
                                     trace.times[k] - trace.times[k - 1]);
    const auto sNext = project_field(cur, next, smc_values(next, x0, trace.times[k + 1]),
                                     trace.times[k + 1] - trace.times[k]);
    const auto sCur = smc_values(cur, x0, trace.times[k]);
    const auto lap = surface_laplacian(cur, sCur);

    double worst = 0.0;
    // End stencils of open slices see the clamped boundary; skip a margin.
    const std::size_t margin = cur.closed ? 0 : 3;
    const double rLim = audited_radius_limit(cur, trace.times[k]);
    for (std::size_t i = margin; i + margin < cur.size(); ++i) {
      if (cur.radius[i] > rLim) continue;
      const double dSdt = (sNext[i] - sPrev[i]) / dtSpan;
      const double res = dSdt - lap[i] - cur.normA[i] * cur.normA[i] * sCur[i];
      worst = std::max(worst, std::abs(res));
    }
    rep.times.push_back(trace.times[k]);
    rep.maxResidual.push_back(worst);
    rep.overallMax = std::max(rep.overallMax, worst);
  }
  return rep;
}

LowerBoundReport lower_bound_audit(const FlowTrace& trace, const SpaceTimePoint& x0, double c,
                                   double alpha, double tol) {
  if (alpha < 0.0) throw std::invalid_argument("lower_bound_audit: alpha must be >= 0");
  LowerBoundReport rep;
  // Hypothesis on the initial slice: S >= c (1 + |x|^2)^{-alpha}.
  {
    const SurfaceSampleSet& s0 = trace.surfaces.front();
    const auto v = smc_values(s0, x0, trace.times.front());
    const double rLim = audited_radius_limit(s0, trace.times.front());
    rep.initialHypothesis = true;
    for (std::size_t i = 0; i < s0.size(); ++i) {
      if (s0.radius[i] > rLim) continue;
      const double barrier = c * std::pow(1.0 + s0.position[i].norm2(), -alpha);
      if (v[i] < barrier - tol) {
        rep.initialHypothesis = false;
        break;
      }
    }
  }
  if (!rep.initialHypothesis) {
    throw std::invalid_argument("lower_bound_audit: initial slice violates the hypothesis");
  }

  rep.worstMargin = 1e300;
  for (std::size_t k = 0; k < trace.surfaces.size(); ++k) {
    const SurfaceSampleSet& s = trace.surfaces[k];
    const auto v = smc_values(s, x0, trace.times[k]);
    const double rLim = audited_radius_limit(s, trace.times[k]);
    double timeMin = 1e300;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s.radius[i] > rLim) continue;
      const double eta = eta_weight(s.position[i], trace.times[k], s.n);
      const double margin = v[i] * std::pow(eta, alpha) - c;
      if (margin < timeMin) timeMin = margin;
      if (margin < rep.worstMargin) {
        rep.worstMargin = margin;
        rep.worstTimeIndex = k;
        rep.worstNode = i;
      }
    }
    rep.perTimeMin.push_back(timeMin);
  }
  rep.pass = rep.worstMargin >= -tol;
  return rep;
}

RatioReport curvature_ratio_audit(const FlowTrace& trace, const SpaceTimePoint& x0, double c,
                                  double alpha, double R, double mTilde, double tol) {
  if (!(c > 0.0)) throw std::invalid_argument("curvature_ratio_audit: c must be positive");
  RatioReport rep;
  if (mTilde <= 0.0) {
    // Measured trace supremum of |A| + |grad A| + |grad^2 A| outside B_R,
    // maxed with sup |A| on the initial slice.
    double sup = 0.0;
    for (std::size_t k = 0; k < trace.surfaces.size(); ++k) {
      const SurfaceSampleSet& s = trace.surfaces[k];
      const double rLim = audited_radius_limit(s, trace.times[k]);
      const auto d1k1 = field_derivatives(s, s.n == 2 ? s.kProfile : s.normA);
      const auto d1k2 = field_derivatives(s, s.n == 2 ? s.kRotational : s.normA);
      for (std::size_t i = 0; i < s.size(); ++i) {
        if (s.radius[i] <= R || s.radius[i] > rLim) continue;
        const double gradA = std::hypot(d1k1.d1[i], s.n == 2 ? d1k2.d1[i] : 0.0);
        const double grad2A = std::hypot(d1k1.d2[i], s.n == 2 ? d1k2.d2[i] : 0.0);
        sup = std::max(sup, s.normA[i] + gradA + grad2A);
      }
    }
    double supA0 = 0.0;
    for (double a : trace.surfaces.front().normA) supA0 = std::max(supA0, a);
    rep.mTilde = std::max(sup, supA0);
  } else {
    rep.mTilde = mTilde;
  }

  const double n2 = 2.0 * trace.surfaces.front().n;
  for (std::size_t k = 0; k < trace.surfaces.size(); ++k) {
    const SurfaceSampleSet& s = trace.surfaces[k];
    const auto v = smc_values(s, x0, trace.times[k]);
    const double rLim = audited_radius_limit(s, trace.times[k]);
    double timeMax = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s.radius[i] > rLim) continue;
      if (v[i] <= 0.0) {
        if (s.normA[i] > tol) rep.hypothesisBreach = true;
        continue;
      }
      const double etaR = 1.0 + s.position[i].norm2() + R * R + n2 * (trace.times[k] + 1.0);
      const double bound = rep.mTilde / c * std::pow(etaR, alpha) * v[i];
      timeMax = std::max(timeMax, s.normA[i] / bound);
    }
    rep.perTimeMax.push_back(timeMax);
    rep.maxRatio = std::max(rep.maxRatio, timeMax);
  }
  rep.pass = !rep.hypothesisBreach && rep.maxRatio <= 1.0 + tol;
  return rep;
}

MaxPrincipleReport max_principle_audit(const FlowTrace& trace, const MaxPrincipleInput& input,
                                       double tol) {
  const std::size_t nt = trace.surfaces.size();
  if (input.u.size() != nt || input.b.size() != nt) {
    throw std::invalid_argument("max_principle_audit: field/slice mismatch");
  }
  MaxPrincipleReport rep;

  // M0 and M1 from the supplied data.
  double supB = 0.0, infB = 1e300, supA = 0.0;
  for (std::size_t k = 0; k < nt; ++k) {
    for (double b : input.b[k]) {
      supB = std::max(supB, std::abs(b));
      infB = std::min(infB, b);
    }
    if (k < input.aTangent.size()) {
      for (double a : input.aTangent[k]) supA = std::max(supA, std::abs(a));
    }
  }
  rep.m0 = supA * supA + supB;
  rep.m1 = std::min(infB, 0.0);

  // Hypothesis (ii): u >= c0 on the parabolic boundary (initial slice outside
  // B_R plus the lateral shell |x| ~ R over all times).
  rep.boundaryHypothesis = true;
  for (std::size_t k = 0; k < nt; ++k) {
    const SurfaceSampleSet& s = trace.surfaces[k];
    for (std::size_t i = 0; i < s.size(); ++i) {
      const bool initial = (k == 0) && s.radius[i] >= input.R;
      const bool lateral = input.R > 0.0 && std::abs(s.radius[i] - input.R) <= s.h;
      if ((initial || lateral) && input.u[k][i] < input.c0 - tol) {
        rep.boundaryHypothesis = false;
      }
    }
  }
  if (!rep.boundaryHypothesis) {
    throw std::invalid_argument("max_principle_audit: parabolic boundary hypothesis fails");
  }

  // Hypothesis (iii) integrability report, with the Gaussian weight centered
  // at (0, weightT).
  const double tw = input.weightT > trace.times.back()
                        ? input.weightT
                        : trace.times.back() + std::max(1e-3, trace.times.back() - trace.times.front()) * 0.05;
  for (std::size_t k = 0; k < nt; ++k) {
    const SurfaceSampleSet& s = trace.surfaces[k];
    const auto d = field_derivatives(s, input.u[k]);
    const auto lap = surface_laplacian(s, input.u[k]);
    double mass = 0.0;
    const double t0 = tw - trace.times[k];
    const double pref = s.n == 1 ? 1.0 / std::sqrt(4.0 * M_PI * t0) : 1.0 / (4.0 * M_PI * t0);
    // du/dt by projected differences where a neighbor slice exists
    std::vector<double> dudt(s.size(), 0.0);
    if (k + 1 < nt) {
      const auto nextU = [&] {
        std::vector<double> out(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) {
          const auto proj = project_to_polyline(s.curve[i], trace.surfaces[k + 1].curve,
                                                trace.surfaces[k + 1].closed);
          out[i] = interpolate_field(input.u[k + 1], proj, trace.surfaces[k + 1].closed);
        }
        return out;
      }();
      const double dt = trace.times[k + 1] - trace.times[k];
      for (std::size_t i = 0; i < s.size(); ++i) dudt[i] = (nextU[i] - input.u[k][i]) / dt;
    }
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s.radius[i] <= input.R) continue;
      const double u = input.u[k][i];
      const double hess2 = d.d2[i] * d.d2[i] +
                           (s.n == 2 && s.curve[i].y > 1e-12
                                ? std::pow(s.curveNormal[i].x / s.curve[i].y * d.d1[i], 2.0)
                                : 0.0);
      const double integrand = u * u + dudt[i] * dudt[i] + d.d1[i] * d.d1[i] + hess2;
      mass += integrand * pref * std::exp(-s.position[i].norm2() / (4.0 * t0)) * s.weight[i];
    }
    rep.weightedIntegrals.push_back(mass);

    // Hypothesis (i) residual on the interior (measured, not enforced).
    const std::size_t margin = s.closed ? 0 : 3;
    for (std::size_t i = margin; i + margin < s.size(); ++i) {
      if (s.radius[i] <= input.R) continue;
      if (k + 1 >= nt) break;
      const double drift = (k < input.aTangent.size() && !input.aTangent[k].empty())
                               ? input.aTangent[k][i] * d.d1[i]
                               : 0.0;
      const double res = dudt[i] - lap[i] - drift - input.b[k][i] * input.u[k][i];
      rep.hypothesisIWorst = std::min(rep.hypothesisIWorst, res);
    }
  }

  // Conclusion: inf over Sigma_t \ B_R of u >= c0 e^{M1 (t+1)}.
  rep.worstMargin = 1e300;
  for (std::size_t k = 0; k < nt; ++k) {
    const SurfaceSampleSet& s = trace.surfaces[k];
    const double floor = input.c0 * std::exp(rep.m1 * (trace.times[k] + 1.0));
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s.radius[i] <= input.R) continue;
      rep.worstMargin = std::min(rep.worstMargin, input.u[k][i] - floor);
    }
  }
  rep.pass = rep.worstMargin >= -tol;
  return rep;
}

} // namespace shrinklab
