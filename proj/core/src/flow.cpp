#include "shrinklab/flow.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <fstream>
#include <numbers>

#include <nlohmann/json.hpp>

#include "shrinklab/json_writer.hpp"
#include "shrinklab/tridiag.hpp"

namespace shrinklab {

namespace {

double max_norm_a(const SurfaceSampleSet& s) {
  double m = 0.0;
  for (double a : s.normA) m = std::max(m, a);
  return m;
}

double stability_bound(const SurfaceSampleSet& s, const FlowController& c) {
  const double h2 = s.h * s.h;
  const double a = max_norm_a(s);
  return c.dtSafety * h2 / (1.0 + a * a * h2);
}

std::vector<double> gaps(const std::vector<Vec2>& p, bool closed) {
  std::vector<double> g(p.size());
  const std::size_t n = p.size();
  for (std::size_t i = 0; i + 1 < n; ++i) g[i] = (p[i + 1] - p[i]).norm();
  g[n - 1] = closed ? (p[0] - p[n - 1]).norm() : g[n - 2];
  return g;
}

struct Tridiag {
  std::vector<double> lower, diag, upper;
  double cornerLow = 0.0, cornerUp = 0.0; // closed-curve wrap couplings
};

// I - dt * (arclength second difference), non-uniform three-point stencil.
Tridiag implicit_matrix(const std::vector<double>& g, bool closed, double dt) {
  const std::size_t n = g.size();
  Tridiag m;
  m.lower.assign(n, 0.0);
  m.diag.assign(n, 1.0);
  m.upper.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const bool interior = closed || (i > 0 && i + 1 < n);
    if (!interior) continue;
    const double a = (i == 0) ? g[n - 1] : g[i - 1];
    const double b = g[i];
    const double cl = 2.0 / (a * (a + b));
    const double cc = -2.0 / (a * b);
    const double cu = 2.0 / (b * (a + b));
    m.diag[i] = 1.0 - dt * cc;
    if (i == 0) {
      m.cornerUp = -dt * cl; // couples to node n-1
      m.upper[0] = -dt * cu;
    } else if (i + 1 == n && closed) {
      m.lower[i] = -dt * cl;
      m.cornerLow = -dt * cu; // couples to node 0
    } else {
      m.lower[i] = -dt * cl;
      m.upper[i] = -dt * cu;
    }
  }
  return m;
}

} // namespace

void FlowTrace::validate() const {
  if (surfaces.empty() || times.size() != surfaces.size()) {
    throw std::runtime_error("flow trace: times/surfaces mismatch");
  }
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) throw std::runtime_error("flow trace: times not increasing");
  }
  for (const auto& s : surfaces) {
    if (s.size() == 0) throw std::runtime_error("flow trace: empty slice");
  }
  if (status == Status::singular && surfaces.size() >= 3) {
    const std::size_t n = surfaces.size();
    const double a0 = max_norm_a(surfaces[n - 3]);
    const double a1 = max_norm_a(surfaces[n - 2]);
    const double a2 = max_norm_a(surfaces[n - 1]);
    if (!(a0 < a1 && a1 < a2)) {
      throw std::runtime_error("flow trace: singular status without increasing max|A|");
    }
  }
}

SurfaceSampleSet flow_step(const SurfaceSampleSet& surface, double dt,
                           const FlowController& controller) {
  const double bound = stability_bound(surface, controller);
  if (dt > bound * (1.0 + 1e-9)) throw StepRejected(bound);

  const std::size_t n = surface.size();
  const auto& p = surface.curve;
  const auto g = gaps(p, surface.closed);

  std::vector<double> rhsX(n), rhsY(n);
  for (std::size_t i = 0; i < n; ++i) {
    rhsX[i] = p[i].x;
    rhsY[i] = p[i].y;
  }

  std::vector<Vec2> moved(n);
  if (surface.n == 1) {
    Tridiag m = implicit_matrix(g, surface.closed, dt);
    if (surface.closed) {
      auto x = solve_cyclic_tridiagonal(m.lower, m.diag, m.upper, m.cornerLow, m.cornerUp, rhsX);
      auto y = solve_cyclic_tridiagonal(m.lower, m.diag, m.upper, m.cornerLow, m.cornerUp, rhsY);
      for (std::size_t i = 0; i < n; ++i) moved[i] = {x[i], y[i]};
    } else {
      // open curves: ends clamped (identity rows already in place)
      auto x = solve_tridiagonal(m.lower, m.diag, m.upper, rhsX);
      auto y = solve_tridiagonal(m.lower, m.diag, m.upper, rhsY);
      for (std::size_t i = 0; i < n; ++i) moved[i] = {x[i], y[i]};
    }
  } else {
    // Surface of revolution: interior rows implicit in the profile Laplacian,
    // rotational curvature term explicit, poles via the mirrored stencil (the
    // surface Laplacian at the pole is twice the profile second difference),
    // truncated ends clamped.
    const bool axisA = surface.endA.kind == EndCondition::Kind::axis;
    const bool axisB = surface.endB.kind == EndCondition::Kind::axis;
    Tridiag mx = implicit_matrix(g, false, dt);
    Tridiag mr = mx;
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const Vec2 nu = surface.curveNormal[i];
      const double rot = nu.y / p[i].y; // rotational principal curvature
      rhsX[i] -= dt * rot * nu.x;
      rhsY[i] -= dt * rot * nu.y;
    }
    if (axisA) {
      const double a = g[0];
      mx.diag[0] = 1.0 + 4.0 * dt / (a * a);
      mx.upper[0] = -4.0 * dt / (a * a);
      mr.diag[0] = 1.0;
      mr.upper[0] = 0.0;
      rhsY[0] = 0.0;
    }
    if (axisB) {
      const double a = g[n - 2];
      mx.diag[n - 1] = 1.0 + 4.0 * dt / (a * a);
      mx.lower[n - 1] = -4.0 * dt / (a * a);
      mr.diag[n - 1] = 1.0;
      mr.lower[n - 1] = 0.0;
      rhsY[n - 1] = 0.0;
    }
    auto x = solve_tridiagonal(mx.lower, mx.diag, mx.upper, rhsX);
    auto r = solve_tridiagonal(mr.lower, mr.diag, mr.upper, rhsY);
    for (std::size_t i = 0; i < n; ++i) moved[i] = {x[i], std::max(r[i], 0.0)};
    if (axisA) moved[0].y = 0.0;
    if (axisB) moved[n - 1].y = 0.0;
  }

  if (surface.n == 1) {
    PlanarCurve c;
    c.nodes = resample_uniform(moved, surface.closed, n);
    c.closed = surface.closed;
    return geometric_data(c);
  }
  ProfileCurve prof;
  prof.nodes = std::move(moved);
  prof.endA = surface.endA;
  prof.endB = surface.endB;
  if (prof.endB.kind == EndCondition::Kind::cone) {
    prof.endB.truncationRadius = prof.nodes.back().norm();
  }
  if (prof.endA.kind == EndCondition::Kind::cone) {
    prof.endA.truncationRadius = prof.nodes.front().norm();
  }
  prof = resample(prof, n);
  // Keep the orientation of the input across the step.
  const Vec2 t0 = (prof.nodes[1] - prof.nodes[0]).normalized();
  prof.flipNormal = t0.rotatedCW().dot(surface.curveNormal[0]) < 0.0;
  return geometric_data(prof);
}

FlowTrace flow_run(const SurfaceSampleSet& initial, double horizon,
                   const FlowController& controller) {
  FlowTrace trace;
  trace.controller = controller;
  trace.times.push_back(-1.0);
  trace.surfaces.push_back(initial);

  auto diameterOf = [](const SurfaceSampleSet& s) {
    double loX = 1e300, hiX = -1e300, loY = 1e300, hiY = -1e300;
    for (const Vec2& v : s.curve) {
      loX = std::min(loX, v.x); hiX = std::max(hiX, v.x);
      loY = std::min(loY, v.y); hiY = std::max(hiY, v.y);
    }
    return std::hypot(hiX - loX, hiY - loY);
  };
  const double initialDiameter = diameterOf(initial);

  SurfaceSampleSet current = initial;
  double t = -1.0;
  double nextSave = -1.0 + controller.saveInterval;

  // Richardson-style gauge history for the singular-time estimate: the
  // radius-like gauge 1/max|A|^2 decays linearly in t for Type-I blowups.
  std::deque<std::pair<double, double>> gauge; // (t, 1/maxA^2)
  std::vector<double> typeIHistory;
  double tEst = horizon;

  auto estimateT = [&]() {
    if (gauge.size() < 4) return horizon;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (auto& [ti, gi] : gauge) {
      sx += ti; sy += gi; sxx += ti * ti; sxy += ti * gi;
    }
    const double m = static_cast<double>(gauge.size());
    const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    if (slope >= -1e-14) return horizon;
    const auto& [tl, gl] = gauge.back();
    return tl - gl / slope;
  };

  const std::size_t nodeCap = static_cast<std::size_t>(
      controller.refineFactor * static_cast<double>(initial.size()));
  for (std::size_t step = 0; step < controller.maxSteps; ++step) {
    // Keep the curvature resolved: refine the sampling when max|A| h grows.
    {
      const double q = max_norm_a(current) * current.h;
      if (q > controller.qualityA && current.size() < nodeCap) {
        const auto target = std::min(
            nodeCap, static_cast<std::size_t>(std::ceil(
                         static_cast<double>(current.size()) * q / (0.5 * controller.qualityA))));
        if (current.n == 1) {
          PlanarCurve c;
          c.nodes = resample_uniform(current.curve, current.closed, target);
          c.closed = current.closed;
          current = geometric_data(c);
        } else {
          ProfileCurve p;
          p.nodes = current.curve;
          p.endA = current.endA;
          p.endB = current.endB;
          p = resample(p, target);
          const Vec2 t0v = (p.nodes[1] - p.nodes[0]).normalized();
          p.flipNormal = t0v.rotatedCW().dot(current.curveNormal[0]) < 0.0;
          current = geometric_data(p);
        }
      }
    }
    const double maxA = max_norm_a(current);
    const double gaugeNow = 1.0 / (maxA * maxA + 1e-300);
    gauge.emplace_back(t, gaugeNow);
    if (gauge.size() > 16) gauge.pop_front();
    tEst = estimateT();
    bool singular = maxA > controller.blowupNormA ||
                    (current.size() >= nodeCap && maxA * current.h > 2.0 * controller.qualityA);
    // Imminent extinction: the surface has collapsed to a small neighborhood
    // and the Type-I gauge extrapolates inside the horizon. A first-order
    // integrator lags the exact law near extinction, so waiting for the raw
    // max|A| trigger would creep past the horizon instead.
    if (!singular && maxA > 30.0 && diameterOf(current) < 0.1 * initialDiameter &&
        gauge.size() >= 8 && tEst < horizon + controller.saveInterval) {
      singular = true;
    }
    if (!singular && maxA > 50.0 && tEst < horizon) {
      const double q = maxA * maxA * (tEst - t);
      typeIHistory.push_back(q);
      if (typeIHistory.size() > 8) {
        std::vector<double> h = typeIHistory;
        std::nth_element(h.begin(), h.begin() + static_cast<std::ptrdiff_t>(h.size() / 2), h.end());
        const double median = h[h.size() / 2];
        if (q > controller.typeIFactor * median && median > 0.0) singular = true;
      }
    }
    if (singular) {
      trace.status = FlowTrace::Status::singular;
      trace.singularTimeEst = std::min(tEst, horizon);
      // Midpoint of the high-curvature region (transverse components vanish
      // by the rotational symmetry for n = 2).
      double loX = 1e300, hiX = -1e300, loY = 1e300, hiY = -1e300;
      for (std::size_t i = 0; i < current.size(); ++i) {
        if (current.normA[i] >= 0.7 * maxA) {
          loX = std::min(loX, current.curve[i].x);
          hiX = std::max(hiX, current.curve[i].x);
          loY = std::min(loY, current.curve[i].y);
          hiY = std::max(hiY, current.curve[i].y);
        }
      }
      if (hiX >= loX) {
        trace.singularCenterEst = current.n == 2
                                      ? Vec3{0.5 * (loX + hiX), 0.0, 0.0}
                                      : Vec3{0.5 * (loX + hiX), 0.5 * (loY + hiY), 0.0};
      }
      if (trace.times.back() < t) {
        trace.times.push_back(t);
        trace.surfaces.push_back(current);
      }
      trace.stepsTaken = step;
      return trace;
    }
    if (t >= horizon - 1e-12) break;

    double dt = std::min(stability_bound(current, controller) * 0.999, controller.dtMax);
    dt = std::min(dt, horizon - t);
    bool saveAfter = false;
    if (t + dt >= nextSave - 1e-12) {
      dt = std::min(dt, std::max(nextSave - t, 1e-12));
      saveAfter = true;
    }
    current = flow_step(current, dt, controller);
    t += dt;
    trace.stepsTaken = step + 1;
    if (std::getenv("SHRINKLAB_DEBUG_FLOW") && step % 1000 == 0) {
      std::fprintf(stderr, "step=%zu t=%.9f dt=%.3e h=%.3e maxA=%.3e N=%zu\n", step, t, dt,
                   current.h, max_norm_a(current), current.size());
    }
    if (saveAfter || t >= horizon - 1e-12) {
      trace.times.push_back(t);
      trace.surfaces.push_back(current);
      if (saveAfter) nextSave += controller.saveInterval;
    }
  }
  trace.status = FlowTrace::Status::reachedHorizon;
  if (trace.times.back() < t - 1e-12) {
    trace.times.push_back(t);
    trace.surfaces.push_back(current);
  }
  return trace;
}

std::vector<RescaledSlice> parabolic_rescale(const FlowTrace& trace, const SpaceTimePoint& x0) {
  if (trace.surfaces.empty()) throw std::invalid_argument("empty trace");
  if (trace.surfaces.front().n == 2 && std::hypot(x0.x.y, x0.x.z) > 1e-12) {
    throw std::invalid_argument("parabolic_rescale: center must lie on the symmetry axis");
  }
  std::vector<RescaledSlice> out;
  for (std::size_t k = 0; k < trace.times.size(); ++k) {
    const double t = trace.times[k];
    if (!(x0.t > t)) continue;
    const double lambda = 1.0 / std::sqrt(x0.t - t);
    const SurfaceSampleSet& s = trace.surfaces[k];
    RescaledSlice slice;
    slice.s = -std::log(x0.t - t);
    SurfaceSampleSet& r = slice.surface;
    r = s;
    const double wScale = std::pow(lambda, s.n);
    for (std::size_t i = 0; i < s.size(); ++i) {
      r.position[i] = (s.position[i] - x0.x) * lambda;
      r.curve[i] = {r.position[i].x, s.n == 2 ? r.position[i].y : r.position[i].y};
      if (s.n == 2) r.curve[i] = {r.position[i].x, std::hypot(r.position[i].y, r.position[i].z)};
      else r.curve[i] = {r.position[i].x, r.position[i].y};
      r.meanCurv[i] = s.meanCurv[i] / lambda;
      r.normA[i] = s.normA[i] / lambda;
      r.weight[i] = s.weight[i] * wScale;
      r.radius[i] = r.position[i].norm();
      if (s.n == 2) {
        r.kProfile[i] = s.kProfile[i] / lambda;
        r.kRotational[i] = s.kRotational[i] / lambda;
      }
    }
    r.h = s.h * lambda;
    if (r.endA.kind == EndCondition::Kind::cone) r.endA.truncationRadius *= lambda;
    if (r.endB.kind == EndCondition::Kind::cone) r.endB.truncationRadius *= lambda;
    double defect = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
      const double res = r.meanCurv[i] - 0.5 * r.position[i].dot(r.normal[i]);
      defect += res * res * std::exp(-0.25 * r.position[i].norm2()) * r.weight[i];
    }
    slice.stationarityDefect = defect;
    out.push_back(std::move(slice));
  }
  return out;
}

AvoidanceReport avoidance_audit(const FlowTrace& a, const FlowTrace& b) {
  const std::size_t n = std::min(a.times.size(), b.times.size());
  AvoidanceReport rep;
  for (std::size_t k = 0; k < n; ++k) {
    if (std::abs(a.times[k] - b.times[k]) > 1e-9) {
      throw std::invalid_argument("avoidance_audit: traces need a common time grid");
    }
    rep.times.push_back(a.times[k]);
    rep.distance.push_back(surface_distance(a.surfaces[k], b.surfaces[k]));
  }
  if (rep.distance.empty()) throw std::invalid_argument("avoidance_audit: empty overlap");
  rep.initialDistance = rep.distance.front();
  for (std::size_t k = 0; k < rep.distance.size(); ++k) {
    rep.maxDropFromInitial = std::max(rep.maxDropFromInitial, rep.initialDistance - rep.distance[k]);
    if (k > 0) {
      rep.maxStepDecrease = std::max(rep.maxStepDecrease, rep.distance[k - 1] - rep.distance[k]);
    }
  }
  return rep;
}

BarrierReport cone_barrier_audit(const FlowTrace& trace, const Cone& cone, double K) {
  const std::vector<double> rGrid{1.5, 2.0, 3.0, 4.0, 6.0, 8.0};
  const int n2 = 2 * trace.surfaces.front().n;
  BarrierReport rep;

  auto fitK = [&](const SurfaceSampleSet& s) {
    double needed = 1.0;
    for (double R : rGrid) {
      for (std::size_t i = 0; i < s.size(); ++i) {
        if (distance_to_cone(s.position[i], cone) > 1.0 / R) {
          needed = std::max(needed, s.radius[i] / R);
        }
      }
    }
    return needed * (1.0 + 1e-9);
  };

  if (K <= 0.0) K = fitK(trace.surfaces.front());
  rep.K = K;
  // Hypothesis at t = -1.
  rep.hypothesisOk = true;
  for (double R : rGrid) {
    const TubeReport tr = tube_membership(trace.surfaces.front(), cone, 1.0 / R, K * R);
    if (!tr.inside) rep.hypothesisOk = false;
  }
  if (!rep.hypothesisOk) {
    throw std::invalid_argument("cone_barrier_audit: initial tube hypothesis fails at the given K");
  }

  auto passes = [&](double Kp) {
    for (std::size_t k = 0; k < trace.times.size(); ++k) {
      const double shift = n2 * (trace.times[k] + 1.0);
      for (double R : rGrid) {
        const double ball = Kp * (R + std::sqrt(shift));
        const double tube = Kp * (1.0 + shift) / R;
        const TubeReport tr = tube_membership(trace.surfaces[k], cone, tube, ball);
        if (!tr.inside) return false;
      }
    }
    return true;
  };

  double lo = 1.0, hi = std::max(4.0 * K, 4.0);
  int guard = 0;
  while (!passes(hi) && ++guard < 16) hi *= 2.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (passes(mid)) hi = mid; else lo = mid;
  }
  rep.Kprime = hi;

  for (std::size_t k = 0; k < trace.times.size(); ++k) {
    const double shift = n2 * (trace.times[k] + 1.0);
    double worst = 0.0;
    for (double R : rGrid) {
      const double ball = K * (R + std::sqrt(shift));
      const double tube = K * (1.0 + shift) / R;
      const TubeReport tr = tube_membership(trace.surfaces[k], cone, tube, ball);
      worst = std::max(worst, tr.worstViolation);
    }
    rep.times.push_back(trace.times[k]);
    rep.worstViolationAtK.push_back(worst);
  }
  return rep;
}

void write_trace(const std::string& directory, const FlowTrace& trace) {
  namespace fs = std::filesystem;
  fs::create_directories(directory);
  JsonWriter w;
  w.beginObject();
  w.field("status", trace.status == FlowTrace::Status::singular      ? "singular"
                    : trace.status == FlowTrace::Status::reachedHorizon ? "reached-horizon"
                                                                        : "running");
  w.field("singularTimeEst", trace.singularTimeEst);
  w.beginArray("singularCenterEst")
      .element(trace.singularCenterEst.x)
      .element(trace.singularCenterEst.y)
      .element(trace.singularCenterEst.z)
      .endArray();
  w.field("stepsTaken", static_cast<long long>(trace.stepsTaken));
  w.beginObject("controller")
      .field("dtSafety", trace.controller.dtSafety)
      .field("dtMax", trace.controller.dtMax)
      .field("blowupNormA", trace.controller.blowupNormA)
      .field("saveInterval", trace.controller.saveInterval)
      .endObject();
  w.field("times", trace.times);
  w.beginArray("slices");
  for (std::size_t k = 0; k < trace.surfaces.size(); ++k) {
    char name[32];
    std::snprintf(name, sizeof(name), "slice_%04zu.csv", k);
    w.element(std::string(name));
    const SurfaceSampleSet& s = trace.surfaces[k];
    if (s.n == 1) {
      PlanarCurve c;
      c.nodes = s.curve;
      c.closed = s.closed;
      write_surface_csv((fs::path(directory) / name).string(), c);
    } else {
      ProfileCurve p;
      p.nodes = s.curve;
      p.endA = s.endA;
      p.endB = s.endB;
      write_surface_csv((fs::path(directory) / name).string(), p);
    }
  }
  w.endArray();
  w.endObject();
  w.writeFile((fs::path(directory) / "manifest.json").string());
}

FlowTrace read_trace(const std::string& directory) {
  namespace fs = std::filesystem;
  std::ifstream f(fs::path(directory) / "manifest.json");
  if (!f) throw std::runtime_error("cannot open trace manifest in " + directory);
  nlohmann::json j;
  f >> j;
  FlowTrace trace;
  const std::string status = j.at("status").get<std::string>();
  trace.status = status == "singular"          ? FlowTrace::Status::singular
                 : status == "reached-horizon" ? FlowTrace::Status::reachedHorizon
                                               : FlowTrace::Status::running;
  trace.singularTimeEst = j.value("singularTimeEst", 0.0);
  if (j.contains("singularCenterEst")) {
    auto c = j["singularCenterEst"];
    trace.singularCenterEst = {c[0].get<double>(), c[1].get<double>(), c[2].get<double>()};
  }
  trace.times = j.at("times").get<std::vector<double>>();
  for (const auto& name : j.at("slices")) {
    LoadedSurface s = read_surface_csv((fs::path(directory) / name.get<std::string>()).string());
    if (s.profile) orient_outward(*s.profile);
    trace.surfaces.push_back(s.sample());
  }
  trace.validate();
  return trace;
}

} // namespace shrinklab
