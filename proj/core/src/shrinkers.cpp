#include "shrinklab/shrinkers.hpp"

#include <algorithm>
#include <array>
#include <cstdlib>
#include <cstdio>
#include <cmath>
#include <limits>
#include <algorithm>
#include <numbers>
#include <stdexcept>

namespace shrinklab {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kSqrt2 = std::numbers::sqrt2;

// State (x, r, phi) of the arclength shrinker ODE:
//   x' = cos(phi), r' = sin(phi),
//   phi' = cos(phi)/r + (x sin(phi) - r cos(phi))/2.
using State = std::array<double, 3>;

State ode_rhs(const State& u) {
  const double c = std::cos(u[2]);
  const double s = std::sin(u[2]);
  return {c, s, c / u[1] + 0.5 * (u[0] * s - u[1] * c)};
}

// One Dormand-Prince 5(4) step; returns the embedded error estimate.
double dp54_step(const State& u, double h, State& out) {
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  auto fma3 = [](const State& base, double hh, const State& k) {
    return State{base[0] + hh * k[0], base[1] + hh * k[1], base[2] + hh * k[2]};
  };
  const State k1 = ode_rhs(u);
  const State k2 = ode_rhs(fma3(u, h * a21, k1));
  State t{u[0] + h * (a31 * k1[0] + a32 * k2[0]), u[1] + h * (a31 * k1[1] + a32 * k2[1]),
          u[2] + h * (a31 * k1[2] + a32 * k2[2])};
  const State k3 = ode_rhs(t);
  for (int i = 0; i < 3; ++i) t[i] = u[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
  const State k4 = ode_rhs(t);
  for (int i = 0; i < 3; ++i)
    t[i] = u[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
  const State k5 = ode_rhs(t);
  for (int i = 0; i < 3; ++i)
    t[i] = u[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
  const State k6 = ode_rhs(t);
  for (int i = 0; i < 3; ++i)
    out[i] = u[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
  const State k7 = ode_rhs(out);
  double err = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                          e7 * k7[i]);
    err = std::max(err, std::abs(e));
  }
  return err;
}

struct Trajectory {
  std::vector<Vec2> nodes;       // (x, r) at uniform arclength stations
  ShotOutcome outcome;
  State last{};                  // state at termination
};

// Integrate from `u0` (at arclength s0), emitting nodes every `spacing`.
//
// Outward shots terminate on |x| >= rmax, on the axis, or when they "curl":
// the mismatch psi = phi - theta between tangent angle and polar angle leaves
// the outgoing band |psi| < pi/2 after having entered it. A conical end keeps
// psi -> 0; the unstable e^{rho^2/4} end mode bends psi past +-pi/2 and the
// sign of the curl tells which way, which is what parameter bisection needs.
//
// Inward shots (mode inward) terminate on the axis with `curl` set to the
// landing-angle defect phi + pi/2 (mod 2pi, zero for a perpendicular landing)
// or when they turn back outward; bisection drives that defect to zero.
Trajectory integrate_profile(State u, double s0, double rmax, double spacing,
                             std::vector<Vec2> seed, bool inward) {
  constexpr double atol = 1e-10;
  Trajectory traj;
  traj.nodes = std::move(seed);

  const double sMax = s0 + 8.0 * rmax + 40.0;
  const double rStop = 0.25 * spacing;
  const double rhoStart = std::hypot(u[0], u[1]);
  double s = s0;
  double nextStation = spacing * std::ceil((s0 + 1e-14) / spacing);
  if (nextStation <= s0 + 1e-14) nextStation += spacing;
  double h = 0.5 * spacing;
  bool armed = false;
  double prevSinPhi = std::sin(u[2]);

  auto landingDefect = [&](double phi) {
    return std::remainder(phi + 0.5 * kPi, 2.0 * kPi);
  };

  int guard = 0;
  while (s < sMax) {
    if (++guard > 4000000) { traj.outcome.kind = ShotOutcome::Kind::failed; break; }
    bool hitStation = false;
    double hTry = h;
    if (s + hTry >= nextStation) { hTry = nextStation - s; hitStation = true; }
    // Approach the axis gently so the landing extrapolation stays local.
    if (std::sin(u[2]) < 0.0 && u[1] < 2.0 * spacing) {
      hTry = std::min(hTry, std::max(0.5 * rStop, 0.5 * u[1] / -std::sin(u[2])));
      if (hTry < nextStation - s) hitStation = false;
    }
    State next;
    const double err = dp54_step(u, hTry, next);
    // Error allowance scales with the step so strings of tiny steps cannot
    // accumulate node noise that the curvature stencils would amplify.
    const double allowance = atol * std::clamp(hTry / (0.5 * spacing), 0.02, 1.0);
    if (err > allowance && hTry > 1e-12) {
      h = std::max(1e-12, 0.9 * hTry * std::pow(allowance / err, 0.2));
      continue;
    }
    // accept
    s += hTry;
    u = next;
    if (!hitStation) {
      h = std::min(0.5 * spacing, 0.9 * hTry * std::pow(atol / std::max(err, 1e-300), 0.2));
    }
    if (!std::isfinite(u[0]) || !std::isfinite(u[1]) || !std::isfinite(u[2])) {
      traj.outcome.kind = ShotOutcome::Kind::failed;
      break;
    }
    if (hitStation) {
      traj.nodes.push_back({u[0], u[1]});
      nextStation += spacing;
    }
    const double rho = std::hypot(u[0], u[1]);
    if (!inward && rho >= rmax) {
      traj.outcome.kind = ShotOutcome::Kind::escaped;
      break;
    }
    if (inward && rho >= rhoStart + 0.25) {
      // Turned around without reaching the axis.
      traj.outcome.kind = ShotOutcome::Kind::curled;
      traj.outcome.curl = landingDefect(u[2]);
      break;
    }
    if (inward) {
      // A local minimum of r near the axis is a miss: the profile swings
      // around the pole instead of landing on it. The swing direction
      // (cos(phi) at the perigee) flips sign across a perpendicular landing.
      const double sinPhi = std::sin(u[2]);
      if (prevSinPhi < 0.0 && sinPhi >= 0.0 && u[1] < 0.6) {
        traj.outcome.kind = ShotOutcome::Kind::curled;
        traj.outcome.curl = std::cos(u[2]);
        break;
      }
      prevSinPhi = sinPhi;
    }
    if (u[1] <= rStop && std::sin(u[2]) < 0.0) {
      // Landing point on the axis from the local quadratic of the profile:
      // solve r + sin(phi) ds + (phi'/2) cos(phi) ds^2 = 0 for small ds > 0.
      const double c = std::cos(u[2]), sn = std::sin(u[2]);
      const double dphi = ode_rhs(u)[2];
      double ds = -u[1] / sn;
      const double a2 = 0.5 * dphi * c;
      if (std::abs(a2) > 1e-14) {
        const double disc = sn * sn - 4.0 * a2 * u[1];
        if (disc > 0.0) {
          const double root = (-sn - std::sqrt(disc)) / (2.0 * a2);
          if (root > 0.0 && root < 4.0 * ds) ds = root;
        }
      }
      const double xLand = u[0] + c * ds - 0.5 * dphi * sn * ds * ds;
      const double defect = landingDefect(u[2]);
      const bool clean = std::abs(defect) < 0.15 || std::abs(defect - kPi) < 0.15 ||
                         std::abs(defect + kPi) < 0.15;
      traj.outcome.kind = clean ? ShotOutcome::Kind::axisHit : ShotOutcome::Kind::axisCrash;
      traj.outcome.curl = defect;
      // Keep the node spacing regular next to the landing point.
      while (!traj.nodes.empty() &&
             (traj.nodes.back() - Vec2{xLand, 0.0}).norm() < 0.6 * spacing) {
        traj.nodes.pop_back();
      }
      traj.nodes.push_back({xLand, 0.0});
      break;
    }
    if (!inward) {
      const double theta = std::atan2(u[1], u[0]);
      const double psi = std::remainder(u[2] - theta, 2.0 * kPi);
      if (!armed && std::abs(psi) < 0.5 * kPi - 0.3) armed = true;
      if (armed && std::abs(psi) > 0.5 * kPi + 0.2) {
        traj.outcome.kind = ShotOutcome::Kind::curled;
        traj.outcome.curl = psi;
        break;
      }
    }
  }
  if (s >= sMax && traj.outcome.kind == ShotOutcome::Kind::failed) {
    traj.outcome.kind = ShotOutcome::Kind::wandered;
    traj.outcome.curl = inward ? landingDefect(u[2])
                               : std::remainder(u[2] - std::atan2(u[1], u[0]), 2.0 * kPi);
  }
  traj.last = u;
  if (!traj.nodes.empty()) {
    const Vec2 pEnd = traj.nodes.back();
    traj.outcome.finalRho = pEnd.norm();
    traj.outcome.finalTheta = std::atan2(pEnd.y, pEnd.x);
  }
  return traj;
}

// ---------------------------------------------------------------------------
// Matched two-leg construction for cone-inward shoots.
//
// A single inward pass can place the cap only to within the integrator's
// accumulated noise, which the pole curvature stencil divides by h^2. Instead
// the profile is built from two numerically stable legs -- outward from the
// pole series and inward from the cone seed -- matched at a mid-throat radius
// by a 2x2 Newton iteration in (cap abscissa, link angle). The seam then
// carries only the matching mismatch (~1e-12).

struct LegResult {
  std::vector<Vec2> nodes; // stations, excluding the matching point
  State end{};             // state at r = rMatch
  bool reached = false;
};

// Integrate until r crosses rMatch in the prescribed direction, landing on it
// exactly. Stations every `spacing`.
LegResult integrate_leg(State u, double s0, double rMatch, bool descending,
                        double spacing, double atol, double sBudget,
                        std::vector<Vec2> seed) {
  LegResult leg;
  leg.nodes = std::move(seed);
  double s = s0;
  double nextStation = spacing * std::ceil((s0 + 1e-14) / spacing);
  if (nextStation <= s0 + 1e-14) nextStation += spacing;
  double h = 0.5 * spacing;
  int guard = 0;
  while (s < sBudget) {
    if (++guard > 8000000) return leg;
    const double gapR = descending ? (u[1] - rMatch) : (rMatch - u[1]);
    if (gapR < 1e-13) break;
    bool hitStation = false;
    double hTry = h;
    if (s + hTry >= nextStation) { hTry = nextStation - s; hitStation = true; }
    // Do not step past the matching radius.
    const double sinPhi = std::sin(u[2]);
    const double towards = descending ? -sinPhi : sinPhi;
    if (towards > 1e-6 && gapR < 2.0 * spacing) {
      const double cap = 0.95 * gapR / towards;
      if (cap < hTry) { hTry = cap; hitStation = false; }
    }
    State next;
    const double err = dp54_step(u, hTry, next);
    const double allowance = std::max(atol * std::clamp(hTry / (0.5 * spacing), 0.02, 1.0), 5e-15);
    if (err > allowance && hTry > 1e-13) {
      h = std::max(1e-13, 0.9 * hTry * std::pow(allowance / err, 0.2));
      continue;
    }
    s += hTry;
    u = next;
    if (!hitStation) {
      h = std::min(0.5 * spacing, 0.9 * hTry * std::pow(allowance / std::max(err, 1e-300), 0.2));
    }
    if (!std::isfinite(u[0]) || !std::isfinite(u[1]) || !std::isfinite(u[2])) return leg;
    if (hitStation) {
      leg.nodes.push_back({u[0], u[1]});
      nextStation += spacing;
    }
  }
  leg.end = u;
  leg.reached = std::abs(u[1] - rMatch) < 1e-7;
  return leg;
}

State pole_series_state(double xc, double s0);
State cone_seed_state(double theta, double rmax);

Trajectory shoot_raw(double param, double rmax, ShootFamily family, double spacing) {
  if (family == ShootFamily::equator) {
    const double r0 = kSqrt2 + param;
    if (!(r0 > 0.05)) throw std::invalid_argument("equator shoot needs sqrt(2)+param > 0.05");
    if (std::abs(1.0 / r0 - 0.5 * r0) < 1e-13) {
      // Fixed point of the profile equation: the trajectory is the exact
      // cylinder (integrating it would only excite the unstable mode).
      Trajectory traj;
      const double xEnd = std::sqrt(std::max(rmax * rmax - r0 * r0, 1.0));
      const auto count = static_cast<std::size_t>(std::ceil(xEnd / spacing));
      for (std::size_t i = 0; i <= count; ++i) {
        traj.nodes.push_back({xEnd * static_cast<double>(i) / static_cast<double>(count), r0});
      }
      traj.outcome.kind = ShotOutcome::Kind::escaped;
      traj.outcome.finalRho = std::hypot(xEnd, r0);
      traj.outcome.finalTheta = std::atan2(r0, xEnd);
      traj.last = {xEnd, r0, 0.0};
      return traj;
    }
    State u{0.0, r0, 0.0};
    return integrate_profile(u, 0.0, rmax, spacing, {{0.0, r0}}, false);
  }
  if (family == ShootFamily::axis) {
    // Series start off the removable singularity at the pole.
    const double x0 = param;
    if (!(x0 > 0.0)) throw std::invalid_argument("axis shoot needs param > 0");
    const double kappa = 0.25 * x0;
    const double c3 = kappa / 16.0 - kappa * kappa * kappa / 6.0;
    const double s0 = 1e-3;
    State u{x0 - 0.5 * kappa * s0 * s0, s0 - kappa * kappa * s0 * s0 * s0 / 6.0,
            0.5 * kPi + kappa * s0 + c3 * s0 * s0 * s0};
    return integrate_profile(u, s0, rmax, spacing, {{x0, 0.0}}, false);
  }
  // Cone-inward family: param is the link angle. Seed on the asymptote with
  // its leading 1/rho correction (r = m x + 1/(m x) in graph form) and point
  // the tangent inward; the conical end mode decays in this direction.
  const double theta = param;
  if (!(theta > 0.02 && theta < kPi - 0.02)) {
    throw std::invalid_argument("cone-inward shoot needs a link angle in (0, pi)");
  }
  State u = cone_seed_state(theta, rmax);
  return integrate_profile(u, 0.0, rmax + 2.0, spacing, {{u[0], u[1]}}, true);
}

EndCondition cone_end_from_point(const Vec2& e);

State pole_series_state(double xc, double s0) {
  const double kappa = 0.25 * xc;
  const double c3 = kappa / 16.0 - kappa * kappa * kappa / 6.0;
  return {xc - 0.5 * kappa * s0 * s0, s0 - kappa * kappa * s0 * s0 * s0 / 6.0,
          0.5 * kPi + kappa * s0 + c3 * s0 * s0 * s0};
}

State cone_seed_state(double theta, double rmax) {
  const double st = std::sin(theta);
  const double x0 = rmax * std::cos(theta);
  const double r0 = rmax * st + 1.0 / (rmax * st);
  const Vec2 outwardTangent{std::cos(theta), st - 1.0 / (rmax * rmax * st)};
  return {x0, r0, std::atan2(-outwardTangent.y, -outwardTangent.x)};
}

struct MatchedShoot {
  bool ok = false;
  double mismatch = 0.0;
  double capX = 0.0;
  double theta = 0.0;
  ProfileCurve profile;
};

// Mismatch (position, tangent angle) across the matching radius. The inward
// tangent is reversed so both legs are compared in the pole-to-cone
// orientation.
static std::array<double, 2> matching_defect(const State& outEnd, const State& inEnd) {
  return {inEnd[0] - outEnd[0], std::remainder(inEnd[2] + kPi - outEnd[2], 2.0 * kPi)};
}

MatchedShoot matched_cone_shoot(double theta0, double capX0, double rmax, double spacing) {
  const double rMatch = 0.45;
  const double atolOut = 1e-14, atolIn = 1e-13;
  const double s0 = 5e-4;

  auto outwardLeg = [&](double xc) {
    return integrate_leg(pole_series_state(xc, s0), s0, rMatch, false, spacing, atolOut,
                         4.0, {{xc, 0.0}});
  };
  auto inwardLeg = [&](double th) {
    State seed = cone_seed_state(th, rmax);
    return integrate_leg(seed, 0.0, rMatch, true, spacing, atolIn, 8.0 * rmax + 40.0,
                         {{seed[0], seed[1]}});
  };

  MatchedShoot out;
  const bool debug = std::getenv("SHRINKLAB_DEBUG_MATCH") != nullptr;
  double xc = capX0, th = theta0;
  LegResult lo, li;
  std::array<double, 2> F{1.0, 1.0};
  double fNorm = 1e9;
  for (int it = 0; it < 30; ++it) {
    lo = outwardLeg(xc);
    li = inwardLeg(th);
    if (debug) {
      std::fprintf(stderr, "match it=%d xc=%.15f th=%.15f loR=%d liR=%d loEnd=(%.9f,%.9f,%.6f) liEnd=(%.9f,%.9f,%.6f)\n",
                   it, xc, th, (int)lo.reached, (int)li.reached, lo.end[0], lo.end[1], lo.end[2],
                   li.end[0], li.end[1], li.end[2]);
    }
    if (!lo.reached || !li.reached) return out;
    F = matching_defect(lo.end, li.end);
    fNorm = std::max(std::abs(F[0]), std::abs(F[1]));
    if (debug) std::fprintf(stderr, "  F=(%.3e, %.3e)\n", F[0], F[1]);
    if (fNorm < 3e-13) break;
    // Forward-difference Jacobian.
    const double dxc = 1e-7, dth = 1e-7;
    LegResult loP = outwardLeg(xc + dxc);
    LegResult liP = inwardLeg(th + dth);
    if (!loP.reached || !liP.reached) return out;
    const auto Fx = matching_defect(loP.end, li.end);
    const auto Ft = matching_defect(lo.end, liP.end);
    const double j00 = (Fx[0] - F[0]) / dxc, j01 = (Ft[0] - F[0]) / dth;
    const double j10 = (Fx[1] - F[1]) / dxc, j11 = (Ft[1] - F[1]) / dth;
    const double det = j00 * j11 - j01 * j10;
    if (std::abs(det) < 1e-14) return out;
    double stepX = -(j11 * F[0] - j01 * F[1]) / det;
    double stepT = -(-j10 * F[0] + j00 * F[1]) / det;
    // Keep the iteration inside the basin.
    const double cap = 0.05;
    stepX = std::clamp(stepX, -cap, cap);
    stepT = std::clamp(stepT, -cap, cap);
    xc += stepX;
    th += stepT;
  }
  if (!(fNorm < 1e-10)) return out;

  // Glue: pole leg, averaged seam node, reversed inward leg.
  ProfileCurve profile;
  profile.nodes = lo.nodes;
  const Vec2 seam{0.5 * (lo.end[0] + li.end[0]), 0.5 * (lo.end[1] + li.end[1])};
  while (!profile.nodes.empty() && (profile.nodes.back() - seam).norm() < 0.6 * spacing) {
    profile.nodes.pop_back();
  }
  profile.nodes.push_back(seam);
  std::vector<Vec2> upper(li.nodes.rbegin(), li.nodes.rend());
  std::size_t skip = 0;
  while (skip < upper.size() && (upper[skip] - seam).norm() < 0.6 * spacing) ++skip;
  profile.nodes.insert(profile.nodes.end(), upper.begin() + static_cast<std::ptrdiff_t>(skip),
                       upper.end());
  profile.endA = EndCondition::axis();
  profile.endB = cone_end_from_point(profile.nodes.back());

  out.ok = true;
  out.mismatch = fNorm;
  out.capX = xc;
  out.theta = th;
  out.profile = std::move(profile);
  return out;
}

EndCondition cone_end_from_point(const Vec2& e) {
  const double theta = std::atan2(e.y, e.x);
  double slope;
  if (std::abs(std::cos(theta)) < 1e-12) slope = std::numeric_limits<double>::infinity();
  else slope = std::tan(theta);
  return EndCondition::cone(slope, e.norm());
}

ProfileCurve assemble_profile(const Trajectory& traj, ShootFamily family) {
  ProfileCurve profile;
  const auto& fwd = traj.nodes;
  if (family == ShootFamily::coneInward) {
    profile.nodes.assign(fwd.rbegin(), fwd.rend());
    profile.endA = EndCondition::axis();
    profile.endB = cone_end_from_point(profile.nodes.back());
    return profile;
  }
  if (family == ShootFamily::equator) {
    double rMin = fwd.front().y, rMax2 = rMin;
    for (const Vec2& v : fwd) { rMin = std::min(rMin, v.y); rMax2 = std::max(rMax2, v.y); }
    const bool flat = (rMax2 - rMin) < 1e-7; // cylinder fixed point
    // Even reflection through the starting meridian x = 0.
    profile.nodes.reserve(2 * fwd.size() - 1);
    for (std::size_t i = fwd.size(); i-- > 1;) profile.nodes.push_back({-fwd[i].x, fwd[i].y});
    for (const Vec2& v : fwd) profile.nodes.push_back(v);
    if (traj.outcome.kind == ShotOutcome::Kind::axisHit) {
      profile.endA = EndCondition::axis();
      profile.endB = EndCondition::axis();
    } else if (flat) {
      profile.endA = EndCondition::cone(0.0, fwd.back().norm());
      profile.endB = EndCondition::cone(0.0, fwd.back().norm());
    } else {
      profile.endB = cone_end_from_point(fwd.back());
      profile.endA = EndCondition::cone(-profile.endB.slope, profile.endB.truncationRadius);
    }
  } else {
    profile.nodes = fwd;
    profile.endA = EndCondition::axis();
    if (traj.outcome.kind == ShotOutcome::Kind::axisHit) {
      profile.endB = EndCondition::axis();
    } else {
      profile.endB = cone_end_from_point(fwd.back());
    }
  }
  return profile;
}

} // namespace

SurfaceSampleSet canonical_shrinker(CanonicalKind kind, int n, int resolution, double extent) {
  const bool planarKind = (kind == CanonicalKind::line || kind == CanonicalKind::circle);
  if (planarKind != (n == 1)) {
    throw std::invalid_argument("canonical_shrinker: kind/dimension mismatch");
  }
  if (resolution < 8) throw std::invalid_argument("canonical_shrinker: resolution too small");

  if (n == 1) {
    SurfaceSampleSet out = geometric_data(canonical_curve(kind, resolution, extent));
    // Overwrite with the closed forms: these samples are analytic.
    if (kind == CanonicalKind::circle) {
      for (std::size_t i = 0; i < out.size(); ++i) {
        const Vec2 dir = out.curve[i].normalized();
        out.curveNormal[i] = dir;
        out.normal[i] = {dir.x, dir.y, 0.0};
        out.position[i] = {out.curve[i].x, out.curve[i].y, 0.0};
        out.meanCurv[i] = 1.0 / kSqrt2;
        out.normA[i] = 1.0 / kSqrt2;
      }
    } else {
      for (std::size_t i = 0; i < out.size(); ++i) {
        out.meanCurv[i] = 0.0;
        out.normA[i] = 0.0;
      }
    }
    return out;
  }

  SurfaceSampleSet out = geometric_data(canonical_profile(kind, resolution, extent));
  switch (kind) {
    case CanonicalKind::plane:
      for (std::size_t i = 0; i < out.size(); ++i) {
        out.curveNormal[i] = {1.0, 0.0};
        out.normal[i] = {1.0, 0.0, 0.0};
        out.meanCurv[i] = 0.0;
        out.normA[i] = 0.0;
        out.kProfile[i] = 0.0;
        out.kRotational[i] = 0.0;
      }
      break;
    case CanonicalKind::sphere:
      for (std::size_t i = 0; i < out.size(); ++i) {
        const Vec2 dir = out.curve[i].norm() > 0 ? out.curve[i].normalized() : Vec2{1.0, 0.0};
        const Vec2 nu = (out.curve[i].norm() > 0) ? dir
                        : Vec2{(out.curve[i].x >= 0 ? 1.0 : -1.0), 0.0};
        out.curveNormal[i] = {out.curve[i].x / 2.0, out.curve[i].y / 2.0};
        // normalize exactly against roundoff
        out.curveNormal[i] = out.curveNormal[i].norm() > 0 ? out.curveNormal[i].normalized() : nu;
        out.normal[i] = {out.curveNormal[i].x, out.curveNormal[i].y, 0.0};
        out.meanCurv[i] = 1.0;
        out.kProfile[i] = 0.5;
        out.kRotational[i] = 0.5;
        out.normA[i] = std::sqrt(0.5);
      }
      break;
    case CanonicalKind::cylinder:
      for (std::size_t i = 0; i < out.size(); ++i) {
        out.curveNormal[i] = {0.0, 1.0};
        out.normal[i] = {0.0, 1.0, 0.0};
        out.meanCurv[i] = 1.0 / kSqrt2;
        out.kProfile[i] = 0.0;
        out.kRotational[i] = 1.0 / kSqrt2;
        out.normA[i] = 1.0 / kSqrt2;
      }
      break;
    default: break;
  }
  return out;
}

PlanarCurve canonical_curve(CanonicalKind kind, int resolution, double extent) {
  PlanarCurve c;
  if (kind == CanonicalKind::circle) {
    c.closed = true;
    c.nodes.resize(resolution);
    for (int i = 0; i < resolution; ++i) {
      const double a = 2.0 * kPi * i / resolution;
      c.nodes[i] = {kSqrt2 * std::cos(a), kSqrt2 * std::sin(a)};
    }
  } else if (kind == CanonicalKind::line) {
    c.closed = false;
    c.nodes.resize(resolution);
    for (int i = 0; i < resolution; ++i) {
      c.nodes[i] = {-extent + 2.0 * extent * i / (resolution - 1), 0.0};
    }
  } else {
    throw std::invalid_argument("canonical_curve: planar kinds are line and circle");
  }
  return c;
}

ProfileCurve canonical_profile(CanonicalKind kind, int resolution, double extent) {
  ProfileCurve p;
  switch (kind) {
    case CanonicalKind::plane: {
      p.nodes.resize(resolution);
      for (int i = 0; i < resolution; ++i) {
        p.nodes[i] = {0.0, extent * i / (resolution - 1)};
      }
      p.endA = EndCondition::axis();
      p.endB = EndCondition::cone(std::numeric_limits<double>::infinity(), extent);
      break;
    }
    case CanonicalKind::sphere: {
      p.nodes.resize(resolution);
      for (int i = 0; i < resolution; ++i) {
        const double a = kPi * i / (resolution - 1);
        p.nodes[i] = {2.0 * std::cos(a), 2.0 * std::sin(a)};
      }
      p.nodes.front().y = 0.0;
      p.nodes.back().y = 0.0;
      p.endA = EndCondition::axis();
      p.endB = EndCondition::axis();
      break;
    }
    case CanonicalKind::cylinder: {
      const double half = std::sqrt(std::max(extent * extent - 2.0, 4.0));
      p.nodes.resize(resolution);
      for (int i = 0; i < resolution; ++i) {
        p.nodes[i] = {-half + 2.0 * half * i / (resolution - 1), kSqrt2};
      }
      p.endA = EndCondition::cone(0.0, std::hypot(half, kSqrt2));
      p.endB = EndCondition::cone(0.0, std::hypot(half, kSqrt2));
      p.flipNormal = true; // outward from the axis
      break;
    }
    default:
      throw std::invalid_argument("canonical_profile: revolution kinds are plane, sphere, cylinder");
  }
  return p;
}

ConeFitResult asymptotic_cone(const ProfileCurve& profile, double windowFraction) {
  if (!(windowFraction > 0.0 && windowFraction <= 0.5)) {
    throw std::invalid_argument("asymptotic_cone: window fraction must lie in (0, 0.5]");
  }
  ConeFitResult out;
  const bool coneA = profile.endA.kind == EndCondition::Kind::cone;
  const bool coneB = profile.endB.kind == EndCondition::Kind::cone;
  if (!coneA && !coneB) {
    out.hasCone = false;
    out.diagnostic = "closed surface (no truncated end)";
    return out;
  }

  out.cone.n = 2;
  out.hasCone = true;
  auto fitEnd = [&](bool fromBack) {
    // Gather the trailing window of this end: nodes with rho >= (1-w) rho_end.
    std::vector<Vec2> window;
    const auto& nodes = profile.nodes;
    const double rhoEnd = (fromBack ? nodes.back() : nodes.front()).norm();
    const double rhoMin = (1.0 - windowFraction) * rhoEnd;
    if (fromBack) {
      for (std::size_t i = nodes.size(); i-- > 0;) {
        if (nodes[i].norm() < rhoMin || window.size() > nodes.size() / 2) break;
        window.push_back(nodes[i]);
      }
    } else {
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (nodes[i].norm() < rhoMin || window.size() > nodes.size() / 2) break;
        window.push_back(nodes[i]);
      }
    }
    if (window.size() < 8) {
      out.hasCone = false;
      out.diagnostic = "window too small for a cone fit";
      return;
    }
    // Conical-end detector: |d theta / d rho| rho^2 must decay along the
    // window (constant for cylinder-like ends).
    std::vector<double> detector;
    for (std::size_t i = 0; i + 1 < window.size(); ++i) {
      const double rho0 = window[i].norm(), rho1 = window[i + 1].norm();
      if (std::abs(rho1 - rho0) < 1e-9) continue;
      const double th0 = polar_angle(window[i]), th1 = polar_angle(window[i + 1]);
      const double mid = 0.5 * (rho0 + rho1);
      detector.push_back(std::abs((th1 - th0) / (rho1 - rho0)) * mid * mid);
    }
    if (detector.size() >= 8) {
      double inner = 0.0, outer = 0.0;
      const std::size_t half = detector.size() / 2;
      // window was gathered from the tip inward: front half is the outer part
      for (std::size_t i = 0; i < half; ++i) outer += detector[i];
      for (std::size_t i = half; i < detector.size(); ++i) inner += detector[i];
      outer /= static_cast<double>(half);
      inner /= static_cast<double>(detector.size() - half);
      if (!(outer <= 0.8 * inner + 0.02)) {
        out.hasCone = false;
        out.diagnostic = "end detector does not decay (cylinder-like end)";
        return;
      }
    }
    // Weighted LS of theta = theta_inf + c / rho^2.
    double s11 = 0, s12 = 0, s22 = 0, b1 = 0, b2 = 0;
    for (const Vec2& p : window) {
      const double rho = p.norm();
      const double basis = 1.0 / (rho * rho);
      const double th = polar_angle(p);
      s11 += 1.0;
      s12 += basis;
      s22 += basis * basis;
      b1 += th;
      b2 += th * basis;
    }
    const double det = s11 * s22 - s12 * s12;
    const double thetaInf = (b1 * s22 - b2 * s12) / det;
    if (!(thetaInf > 1e-6 && thetaInf < kPi - 1e-6)) {
      out.hasCone = false;
      out.diagnostic = "fitted angle outside (0, pi)";
      return;
    }
    Cone single;
    single.n = 2;
    single.linkAngles = {thetaInf};
    double errAll = 0.0, errInner = 0.0, errOuter = 0.0;
    for (std::size_t i = 0; i < window.size(); ++i) {
      const Vec2& p = window[i];
      const double e = distance_to_cone({p.x, p.y, 0.0}, single) / p.norm();
      errAll = std::max(errAll, e);
      if (i < window.size() / 2) errOuter = std::max(errOuter, e);
      else errInner = std::max(errInner, e);
    }
    out.cone.linkAngles.push_back(thetaInf);
    out.fitError = std::max(out.fitError, errAll);
    out.fitErrorInner = std::max(out.fitErrorInner, errInner);
    out.fitErrorOuter = std::max(out.fitErrorOuter, errOuter);
  };

  if (coneB) fitEnd(true);
  if (out.hasCone && coneA) fitEnd(false);
  if (out.hasCone) {
    std::sort(out.cone.linkAngles.begin(), out.cone.linkAngles.end());
    // Merge the two ends of an even profile if they fitted the same sheet.
    for (std::size_t i = 1; i < out.cone.linkAngles.size();) {
      if (std::abs(out.cone.linkAngles[i] - out.cone.linkAngles[i - 1]) < 1e-9) {
        out.cone.linkAngles.erase(out.cone.linkAngles.begin() + static_cast<std::ptrdiff_t>(i));
      } else {
        ++i;
      }
    }
  }
  return out;
}

ShotOutcome classify_shot(double param, double rmax, ShootFamily family) {
  // Coarse stations are enough for classification.
  return shoot_raw(param, rmax, family, 0.02).outcome;
}

ShootResult shoot_rotsym_shrinker(double param, double rmax, double tol, ShootFamily family,
                                  double outputSpacing) {
  if (!(rmax >= 10.0)) throw std::invalid_argument("shoot: rmax must be >= 10");
  if (!(tol >= 1e-8)) throw std::invalid_argument("shoot: tol must be >= 1e-8");

  ShootResult res;
  res.shootParam = param;
  res.family = family;

  // The landing defect depends (at machine scale) on the discretization, so
  // the cone-inward parameter is re-bisected at each output spacing.
  auto refineLanding = [&](double p, double spacing) {
    auto defectSign = [&](double q) {
      const ShotOutcome o = shoot_raw(q, rmax, family, spacing).outcome;
      return o.curl >= 0.0 ? 1 : -1;
    };
    const int s0 = defectSign(p);
    double delta = 1e-9;
    double other = p;
    for (int k = 0; k < 12; ++k) {
      other = (s0 > 0) ? p - delta : p + delta; // heuristic side first
      if (defectSign(other) != s0) break;
      other = (s0 > 0) ? p + delta : p - delta;
      if (defectSign(other) != s0) break;
      delta *= 4.0;
      other = p;
    }
    if (other == p) return p;
    double a = p, b = other;
    int fa = s0;
    for (int it = 0; it < 64 && std::abs(b - a) > 1e-17 * std::max(1.0, std::abs(a)); ++it) {
      const double m = 0.5 * (a + b);
      if (defectSign(m) == fa) a = m; else b = m;
    }
    return 0.5 * (a + b);
  };

  double spacing = outputSpacing;
  for (int attempt = 0; attempt < 3; ++attempt) {
    if (family == ShootFamily::coneInward) {
      // Seed the matched construction from the single-pass landing.
      const double pRef = refineLanding(param, spacing);
      const Trajectory seedTraj = shoot_raw(pRef, rmax, family, spacing);
      if (seedTraj.outcome.kind != ShotOutcome::Kind::axisHit &&
          seedTraj.outcome.kind != ShotOutcome::Kind::axisCrash) {
        res.status = ShootResult::Status::shootFailed;
        res.diagnostic = "inward pass does not land on the axis";
        return res;
      }
      const double capSeed = seedTraj.nodes.back().x;
      MatchedShoot match = matched_cone_shoot(pRef, capSeed, rmax, spacing);
      if (!match.ok) {
        res.status = ShootResult::Status::shootFailed;
        res.diagnostic = "two-leg matching did not converge";
        return res;
      }
      res.profile = match.profile;
      {
        double arc = 0.0;
        for (std::size_t i = 1; i < res.profile.nodes.size(); ++i) {
          arc += (res.profile.nodes[i] - res.profile.nodes[i - 1]).norm();
        }
        const auto count = static_cast<std::size_t>(std::lround(arc / spacing)) + 1;
        res.profile = resample(res.profile, std::max<std::size_t>(count, 32));
      }
      orient_outward(res.profile);
      const SurfaceSampleSet sample = geometric_data(res.profile);
      res.residual = shrinker_residual(sample).maxAbs;
      res.diagnostic = "seam mismatch " + std::to_string(match.mismatch);
      if (std::getenv("SHRINKLAB_DEBUG_MATCH")) {
        const auto rep = shrinker_residual(sample);
        std::size_t worst = 0;
        for (std::size_t i = 0; i < rep.perNode.size(); ++i) {
          if (std::abs(rep.perNode[i]) > std::abs(rep.perNode[worst])) worst = i;
        }
        std::fprintf(stderr, "attempt spacing=%g residual=%.3e worst i=%zu at (%.6f, %.6f)\n",
                     spacing, res.residual, worst, sample.curve[worst].x, sample.curve[worst].y);
      }
      if (res.residual <= tol) {
        res.status = ShootResult::Status::ok;
        res.shootParam = match.theta;
        break;
      }
      res.status = ShootResult::Status::refinementNeeded;
      spacing *= 0.5;
      continue;
    }
    Trajectory traj = shoot_raw(param, rmax, family, spacing);
    if (traj.outcome.kind == ShotOutcome::Kind::failed) {
      res.status = ShootResult::Status::shootFailed;
      res.diagnostic = "integration blew up";
      return res;
    }
    if (traj.outcome.kind == ShotOutcome::Kind::axisCrash) {
      res.status = ShootResult::Status::shootFailed;
      res.diagnostic = "profile hit the axis obliquely before rmax";
      return res;
    }
    if (traj.outcome.kind == ShotOutcome::Kind::curled ||
        traj.outcome.kind == ShotOutcome::Kind::wandered) {
      res.status = ShootResult::Status::shootFailed;
      res.diagnostic = "profile curled away before reaching rmax";
      return res;
    }
    if (traj.nodes.size() < 16) {
      res.status = ShootResult::Status::shootFailed;
      res.diagnostic = "profile too short";
      return res;
    }
    res.profile = assemble_profile(traj, family);
    {
      double arc = 0.0;
      for (std::size_t i = 1; i < res.profile.nodes.size(); ++i) {
        arc += (res.profile.nodes[i] - res.profile.nodes[i - 1]).norm();
      }
      const auto count = static_cast<std::size_t>(std::lround(arc / spacing)) + 1;
      res.profile = resample(res.profile, std::max<std::size_t>(count, 32));
    }
    orient_outward(res.profile);
    const SurfaceSampleSet sample = geometric_data(res.profile);
    res.residual = shrinker_residual(sample).maxAbs;
    if (res.residual <= tol) {
      res.status = ShootResult::Status::ok;
      res.shootParam = param;
      break;
    }
    res.status = ShootResult::Status::refinementNeeded;
    res.diagnostic = "residual above tol at spacing " + std::to_string(spacing);
    spacing *= 0.5;
  }
  if (res.status != ShootResult::Status::ok) return res;

  if (res.profile.endA.kind == EndCondition::Kind::axis &&
      res.profile.endB.kind == EndCondition::Kind::axis) {
    res.coneFit.hasCone = false;
    res.coneFit.diagnostic = "closed surface";
  } else {
    res.coneFit = asymptotic_cone(res.profile, 0.2);
  }
  return res;
}

namespace {

// Sign driving the bisection. Outward families: +1 if the end bent
// counterclockwise (toward larger polar angle), -1 clockwise, 0 for a clean
// escape. Inward family: the sign of the axis landing-angle defect.
int outcome_sign(const ShotOutcome& o, ShootFamily family) {
  if (family == ShootFamily::coneInward) {
    return o.curl >= 0.0 ? 1 : -1;
  }
  switch (o.kind) {
    case ShotOutcome::Kind::escaped: return 0;
    case ShotOutcome::Kind::curled: return o.curl > 0.0 ? 1 : -1;
    case ShotOutcome::Kind::axisHit:
    case ShotOutcome::Kind::axisCrash:
      return o.finalTheta > 0.5 * kPi ? 1 : -1;
    case ShotOutcome::Kind::wandered:
    case ShotOutcome::Kind::failed:
      return o.curl >= 0.0 ? 1 : -1;
  }
  return 1;
}

} // namespace

std::vector<ShootResult> sweep_conical_specimens(double paramLo, double paramHi,
                                                 int coarseSteps, double rmax, double tol,
                                                 ShootFamily family, double outputSpacing) {
  std::vector<ShootResult> found;
  auto tryAccept = [&](double param) {
    ShootResult r = shoot_rotsym_shrinker(param, rmax, tol, family, outputSpacing);
    if (r.ok() && r.coneFit.hasCone) found.push_back(std::move(r));
  };

  std::vector<std::pair<double, int>> grid(static_cast<std::size_t>(coarseSteps) + 1);
  for (int i = 0; i <= coarseSteps; ++i) {
    const double p = paramLo + (paramHi - paramLo) * i / coarseSteps;
    const ShotOutcome o = classify_shot(p, rmax, family);
    grid[static_cast<std::size_t>(i)] = {p, outcome_sign(o, family)};
    if (outcome_sign(o, family) == 0) tryAccept(p);
  }
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    double a = grid[i].first;
    int fa = grid[i].second;
    double b = grid[i + 1].first;
    int fb = grid[i + 1].second;
    if (fa == 0 || fb == 0 || fa == fb) continue;
    bool escaped = false;
    for (int it = 0; it < 80 && (b - a) > 1e-16 * std::max(1.0, std::abs(a)); ++it) {
      const double m = 0.5 * (a + b);
      const int fm = outcome_sign(classify_shot(m, rmax, family), family);
      if (fm == 0) {
        tryAccept(m);
        escaped = true;
        break;
      }
      if (fm == fa) { a = m; } else { b = m; }
    }
    if (!escaped) tryAccept(0.5 * (a + b));
  }
  return found;
}

ShootResult reference_specimen(double rmax, double tol, double outputSpacing) {
  // The least-winding conical root of the inward family sits near 1.02; the
  // bracket is pinned so the pick is deterministic and cheap.
  auto found = sweep_conical_specimens(0.95, 1.08, 6, rmax, tol, ShootFamily::coneInward,
                                       outputSpacing);
  if (found.empty()) {
    ShootResult r;
    r.status = ShootResult::Status::shootFailed;
    r.diagnostic = "cone-inward sweep found no conical specimen in the pinned bracket";
    return r;
  }
  std::sort(found.begin(), found.end(), [](const ShootResult& a, const ShootResult& b) {
    if (a.residual != b.residual) return a.residual < b.residual;
    return a.shootParam < b.shootParam;
  });
  return found.front();
}

} // namespace shrinklab
