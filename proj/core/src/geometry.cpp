#include "shrinklab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <limits>
#include <stdexcept>

namespace shrinklab {

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> cumulative_arclength(const std::vector<Vec2>& nodes, bool closed) {
  std::vector<double> s(nodes.size() + (closed ? 1 : 0), 0.0);
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    s[i] = s[i - 1] + (nodes[i] - nodes[i - 1]).norm();
  }
  if (closed) {
    s[nodes.size()] = s[nodes.size() - 1] + (nodes.front() - nodes.back()).norm();
  }
  return s;
}

struct CurveDiff {
  std::vector<Vec2> d1, d2; // first and second derivatives w.r.t. chordal arclength
};

// Fornberg's algorithm: weights of the m-th derivative at z from the nodes
// x[0..nd-1] (B. Fornberg, Math. Comp. 51, 1988).
void fornberg_weights(double z, const double* x, int nd, int m, double* w) {
  std::vector<double> c(static_cast<std::size_t>(nd) * (m + 1), 0.0);
  auto C = [&](int i, int j) -> double& { return c[static_cast<std::size_t>(i) * (m + 1) + j]; };
  double c1 = 1.0;
  double c4 = x[0] - z;
  C(0, 0) = 1.0;
  for (int i = 1; i < nd; ++i) {
    const int mn = std::min(i, m);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = x[i] - z;
    for (int j = 0; j < i; ++j) {
      const double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k) C(i, k) = c1 * (k * C(i - 1, k - 1) - c5 * C(i - 1, k)) / c2;
        C(i, 0) = -c1 * c5 * C(i - 1, 0) / c2;
      }
      for (int k = mn; k >= 1; --k) C(j, k) = (c4 * C(j, k) - k * C(j, k - 1)) / c3;
      C(j, 0) = c4 * C(j, 0) / c3;
    }
    c1 = c2;
  }
  for (int i = 0; i < nd; ++i) w[i] = C(i, m);
}

// Stencils on a (possibly mildly non-uniform) arclength grid. Interior nodes
// use centered three-point stencils; open-curve ends use one-sided four-point
// stencils so the whole curve is second-order.
CurveDiff differentiate(const std::vector<Vec2>& p, const std::vector<double>& s, bool closed) {
  const std::size_t n = p.size();
  CurveDiff out;
  out.d1.resize(n);
  out.d2.resize(n);
  auto at = [&](std::ptrdiff_t i) -> const Vec2& {
    if (closed) {
      const std::ptrdiff_t m = static_cast<std::ptrdiff_t>(n);
      return p[static_cast<std::size_t>(((i % m) + m) % m)];
    }
    return p[static_cast<std::size_t>(i)];
  };
  auto gap = [&](std::size_t i) { // s[i+1] - s[i] with wraparound
    if (i + 1 < s.size()) return s[i + 1] - s[i];
    return s[1] - s[0];
  };
  auto oneSided = [&](std::size_t i0, bool forward, Vec2& d1, Vec2& d2) {
    double xs[4], w1[4], w2[4];
    Vec2 pts[4];
    for (int k = 0; k < 4; ++k) {
      const std::size_t idx = forward ? i0 + static_cast<std::size_t>(k)
                                      : i0 - static_cast<std::size_t>(k);
      xs[k] = s[idx];
      pts[k] = p[idx];
    }
    fornberg_weights(xs[0], xs, 4, 1, w1);
    fornberg_weights(xs[0], xs, 4, 2, w2);
    d1 = {0.0, 0.0};
    d2 = {0.0, 0.0};
    for (int k = 0; k < 4; ++k) {
      d1 += pts[k] * w1[k];
      d2 += pts[k] * w2[k];
    }
  };
  for (std::size_t i = 0; i < n; ++i) {
    if (closed || (i > 0 && i + 1 < n)) {
      const double a = (i == 0) ? gap(n - 1) : s[i] - s[i - 1];
      const double b = gap(i);
      const Vec2 fm = at(static_cast<std::ptrdiff_t>(i) - 1);
      const Vec2 f0 = p[i];
      const Vec2 fp = at(static_cast<std::ptrdiff_t>(i) + 1);
      out.d1[i] = fm * (-b / (a * (a + b))) + f0 * ((b - a) / (a * b)) + fp * (a / (b * (a + b)));
      out.d2[i] = fm * (2.0 / (a * (a + b))) + f0 * (-2.0 / (a * b)) + fp * (2.0 / (b * (a + b)));
    } else if (i == 0) {
      oneSided(0, true, out.d1[0], out.d2[0]);
    } else {
      oneSided(n - 1, false, out.d1[n - 1], out.d2[n - 1]);
    }
  }
  return out;
}

std::vector<double> trapezoid_weights(const std::vector<double>& s, std::size_t n, bool closed) {
  std::vector<double> w(n);
  if (closed) {
    for (std::size_t i = 0; i < n; ++i) {
      const double prev = (i == 0) ? s[n] - s[n - 1] : s[i] - s[i - 1];
      const double next = s[i + 1] - s[i];
      w[i] = 0.5 * (prev + next);
    }
    return w;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double prev = (i == 0) ? 0.0 : s[i] - s[i - 1];
    const double next = (i + 1 == n) ? 0.0 : s[i + 1] - s[i];
    w[i] = 0.5 * (prev + next);
  }
  // Gregory end correction: boundary-derivative trapezoid error is O(h^2),
  // which the 3/8, 7/6, 23/24 end coefficients remove.
  if (n >= 8) {
    static constexpr double ratio[3] = {0.75, 7.0 / 6.0, 23.0 / 24.0};
    for (int k = 0; k < 3; ++k) {
      w[static_cast<std::size_t>(k)] *= ratio[k];
      w[n - 1 - static_cast<std::size_t>(k)] *= ratio[k];
    }
  }
  return w;
}

void check_spacing(const std::vector<Vec2>& nodes, bool closed) {
  double scale = 0.0;
  for (const Vec2& v : nodes) scale = std::max(scale, std::max(std::abs(v.x), std::abs(v.y)));
  const double floor = 1e-12 * std::max(1.0, scale);
  const std::size_t n = nodes.size();
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if ((nodes[i + 1] - nodes[i]).norm() <= floor) {
      throw std::invalid_argument("degenerate node spacing at index " + std::to_string(i));
    }
  }
  if (closed && (nodes.front() - nodes.back()).norm() <= floor) {
    throw std::invalid_argument("degenerate wrap spacing on closed curve");
  }
}

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 d = b - a;
  const double l2 = d.norm2();
  if (l2 == 0.0) return (p - a).norm();
  double t = (p - a).dot(d) / l2;
  t = std::clamp(t, 0.0, 1.0);
  return (p - (a + d * t)).norm();
}

bool segments_properly_intersect(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  auto cross = [](const Vec2& u, const Vec2& v) { return u.x * v.y - u.y * v.x; };
  const double d1 = cross(b - a, c - a);
  const double d2 = cross(b - a, d - a);
  const double d3 = cross(d - c, a - c);
  const double d4 = cross(d - c, b - c);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0));
}

} // namespace

double EndCondition::polarAngle() const {
  if (kind != Kind::cone) throw std::logic_error("polarAngle: not a conical end");
  if (std::isinf(slope)) return 0.5 * kPi;
  if (slope == 0.0) return std::nan("");
  return slope > 0.0 ? std::atan(slope) : kPi + std::atan(slope);
}

double PlanarCurve::spacing() const {
  const auto s = cumulative_arclength(nodes, closed);
  return s.back() / static_cast<double>(s.size() - 1);
}

void PlanarCurve::validate() const {
  if (nodes.size() < 8) throw std::invalid_argument("planar curve needs at least 8 nodes");
  check_spacing(nodes, closed);
}

double ProfileCurve::spacing() const {
  const auto s = cumulative_arclength(nodes, false);
  return s.back() / static_cast<double>(nodes.size() - 1);
}

void ProfileCurve::validate() const {
  if (nodes.size() < 8) throw std::invalid_argument("profile curve needs at least 8 nodes");
  check_spacing(nodes, false);
  const double rTol = 1e-12 * std::max(1.0, std::abs(nodes.front().x));
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const double r = nodes[i].y;
    if (r < -rTol) throw std::invalid_argument("profile has r < 0 at node " + std::to_string(i));
    const bool isEnd = (i == 0 || i + 1 == nodes.size());
    if (r <= rTol && !isEnd) {
      throw std::invalid_argument("profile touches the axis at interior node " + std::to_string(i));
    }
  }
  auto checkAxisEnd = [&](std::size_t i0, std::size_t i1, const EndCondition& ec, const char* which) {
    if (ec.kind == EndCondition::Kind::axis) {
      if (nodes[i0].y > rTol) {
        throw std::invalid_argument(std::string("axis end ") + which + " has r != 0");
      }
      const double dr = nodes[i1].y - nodes[i0].y;
      const double dx = nodes[i1].x - nodes[i0].x;
      if (std::abs(dr) <= rTol || std::abs(dx / dr) > 0.2) {
        throw std::invalid_argument(std::string("axis end ") + which +
                                    " does not meet the axis perpendicularly");
      }
    } else if (nodes[i0].y <= rTol) {
      throw std::invalid_argument(std::string("end ") + which + " touches the axis but is not marked on-axis");
    }
  };
  checkAxisEnd(0, 1, endA, "A");
  checkAxisEnd(nodes.size() - 1, nodes.size() - 2, endB, "B");
}

double SurfaceSampleSet::totalMeasure() const {
  double sum = 0.0;
  for (double w : weight) sum += w;
  return sum;
}

void SurfaceSampleSet::validate() const {
  for (std::size_t i = 0; i < size(); ++i) {
    if (std::abs(normal[i].norm() - 1.0) > 1e-9) {
      throw std::runtime_error("non-unit normal at node " + std::to_string(i));
    }
    const bool pole = !closed && (i == 0 || i + 1 == size()) && n == 2 && curve[i].y < 1e-12;
    if (weight[i] < 0.0 || (weight[i] == 0.0 && !pole)) {
      throw std::runtime_error("non-positive quadrature weight at node " + std::to_string(i));
    }
  }
}

void Cone::validate() const {
  if (n == 2) {
    if (linkAngles.empty()) throw std::invalid_argument("cone has empty link");
    for (double a : linkAngles) {
      if (!(a > 0.0 && a < kPi)) throw std::invalid_argument("link angle outside (0, pi)");
    }
    for (std::size_t i = 0; i < linkAngles.size(); ++i) {
      for (std::size_t j = i + 1; j < linkAngles.size(); ++j) {
        if (std::abs(linkAngles[i] - linkAngles[j]) < 1e-12) {
          throw std::invalid_argument("duplicate link angles");
        }
      }
    }
  } else {
    if (rayDirections.empty()) throw std::invalid_argument("cone has no rays");
    for (const Vec2& d : rayDirections) {
      if (std::abs(d.norm() - 1.0) > 1e-9) throw std::invalid_argument("ray direction not unit");
    }
  }
}

SurfaceSampleSet geometric_data(const PlanarCurve& curve) {
  curve.validate();
  const auto& p = curve.nodes;
  const std::size_t n = p.size();
  const auto s = cumulative_arclength(p, curve.closed);
  const auto diff = differentiate(p, s, curve.closed);
  const auto w = trapezoid_weights(s, n, curve.closed);

  SurfaceSampleSet out;
  out.n = 1;
  out.closed = curve.closed;
  out.h = s.back() / static_cast<double>(curve.closed ? n : n - 1);
  out.position.resize(n);
  out.normal.resize(n);
  out.meanCurv.resize(n);
  out.normA.resize(n);
  out.weight = w;
  out.radius.resize(n);
  out.curve = p;
  out.curveNormal.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 d1 = diff.d1[i];
    const Vec2 d2 = diff.d2[i];
    const double speed = d1.norm();
    const Vec2 tangent = d1 / speed;
    const Vec2 nu = tangent.rotatedCW();
    const double k = (d1.x * d2.y - d1.y * d2.x) / (speed * speed * speed);
    out.position[i] = {p[i].x, p[i].y, 0.0};
    out.normal[i] = {nu.x, nu.y, 0.0};
    out.curveNormal[i] = nu;
    out.meanCurv[i] = k;
    out.normA[i] = std::abs(k);
    out.radius[i] = p[i].norm();
  }
  return out;
}

SurfaceSampleSet geometric_data(const ProfileCurve& profile) {
  profile.validate();
  std::vector<Vec2> p = profile.nodes;
  const std::size_t n = p.size();
  const bool axisA = profile.endA.kind == EndCondition::Kind::axis;
  const bool axisB = profile.endB.kind == EndCondition::Kind::axis;

  // Axis ends get a mirrored ghost node so the pole stencil stays centered.
  auto s = cumulative_arclength(p, false);
  const auto wArc = trapezoid_weights(s, n, false);

  SurfaceSampleSet out;
  out.n = 2;
  out.closed = false;
  out.h = s.back() / static_cast<double>(n - 1);
  out.endA = profile.endA;
  out.endB = profile.endB;
  out.position.resize(n);
  out.normal.resize(n);
  out.meanCurv.resize(n);
  out.normA.resize(n);
  out.weight.resize(n);
  out.radius.resize(n);
  out.curve = p;
  out.curveNormal.resize(n);
  out.kProfile.resize(n);
  out.kRotational.resize(n);

  auto diff = differentiate(p, s, false);
  if (axisA) {
    const double a = s[1] - s[0];
    const Vec2 ghost{p[1].x, -p[1].y};
    diff.d1[0] = (p[1] - ghost) / (2.0 * a);
    diff.d2[0] = (p[1] + ghost - p[0] * 2.0) / (a * a);
  }
  if (axisB) {
    const double a = s[n - 1] - s[n - 2];
    const Vec2 ghost{p[n - 2].x, -p[n - 2].y};
    diff.d1[n - 1] = (ghost - p[n - 2]) / (2.0 * a);
    diff.d2[n - 1] = (p[n - 2] + ghost - p[n - 1] * 2.0) / (a * a);
  }

  const double sign = profile.flipNormal ? -1.0 : 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 d1 = diff.d1[i];
    const Vec2 d2 = diff.d2[i];
    const double speed = d1.norm();
    const Vec2 tangent = d1 / speed;
    const Vec2 nu = tangent.rotatedCW() * sign;
    const double kProf = sign * (d1.x * d2.y - d1.y * d2.x) / (speed * speed * speed);
    const bool pole = (i == 0 && axisA) || (i + 1 == n && axisB);
    const double kRot = pole ? kProf : nu.y / p[i].y;
    out.curveNormal[i] = nu;
    out.position[i] = {p[i].x, p[i].y, 0.0};
    out.normal[i] = {nu.x, nu.y, 0.0};
    out.kProfile[i] = kProf;
    out.kRotational[i] = kRot;
    out.meanCurv[i] = kProf + kRot;
    out.normA[i] = std::sqrt(kProf * kProf + kRot * kRot);
    out.weight[i] = 2.0 * kPi * p[i].y * wArc[i];
    out.radius[i] = p[i].norm();
  }
  return out;
}

ResidualReport shrinker_residual(const SurfaceSampleSet& surface) {
  ResidualReport rep;
  rep.perNode.resize(surface.size());
  for (std::size_t i = 0; i < surface.size(); ++i) {
    const double r = surface.meanCurv[i] - 0.5 * surface.position[i].dot(surface.normal[i]);
    rep.perNode[i] = r;
    rep.maxAbs = std::max(rep.maxAbs, std::abs(r));
  }
  return rep;
}

double distance_to_cone(const Vec3& point, const Cone& cone) {
  cone.validate();
  double best = point.norm();
  if (cone.n == 2) {
    const double rp = std::sqrt(point.y * point.y + point.z * point.z);
    const double theta = std::atan2(rp, point.x);
    const double rho = point.norm();
    for (double a : cone.linkAngles) {
      const double delta = std::abs(theta - a);
      const double d = (delta <= 0.5 * kPi) ? rho * std::sin(delta) : rho;
      best = std::min(best, d);
    }
  } else {
    const Vec2 p{point.x, point.y};
    for (const Vec2& dir : cone.rayDirections) {
      const double t = p.dot(dir);
      const double d = (t <= 0.0) ? p.norm() : (p - dir * t).norm();
      best = std::min(best, d);
    }
  }
  return best;
}

TubeReport tube_membership(const SurfaceSampleSet& surface, const Cone& cone,
                           double tubeRadius, double excludedBall) {
  if (!(tubeRadius > 0.0)) throw std::invalid_argument("tube radius must be positive");
  if (excludedBall < 0.0) throw std::invalid_argument("excluded ball radius must be >= 0");
  TubeReport rep;
  for (std::size_t i = 0; i < surface.size(); ++i) {
    if (surface.radius[i] <= excludedBall) continue;
    ++rep.checkedNodes;
    const double excess = distance_to_cone(surface.position[i], cone) - tubeRadius;
    if (excess > rep.worstViolation) {
      rep.worstViolation = excess;
      rep.worstNode = i;
      rep.inside = false;
    }
  }
  return rep;
}

std::vector<Vec2> resample_uniform(const std::vector<Vec2>& nodes, bool closed,
                                   std::size_t count, bool mirrorA, bool mirrorB) {
  if (nodes.size() < 4) throw std::invalid_argument("resample needs at least 4 nodes");
  const std::size_t n = nodes.size();
  const auto s = cumulative_arclength(nodes, closed);
  const double total = s.back();

  // Ghost nodes: mirror ghosts keep the even symmetry of profiles meeting the
  // rotation axis; plain ends extrapolate linearly.
  auto nodeAt = [&](std::ptrdiff_t i) -> Vec2 {
    if (closed) {
      const std::ptrdiff_t m = static_cast<std::ptrdiff_t>(n);
      return nodes[static_cast<std::size_t>(((i % m) + m) % m)];
    }
    if (i < 0) {
      if (mirrorA) return {nodes[static_cast<std::size_t>(-i)].x, -nodes[static_cast<std::size_t>(-i)].y};
      return nodes[0] * 2.0 - nodes[1];
    }
    if (i >= static_cast<std::ptrdiff_t>(n)) {
      if (mirrorB) {
        const std::size_t j = 2 * (n - 1) - static_cast<std::size_t>(i);
        return {nodes[j].x, -nodes[j].y};
      }
      return nodes[n - 1] * 2.0 - nodes[n - 2];
    }
    return nodes[static_cast<std::size_t>(i)];
  };
  auto paramAt = [&](std::ptrdiff_t i) -> double {
    if (!closed) {
      if (i < 0) {
        if (mirrorA) return s[0] - (s[static_cast<std::size_t>(-i)] - s[0]);
        return s[0] - (s[1] - s[0]);
      }
      if (i >= static_cast<std::ptrdiff_t>(n)) {
        if (mirrorB) {
          const std::size_t j = 2 * (n - 1) - static_cast<std::size_t>(i);
          return s[n - 1] + (s[n - 1] - s[j]);
        }
        return s[n - 1] + (s[n - 1] - s[n - 2]);
      }
      return s[static_cast<std::size_t>(i)];
    }
    const std::ptrdiff_t m = static_cast<std::ptrdiff_t>(n);
    std::ptrdiff_t wrap = ((i % m) + m) % m;
    double base = s[static_cast<std::size_t>(wrap)];
    return base + total * static_cast<double>((i - wrap) / m);
  };

  // Local degree-4 Lagrange interpolation in the chordal parameter. Unlike a
  // Catmull-Rom fit this is insensitive to uneven source spacing.
  auto evaluate = [&](double target) -> Vec2 {
    std::size_t seg = 0;
    {
      std::size_t lo = 0, hi = (closed ? n : n - 1);
      while (lo + 1 < hi) {
        const std::size_t mid = (lo + hi) / 2;
        if (s[mid] <= target) lo = mid; else hi = mid;
      }
      seg = lo;
    }
    std::ptrdiff_t base = static_cast<std::ptrdiff_t>(seg) - 1;
    if (!closed) {
      // Slide the window inside the data unless a mirror ghost is exact.
      if (base < 0 && !mirrorA) base = 0;
      if (base + 4 >= static_cast<std::ptrdiff_t>(n) && !mirrorB) {
        base = static_cast<std::ptrdiff_t>(n) - 5;
      }
    }
    double ts[5];
    Vec2 ps[5];
    for (int k = 0; k < 5; ++k) {
      ts[k] = paramAt(base + k);
      ps[k] = nodeAt(base + k);
    }
    Vec2 val{0.0, 0.0};
    for (int k = 0; k < 5; ++k) {
      double w = 1.0;
      for (int j = 0; j < 5; ++j) {
        if (j != k) w *= (target - ts[j]) / (ts[k] - ts[j]);
      }
      val += ps[k] * w;
    }
    return val;
  };

  std::vector<Vec2> out(count);
  if (closed) {
    for (std::size_t k = 0; k < count; ++k) {
      out[k] = evaluate(total * static_cast<double>(k) / static_cast<double>(count));
    }
  } else {
    out.front() = nodes.front();
    out.back() = nodes.back();
    for (std::size_t k = 1; k + 1 < count; ++k) {
      out[k] = evaluate(total * static_cast<double>(k) / static_cast<double>(count - 1));
    }
  }
  return out;
}

PlanarCurve resample(const PlanarCurve& curve, std::size_t count) {
  PlanarCurve out = curve;
  out.nodes = resample_uniform(curve.nodes, curve.closed, count);
  return out;
}

ProfileCurve resample(const ProfileCurve& profile, std::size_t count) {
  ProfileCurve out = profile;
  out.nodes = resample_uniform(profile.nodes, false, count,
                               profile.endA.kind == EndCondition::Kind::axis,
                               profile.endB.kind == EndCondition::Kind::axis);
  // Interpolation can leave a stray sign wiggle right at an axis endpoint.
  if (out.endA.kind == EndCondition::Kind::axis) out.nodes.front().y = 0.0;
  if (out.endB.kind == EndCondition::Kind::axis) out.nodes.back().y = 0.0;
  for (Vec2& v : out.nodes) v.y = std::max(v.y, 0.0);
  return out;
}

PlanarCurve normal_graph(const SurfaceSampleSet& base, const std::vector<double>& offset,
                         double factor, const PlanarCurve& tag) {
  if (base.n != 1 || offset.size() != base.size()) {
    throw std::invalid_argument("normal_graph: size mismatch");
  }
  PlanarCurve out = tag;
  out.nodes.resize(base.size());
  for (std::size_t i = 0; i < base.size(); ++i) {
    out.nodes[i] = base.curve[i] + base.curveNormal[i] * (factor * offset[i]);
  }
  return out;
}

ProfileCurve normal_graph(const SurfaceSampleSet& base, const std::vector<double>& offset,
                          double factor) {
  if (base.n != 2 || offset.size() != base.size()) {
    throw std::invalid_argument("normal_graph: size mismatch");
  }
  ProfileCurve out;
  out.endA = base.endA;
  out.endB = base.endB;
  out.nodes.resize(base.size());
  for (std::size_t i = 0; i < base.size(); ++i) {
    out.nodes[i] = base.curve[i] + base.curveNormal[i] * (factor * offset[i]);
    if ((i == 0 && base.endA.kind == EndCondition::Kind::axis) ||
        (i + 1 == base.size() && base.endB.kind == EndCondition::Kind::axis)) {
      out.nodes[i].y = 0.0; // axis points move along the axis
    }
  }
  if (out.endB.kind == EndCondition::Kind::cone) {
    out.endB.truncationRadius = out.nodes.back().norm();
  }
  if (out.endA.kind == EndCondition::Kind::cone) {
    out.endA.truncationRadius = out.nodes.front().norm();
  }
  // Preserve the base orientation under the recomputed traversal normal.
  const Vec2 t0 = (out.nodes[1] - out.nodes[0]).normalized();
  out.flipNormal = t0.rotatedCW().dot(base.curveNormal[0]) < 0.0;
  return out;
}

bool polyline_is_simple(const std::vector<Vec2>& nodes, bool closed) {
  const std::size_t n = nodes.size();
  const std::size_t segs = closed ? n : n - 1;
  auto seg = [&](std::size_t i) {
    return std::pair<Vec2, Vec2>{nodes[i], nodes[(i + 1) % n]};
  };
  for (std::size_t i = 0; i < segs; ++i) {
    for (std::size_t j = i + 2; j < segs; ++j) {
      if (closed && i == 0 && j == segs - 1) continue;
      const auto [a, b] = seg(i);
      const auto [c, d] = seg(j);
      if (segments_properly_intersect(a, b, c, d)) return false;
    }
  }
  return true;
}

double distance_to_polyline(const Vec2& p, const std::vector<Vec2>& nodes, bool closed) {
  double best = std::numeric_limits<double>::infinity();
  const std::size_t n = nodes.size();
  const std::size_t segs = closed ? n : n - 1;
  for (std::size_t i = 0; i < segs; ++i) {
    best = std::min(best, point_segment_distance(p, nodes[i], nodes[(i + 1) % n]));
  }
  return best;
}

double surface_distance(const SurfaceSampleSet& a, const SurfaceSampleSet& b) {
  double best = std::numeric_limits<double>::infinity();
  for (const Vec2& p : a.curve) best = std::min(best, distance_to_polyline(p, b.curve, b.closed));
  for (const Vec2& p : b.curve) best = std::min(best, distance_to_polyline(p, a.curve, a.closed));
  return best;
}

double polar_angle(const Vec2& xr) { return std::atan2(xr.y, xr.x); }

void orient_outward(ProfileCurve& profile) {
  profile.flipNormal = false;
  SurfaceSampleSet s = geometric_data(profile);
  double mean = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    mean += s.position[i].dot(s.normal[i]) * s.weight[i];
  }
  if (mean < 0.0) profile.flipNormal = true;
}

FieldDerivatives field_derivatives(const SurfaceSampleSet& surface,
                                   const std::vector<double>& field) {
  const std::size_t n = surface.size();
  if (field.size() != n) throw std::invalid_argument("field_derivatives: size mismatch");
  const auto& p = surface.curve;
  std::vector<double> s(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) s[i] = s[i - 1] + (p[i] - p[i - 1]).norm();
  const double wrapGap = surface.closed ? (p.front() - p.back()).norm() : 0.0;

  FieldDerivatives out;
  out.d1.resize(n);
  out.d2.resize(n);
  auto fAt = [&](std::ptrdiff_t i) {
    const std::ptrdiff_t m = static_cast<std::ptrdiff_t>(n);
    return field[static_cast<std::size_t>(((i % m) + m) % m)];
  };
  const bool axisA = surface.n == 2 && surface.endA.kind == EndCondition::Kind::axis;
  const bool axisB = surface.n == 2 && surface.endB.kind == EndCondition::Kind::axis;
  for (std::size_t i = 0; i < n; ++i) {
    const bool interior = surface.closed || (i > 0 && i + 1 < n);
    if (interior) {
      const double a = (i == 0) ? wrapGap : s[i] - s[i - 1];
      const double b = (i + 1 < n) ? s[i + 1] - s[i] : wrapGap;
      const double fm = fAt(static_cast<std::ptrdiff_t>(i) - 1);
      const double f0 = field[i];
      const double fp = fAt(static_cast<std::ptrdiff_t>(i) + 1);
      out.d1[i] = fm * (-b / (a * (a + b))) + f0 * ((b - a) / (a * b)) + fp * (a / (b * (a + b)));
      out.d2[i] = fm * (2.0 / (a * (a + b))) + f0 * (-2.0 / (a * b)) + fp * (2.0 / (b * (a + b)));
    } else if (i == 0) {
      const double a = s[1] - s[0];
      if (axisA) { // even mirror: f(-a) = f(a)
        out.d1[0] = 0.0;
        out.d2[0] = 2.0 * (field[1] - field[0]) / (a * a);
      } else {
        double xs[4], w1[4], w2[4];
        for (int k = 0; k < 4; ++k) xs[k] = s[static_cast<std::size_t>(k)];
        fornberg_weights(xs[0], xs, 4, 1, w1);
        fornberg_weights(xs[0], xs, 4, 2, w2);
        out.d1[0] = 0.0;
        out.d2[0] = 0.0;
        for (int k = 0; k < 4; ++k) {
          out.d1[0] += field[static_cast<std::size_t>(k)] * w1[k];
          out.d2[0] += field[static_cast<std::size_t>(k)] * w2[k];
        }
      }
    } else {
      const double a = s[n - 1] - s[n - 2];
      if (axisB) {
        out.d1[n - 1] = 0.0;
        out.d2[n - 1] = 2.0 * (field[n - 2] - field[n - 1]) / (a * a);
      } else {
        double xs[4], w1[4], w2[4];
        for (int k = 0; k < 4; ++k) xs[k] = s[n - 1 - static_cast<std::size_t>(k)];
        fornberg_weights(xs[0], xs, 4, 1, w1);
        fornberg_weights(xs[0], xs, 4, 2, w2);
        out.d1[n - 1] = 0.0;
        out.d2[n - 1] = 0.0;
        for (int k = 0; k < 4; ++k) {
          out.d1[n - 1] += field[n - 1 - static_cast<std::size_t>(k)] * w1[k];
          out.d2[n - 1] += field[n - 1 - static_cast<std::size_t>(k)] * w2[k];
        }
      }
    }
  }
  return out;
}

std::vector<double> surface_laplacian(const SurfaceSampleSet& surface,
                                      const std::vector<double>& field) {
  const FieldDerivatives d = field_derivatives(surface, field);
  const std::size_t n = surface.size();
  std::vector<double> lap(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (surface.n == 1) {
      lap[i] = d.d2[i];
      continue;
    }
    const bool poleA = i == 0 && surface.endA.kind == EndCondition::Kind::axis;
    const bool poleB = i + 1 == n && surface.endB.kind == EndCondition::Kind::axis;
    if (poleA || poleB) {
      lap[i] = 2.0 * d.d2[i];
    } else {
      const double rs = surface.curveNormal[i].x; // tangent r-component
      lap[i] = d.d2[i] + rs / surface.curve[i].y * d.d1[i];
    }
  }
  return lap;
}

PolylineProjection project_to_polyline(const Vec2& p, const std::vector<Vec2>& nodes,
                                       bool closed) {
  PolylineProjection best;
  best.distance = std::numeric_limits<double>::infinity();
  const std::size_t n = nodes.size();
  const std::size_t segs = closed ? n : n - 1;
  for (std::size_t i = 0; i < segs; ++i) {
    const Vec2& a = nodes[i];
    const Vec2& b = nodes[(i + 1) % n];
    const Vec2 d = b - a;
    const double l2 = d.norm2();
    double t = l2 > 0.0 ? std::clamp((p - a).dot(d) / l2, 0.0, 1.0) : 0.0;
    const double dist = (p - (a + d * t)).norm();
    if (dist < best.distance) {
      best.distance = dist;
      best.segment = i;
      best.param = t;
    }
  }
  return best;
}

double interpolate_field(const std::vector<double>& field, const PolylineProjection& proj,
                         bool closed) {
  const std::size_t n = field.size();
  const std::size_t j = (proj.segment + 1) % n;
  (void)closed;
  return (1.0 - proj.param) * field[proj.segment] + proj.param * field[j];
}



} // namespace shrinklab
