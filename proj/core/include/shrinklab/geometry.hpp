#pragma once

#include <optional>
#include <string>
#include <vector>

#include "shrinklab/vec.hpp"

namespace shrinklab {

// End condition of a profile curve. `axis` marks a point where the generating
// curve meets the rotation axis (r = 0) perpendicularly. `cone` marks a
// truncated end together with the slope of the asymptote and the truncation
// radius; slope 0 encodes a plain truncation (cylindrical end). The slope is
// dr/dx along the asymptote direction: positive for ends opening toward +x,
// negative toward -x, +inf for a vertical (plane-like) end.
struct EndCondition {
  enum class Kind { none, axis, cone };
  Kind kind = Kind::none;
  double slope = 0.0;
  double truncationRadius = 0.0;

  static EndCondition axis() { return {Kind::axis, 0.0, 0.0}; }
  static EndCondition cone(double slope, double truncationRadius) {
    return {Kind::cone, slope, truncationRadius};
  }
  // Polar angle in (0, pi) of the asymptote direction.
  double polarAngle() const;
};

// Ordered polyline in the plane; closed curves wrap around.
struct PlanarCurve {
  std::vector<Vec2> nodes;
  bool closed = false;

  double spacing() const; // mean chord spacing
  void validate() const;  // throws std::invalid_argument on a bad curve
};

// Generating curve of a surface of revolution, sampled in the half-plane
// {(x, r) : r >= 0}. Rotation is about the x-axis.
struct ProfileCurve {
  std::vector<Vec2> nodes; // (x, r)
  EndCondition endA;       // condition at nodes.front()
  EndCondition endB;       // condition at nodes.back()
  bool flipNormal = false; // reverse the orientation convention below

  double spacing() const;
  void validate() const;
};

// Per-node geometric data of a hypersurface: either a planar curve (n = 1) or
// a surface of revolution (n = 2, represented by its meridian at azimuth 0).
//
// Orientation convention: H is the sum of principal curvatures and the mean
// curvature vector is -H n, so spheres about the origin with outward normal
// have H > 0 and x.n > 0.
struct SurfaceSampleSet {
  int n = 2;
  bool closed = false;
  double h = 0.0; // arclength spacing of the generating curve

  std::vector<Vec3> position;   // x
  std::vector<Vec3> normal;     // unit n
  std::vector<double> meanCurv; // H  (1/length)
  std::vector<double> normA;    // |A| (1/length)
  std::vector<double> weight;   // d(mu) quadrature weight (length^n)
  std::vector<double> radius;   // |x|

  // Generating-curve view: (x, y) for n = 1, (x, r) for n = 2.
  std::vector<Vec2> curve;
  std::vector<Vec2> curveNormal;
  EndCondition endA, endB;

  // Principal curvature split for surfaces of revolution (n = 2 only).
  std::vector<double> kProfile;
  std::vector<double> kRotational;

  std::size_t size() const { return position.size(); }
  double totalMeasure() const; // sum of weights
  void validate() const;
};

// Rotationally symmetric cone about the origin. For n = 2 the link is a set
// of polar angles in (0, pi); for n = 1 it is a set of unit ray directions.
struct Cone {
  int n = 2;
  std::vector<double> linkAngles;
  std::vector<Vec2> rayDirections;

  void validate() const;
};

struct SpaceTimePoint {
  Vec3 x;
  double t = 0.0;
};

// ----------------------------------------------------------------------------
// Operations

// Discrete geometry of a planar curve: second-order tangents/normals/curvature
// from three-point stencils on the (approximately uniform) arclength grid.
SurfaceSampleSet geometric_data(const PlanarCurve& curve);

// Discrete geometry of a surface of revolution. H = k_profile + (n.e_r)/r with
// the on-axis limit taken by symmetry (the pole is umbilic).
SurfaceSampleSet geometric_data(const ProfileCurve& profile);

struct ResidualReport {
  std::vector<double> perNode; // H - x.n/2
  double maxAbs = 0.0;
};

// Pointwise defect of the self-shrinker relation H = x.n/2.
ResidualReport shrinker_residual(const SurfaceSampleSet& surface);

// Exact Euclidean distance from a point to the cone (projection onto each
// sheet, minimum over sheets, apex included).
double distance_to_cone(const Vec3& point, const Cone& cone);

struct TubeReport {
  bool inside = true;
  double worstViolation = 0.0; // max over offending nodes of dist - rho
  std::size_t worstNode = 0;
  std::size_t checkedNodes = 0;
};

// True iff every node with |x| > excludedBall lies within distance tubeRadius
// of the cone.
TubeReport tube_membership(const SurfaceSampleSet& surface, const Cone& cone,
                           double tubeRadius, double excludedBall);

// ----------------------------------------------------------------------------
// Curve utilities

// Uniform-arclength resampling (Catmull-Rom interpolation along the cumulative
// chord length). Endpoints of open curves are preserved exactly.
std::vector<Vec2> resample_uniform(const std::vector<Vec2>& nodes, bool closed,
                                   std::size_t count, bool mirrorA = false,
                                   bool mirrorB = false);

PlanarCurve resample(const PlanarCurve& curve, std::size_t count);
ProfileCurve resample(const ProfileCurve& profile, std::size_t count);

// Normal graph over a sampled surface: node positions move by offset(p) along
// the unit normal. Returns the generating curve of the perturbed surface.
PlanarCurve normal_graph(const SurfaceSampleSet& base, const std::vector<double>& offset,
                         double factor, const PlanarCurve& tag);
ProfileCurve normal_graph(const SurfaceSampleSet& base, const std::vector<double>& offset,
                          double factor);

// True if the polyline has no self-intersections (consecutive segments share
// only their common node).
bool polyline_is_simple(const std::vector<Vec2>& nodes, bool closed);

// Minimum distance between a point and a polyline (segments included).
double distance_to_polyline(const Vec2& p, const std::vector<Vec2>& nodes, bool closed);

// Minimum distance between two sample sets. For two surfaces of revolution
// about the same axis this is the meridian-plane distance.
double surface_distance(const SurfaceSampleSet& a, const SurfaceSampleSet& b);

// Polar angle atan2(r, x) in [0, pi] of a profile node.
double polar_angle(const Vec2& xr);

// Orient a profile so the measure-weighted mean of x.n is >= 0 (outward on
// spheres and cylinders).
void orient_outward(ProfileCurve& profile);

// First and second arclength derivatives of a node field (rotationally
// invariant for n = 2). Axis poles use the even-symmetry mirror stencil.
struct FieldDerivatives {
  std::vector<double> d1, d2;
};
FieldDerivatives field_derivatives(const SurfaceSampleSet& surface,
                                   const std::vector<double>& field);

// Surface Laplacian of a node field: f_ss for curves, f_ss + (r_s/r) f_s for
// surfaces of revolution, with the pole limit 2 f_ss.
std::vector<double> surface_laplacian(const SurfaceSampleSet& surface,
                                      const std::vector<double>& field);

struct PolylineProjection {
  std::size_t segment = 0;
  double param = 0.0;   // position within the segment, in [0, 1]
  double distance = 0.0;
};
PolylineProjection project_to_polyline(const Vec2& p, const std::vector<Vec2>& nodes,
                                       bool closed);
double interpolate_field(const std::vector<double>& field, const PolylineProjection& proj,
                         bool closed);

// ----------------------------------------------------------------------------
// Surface file I/O (CSV with a `# kind=...` header line)

void write_surface_csv(const std::string& path, const PlanarCurve& curve);
void write_surface_csv(const std::string& path, const ProfileCurve& profile);

struct LoadedSurface {
  std::optional<PlanarCurve> planar;
  std::optional<ProfileCurve> profile;

  SurfaceSampleSet sample() const;
};

LoadedSurface read_surface_csv(const std::string& path);

} // namespace shrinklab
