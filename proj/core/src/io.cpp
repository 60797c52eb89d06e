#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "shrinklab/geometry.hpp"

namespace shrinklab {

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string encode_end(const EndCondition& ec) {
  switch (ec.kind) {
    case EndCondition::Kind::none: return "none";
    case EndCondition::Kind::axis: return "axis";
    case EndCondition::Kind::cone:
      return "cone:slope=" + format_double(ec.slope) + ":R=" + format_double(ec.truncationRadius);
  }
  return "none";
}

EndCondition decode_end(const std::string& text) {
  if (text == "none") return {};
  if (text == "axis") return EndCondition::axis();
  if (text.rfind("cone:", 0) == 0) {
    EndCondition ec;
    ec.kind = EndCondition::Kind::cone;
    std::stringstream ss(text.substr(5));
    std::string part;
    while (std::getline(ss, part, ':')) {
      const auto eq = part.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = part.substr(0, eq);
      const double value = std::strtod(part.c_str() + eq + 1, nullptr);
      if (key == "slope") ec.slope = value;
      else if (key == "R") ec.truncationRadius = value;
    }
    return ec;
  }
  throw std::runtime_error("unknown end condition: " + text);
}

void write_rows(std::ofstream& f, const std::vector<Vec2>& nodes) {
  for (const Vec2& v : nodes) {
    f << format_double(v.x) << "," << format_double(v.y) << "\n";
  }
}

} // namespace

void write_surface_csv(const std::string& path, const PlanarCurve& curve) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << "# kind=planar, n=1, closed=" << (curve.closed ? 1 : 0)
    << ", endA=none, endB=none\n";
  write_rows(f, curve.nodes);
}

void write_surface_csv(const std::string& path, const ProfileCurve& profile) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << "# kind=profile, n=2, closed=0, endA=" << encode_end(profile.endA)
    << ", endB=" << encode_end(profile.endB) << "\n";
  write_rows(f, profile.nodes);
}

LoadedSurface read_surface_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open surface file: " + path);
  std::string line;
  std::string kind;
  bool closed = false;
  EndCondition endA, endB;
  bool sawHeader = false;
  std::vector<Vec2> nodes;
  while (std::getline(f, line)) {
    if (line.empty() || line == "\r") continue;
    if (line[0] == '#') {
      std::stringstream ss(line.substr(1));
      std::string item;
      while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) continue;
        std::string key = item.substr(0, eq);
        std::string value = item.substr(eq + 1);
        auto strip = [](std::string& s) {
          while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.erase(s.begin());
          while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.pop_back();
        };
        strip(key);
        strip(value);
        if (key == "kind") { kind = value; sawHeader = true; }
        else if (key == "closed") closed = (value == "1" || value == "true");
        else if (key == "endA") endA = decode_end(value);
        else if (key == "endB") endB = decode_end(value);
      }
      continue;
    }
    const char* ptr = line.c_str();
    char* next = nullptr;
    const double a = std::strtod(ptr, &next);
    if (next == ptr) throw std::runtime_error("malformed row in " + path + ": " + line);
    while (*next == ',' || *next == ' ' || *next == '\t') ++next;
    char* next2 = nullptr;
    const double b = std::strtod(next, &next2);
    if (next2 == next) throw std::runtime_error("malformed row in " + path + ": " + line);
    nodes.push_back({a, b});
  }
  if (!sawHeader) throw std::runtime_error("missing `# kind=...` header in " + path);

  LoadedSurface out;
  if (kind == "planar") {
    PlanarCurve c;
    c.nodes = std::move(nodes);
    c.closed = closed;
    out.planar = std::move(c);
  } else if (kind == "profile") {
    ProfileCurve p;
    p.nodes = std::move(nodes);
    p.endA = endA;
    p.endB = endB;
    out.profile = std::move(p);
  } else {
    throw std::runtime_error("unknown surface kind: " + kind);
  }
  return out;
}

SurfaceSampleSet LoadedSurface::sample() const {
  if (planar) return geometric_data(*planar);
  if (profile) return geometric_data(*profile);
  throw std::runtime_error("empty LoadedSurface");
}

} // namespace shrinklab
