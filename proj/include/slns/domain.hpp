#pragma once

// Spatial domains: the periodic torus, the axis-aligned box and the channel
// periodic along axis 0.  Exit detection for backward characteristics is
// built on boundary_crossing().

#include "slns/core.hpp"

#include <cmath>
#include <optional>
#include <string>

namespace slns {

enum class DomainKind { Torus, Rectangle, ChannelX };

inline std::string to_string(DomainKind kind) {
  switch (kind) {
    case DomainKind::Torus: return "Torus";
    case DomainKind::Rectangle: return "Rectangle";
    case DomainKind::ChannelX: return "ChannelX";
  }
  return "?";
}

inline DomainKind parse_domain_kind(const std::string& s) {
  if (s == "Torus" || s == "torus") return DomainKind::Torus;
  if (s == "Rectangle" || s == "rectangle") return DomainKind::Rectangle;
  if (s == "ChannelX" || s == "channel_x" || s == "channel") return DomainKind::ChannelX;
  throw UsageError("unknown domain kind '" + s + "' (expected Torus, Rectangle or ChannelX)");
}

template <int Dim>
class Domain {
  static_assert(Dim == 2 || Dim == 3, "only 2D and 3D domains are supported");

 public:
  Domain(DomainKind kind, const Vec<Dim>& lower, const Vec<Dim>& upper)
      : kind_(kind), lower_(lower), upper_(upper) {
    for (int a = 0; a < Dim; ++a) {
      require(std::isfinite(lower[a]) && std::isfinite(upper[a]), "domain extents must be finite");
      require(lower[a] < upper[a], "domain extent on axis " + std::to_string(a) + " is empty");
    }
  }

  static Domain torus(const Vec<Dim>& lower, const Vec<Dim>& upper) {
    return Domain(DomainKind::Torus, lower, upper);
  }
  static Domain rectangle(const Vec<Dim>& lower, const Vec<Dim>& upper) {
    return Domain(DomainKind::Rectangle, lower, upper);
  }
  static Domain channel_x(const Vec<Dim>& lower, const Vec<Dim>& upper) {
    return Domain(DomainKind::ChannelX, lower, upper);
  }

  DomainKind kind() const { return kind_; }
  const Vec<Dim>& lower() const { return lower_; }
  const Vec<Dim>& upper() const { return upper_; }
  double length(int axis) const { return upper_[axis] - lower_[axis]; }

  bool periodic(int axis) const {
    switch (kind_) {
      case DomainKind::Torus: return true;
      case DomainKind::Rectangle: return false;
      case DomainKind::ChannelX: return axis == 0;
    }
    return false;
  }

  bool has_walls() const { return kind_ != DomainKind::Torus; }

  /// Same domain with every wall moved inward by `delta`.
  Domain shrunk(double delta) const {
    Vec<Dim> lo = lower_, hi = upper_;
    for (int a = 0; a < Dim; ++a) {
      if (periodic(a)) continue;
      lo[a] += delta;
      hi[a] -= delta;
    }
    return Domain(kind_, lo, hi);
  }

  /// Maps periodic coordinates into [lower, upper); walled axes untouched.
  Vec<Dim> wrap(Vec<Dim> x) const {
    for (int a = 0; a < Dim; ++a) {
      if (!periodic(a)) continue;
      const double len = length(a);
      double r = std::fmod(x[a] - lower_[a], len);
      if (r < 0) r += len;
      if (r >= len) r = 0.0;
      x[a] = lower_[a] + r;
    }
    return x;
  }

 private:
  DomainKind kind_;
  Vec<Dim> lower_;
  Vec<Dim> upper_;
};

/// Membership in the open set D.  Periodic axes always pass.
template <int Dim>
bool contains(const Domain<Dim>& domain, const Vec<Dim>& x) {
  for (int a = 0; a < Dim; ++a) {
    if (!std::isfinite(x[a])) return false;
    if (domain.periodic(a)) continue;
    if (!(x[a] > domain.lower()[a] && x[a] < domain.upper()[a])) return false;
  }
  return true;
}

/// True when x lies on a wall (closed domain minus interior).
template <int Dim>
bool on_boundary(const Domain<Dim>& domain, const Vec<Dim>& x) {
  bool touches = false;
  for (int a = 0; a < Dim; ++a) {
    if (domain.periodic(a)) continue;
    const double lo = domain.lower()[a], hi = domain.upper()[a];
    if (x[a] < lo || x[a] > hi) return false;
    if (x[a] == lo || x[a] == hi) touches = true;
  }
  return touches;
}

template <int Dim>
struct CrossingRecord {
  double lambda = 0.0;  ///< fraction of the segment in (0, 1]
  Vec<Dim> point;       ///< crossing point, exactly on the wall
  int wall_axis = -1;
  int wall_side = 0;    ///< -1 lower wall, +1 upper wall
};

/// First wall hit by the straight segment x0 -> x1, if any.  A segment ending
/// exactly on a wall counts as a crossing with lambda = 1.
template <int Dim>
std::optional<CrossingRecord<Dim>> boundary_crossing(const Domain<Dim>& domain,
                                                     const Vec<Dim>& x0, const Vec<Dim>& x1) {
  if (!contains(domain, x0)) throw UsageError("boundary_crossing: segment start is outside the domain");
  std::optional<CrossingRecord<Dim>> best;
  for (int a = 0; a < Dim; ++a) {
    if (domain.periodic(a)) continue;
    for (int side : {-1, 1}) {
      const double wall = side < 0 ? domain.lower()[a] : domain.upper()[a];
      const bool beyond = side < 0 ? x1[a] <= wall : x1[a] >= wall;
      if (!beyond) continue;
      const double lambda = std::clamp((x0[a] - wall) / (x0[a] - x1[a]), 0.0, 1.0);
      if (best && lambda >= best->lambda) continue;
      CrossingRecord<Dim> rec;
      rec.lambda = lambda;
      rec.point = x0 + lambda * (x1 - x0);
      rec.point[a] = wall;
      rec.wall_axis = a;
      rec.wall_side = side;
      best = rec;
    }
  }
  return best;
}

/// Outward unit normal of a wall.
template <int Dim>
Vec<Dim> wall_normal(int axis, int side) {
  Vec<Dim> n = Vec<Dim>::Zero();
  n[axis] = side;
  return n;
}

}  // namespace slns
