// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "censpatial/errors.hpp"

// Distances, grids and polygon regions. Coordinates are either lon/lat
// degrees (geodesic mode, spherical great-circle distances in km) or plain
// planar x/y (Euclidean mode). All operations are pure and reentrant.

namespace censpatial {

// rdist.earth-compatible equatorial radius
inline constexpr double kDefaultEarthRadiusKm = 6378.388;

struct location {
  double lon = 0.0;  // or planar x
  double lat = 0.0;  // or planar y
};

struct distance_metric {
  enum class kind_t { geodesic, euclidean };
  kind_t kind = kind_t::geodesic;
  double earth_radius_km = kDefaultEarthRadiusKm;

  static distance_metric geodesic(double radius_km = kDefaultEarthRadiusKm) {
    if (!(radius_km > 0.0)) throw domain_error("earth radius must be positive");
    return {kind_t::geodesic, radius_km};
  }
  static distance_metric euclidean() { return {kind_t::euclidean, 0.0}; }
};

struct polygon {
  // closed ring: first vertex == last vertex
  std::vector<location> ring;
};

struct region_partition {
  std::vector<std::string> names;
  std::vector<polygon> polygons;

  std::size_t size() const { return names.size(); }
};

inline double distance(const location& a, const location& b,
                       const distance_metric& m) {
  if (m.kind == distance_metric::kind_t::euclidean) {
    return std::hypot(a.lon - b.lon, a.lat - b.lat);
  }
  if (std::fabs(a.lat) > 90.0 || std::fabs(b.lat) > 90.0) {
    throw domain_error("geodesic distance: latitude out of [-90, 90]");
  }
  constexpr double deg = 0.017453292519943295;  // pi / 180
  const double phi1 = a.lat * deg;
  const double phi2 = b.lat * deg;
  const double dphi = (b.lat - a.lat) * deg;
  const double dlam = (b.lon - a.lon) * deg;
  const double sp = std::sin(0.5 * dphi);
  const double sl = std::sin(0.5 * dlam);
  const double h = sp * sp + std::cos(phi1) * std::cos(phi2) * sl * sl;
  return 2.0 * m.earth_radius_km * std::asin(std::min(1.0, std::sqrt(h)));
}

// Symmetric by construction: the upper triangle mirrors the lower bitwise.
inline Eigen::MatrixXd distance_matrix(const std::vector<location>& locs,
                                       const distance_metric& m) {
  const Eigen::Index n = static_cast<Eigen::Index>(locs.size());
  if (n < 1) throw domain_error("distance_matrix: need at least one location");
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < i; ++j) {
      const double dij = distance(locs[static_cast<std::size_t>(i)],
                                  locs[static_cast<std::size_t>(j)], m);
      d(i, j) = dij;
      d(j, i) = dij;
    }
  }
  return d;
}

inline double max_pairwise_distance(const std::vector<location>& locs,
                                    const distance_metric& m) {
  double best = 0.0;
  for (std::size_t i = 0; i < locs.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      best = std::max(best, distance(locs[i], locs[j], m));
    }
  }
  return best;
}

namespace detail {

inline bool on_segment(const location& p, const location& a, const location& b) {
  const double cross =
      (b.lon - a.lon) * (p.lat - a.lat) - (b.lat - a.lat) * (p.lon - a.lon);
  if (std::fabs(cross) > 1e-12 * (std::fabs(b.lon - a.lon) + std::fabs(b.lat - a.lat) + 1.0)) {
    return false;
  }
  return p.lon >= std::min(a.lon, b.lon) - 1e-12 &&
         p.lon <= std::max(a.lon, b.lon) + 1e-12 &&
         p.lat >= std::min(a.lat, b.lat) - 1e-12 &&
         p.lat <= std::max(a.lat, b.lat) + 1e-12;
}

}  // namespace detail

// Even-odd ray casting; points on an edge count as inside.
inline bool point_in_polygon(const location& p, const polygon& poly) {
  const auto& ring = poly.ring;
  if (ring.size() < 4) return false;  // closed triangle needs 4 vertices
  bool inside = false;
  for (std::size_t k = 0; k + 1 < ring.size(); ++k) {
    const location& a = ring[k];
    const location& b = ring[k + 1];
    if (detail::on_segment(p, a, b)) return true;
    const bool crosses = (a.lat > p.lat) != (b.lat > p.lat);
    if (crosses) {
      const double x_at = a.lon + (p.lat - a.lat) / (b.lat - a.lat) * (b.lon - a.lon);
      if (p.lon < x_at) inside = !inside;
    }
  }
  return inside;
}

struct bounding_box {
  double lon_min = 0.0, lat_min = 0.0, lon_max = 0.0, lat_max = 0.0;
};

inline bounding_box bounds_of(const polygon& poly) {
  bounding_box bb{poly.ring.front().lon, poly.ring.front().lat,
                  poly.ring.front().lon, poly.ring.front().lat};
  for (const auto& v : poly.ring) {
    bb.lon_min = std::min(bb.lon_min, v.lon);
    bb.lon_max = std::max(bb.lon_max, v.lon);
    bb.lat_min = std::min(bb.lat_min, v.lat);
    bb.lat_max = std::max(bb.lat_max, v.lat);
  }
  return bb;
}

inline bounding_box bounds_of(const region_partition& part) {
  bounding_box bb = bounds_of(part.polygons.front());
  for (const auto& poly : part.polygons) {
    bounding_box b = bounds_of(poly);
    bb.lon_min = std::min(bb.lon_min, b.lon_min);
    bb.lon_max = std::max(bb.lon_max, b.lon_max);
    bb.lat_min = std::min(bb.lat_min, b.lat_min);
    bb.lat_max = std::max(bb.lat_max, b.lat_max);
  }
  return bb;
}

// Cell centers of a regular grid over `bbox`, keeping a cell iff its center
// lies inside the boundary. Row-major: lat rows ascending, lon within a row
// ascending. An empty result warns rather than errors.
inline std::vector<location> make_grid(const bounding_box& bbox, double resolution,
                                       const polygon& boundary) {
  if (!(resolution > 0.0)) throw domain_error("make_grid: resolution must be > 0");
  std::vector<location> cells;
  const double eps = 1e-9 * resolution;
  for (long j = 0;; ++j) {
    const double lat = bbox.lat_min + (static_cast<double>(j) + 0.5) * resolution;
    if (lat > bbox.lat_max + eps) break;
    for (long i = 0;; ++i) {
      const double lon = bbox.lon_min + (static_cast<double>(i) + 0.5) * resolution;
      if (lon > bbox.lon_max + eps) break;
      location c{lon, lat};
      if (point_in_polygon(c, boundary)) cells.push_back(c);
    }
  }
  if (cells.empty()) {
    std::cerr << "warning: make_grid produced no cells inside the boundary\n";
  }
  return cells;
}

// Union-of-polygons variant used when a boundary file carries several parts.
inline std::vector<location> make_grid(const bounding_box& bbox, double resolution,
                                       const region_partition& boundary) {
  if (!(resolution > 0.0)) throw domain_error("make_grid: resolution must be > 0");
  std::vector<location> cells;
  const double eps = 1e-9 * resolution;
  for (long j = 0;; ++j) {
    const double lat = bbox.lat_min + (static_cast<double>(j) + 0.5) * resolution;
    if (lat > bbox.lat_max + eps) break;
    for (long i = 0;; ++i) {
      const double lon = bbox.lon_min + (static_cast<double>(i) + 0.5) * resolution;
      if (lon > bbox.lon_max + eps) break;
      location c{lon, lat};
      for (const auto& poly : boundary.polygons) {
        if (point_in_polygon(c, poly)) {
          cells.push_back(c);
          break;
        }
      }
    }
  }
  if (cells.empty()) {
    std::cerr << "warning: make_grid produced no cells inside the boundary\n";
  }
  return cells;
}

// First declared region whose polygon contains the point; nullopt otherwise.
inline std::optional<std::string> assign_region(const location& loc,
                                                const region_partition& part) {
  for (std::size_t k = 0; k < part.polygons.size(); ++k) {
    if (point_in_polygon(loc, part.polygons[k])) return part.names[k];
  }
  return std::nullopt;
}

// Plain-text polygon file: one region per block, a name line followed by
// "lon,lat" vertex lines, blocks separated by blank lines. Rings must be
// explicitly closed (first vertex repeated at the end).
inline region_partition read_region_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open region file: " + path);
  region_partition part;
  std::string line;
  std::string name;
  polygon poly;
  auto flush_block = [&]() {
    if (name.empty() && poly.ring.empty()) return;
    if (name.empty()) throw ingest_error("region file " + path + ": block without a name line");
    if (poly.ring.size() < 4) {
      throw ingest_error("region '" + name + "': polygon needs at least 3 distinct vertices");
    }
    const location& first = poly.ring.front();
    const location& last = poly.ring.back();
    if (first.lon != last.lon || first.lat != last.lat) {
      throw ingest_error("region '" + name + "': polygon ring not closed (first vertex must equal last)");
    }
    part.names.push_back(name);
    part.polygons.push_back(std::move(poly));
    name.clear();
    poly = polygon{};
  };
  while (std::getline(in, line)) {
    // trim trailing CR and surrounding whitespace
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) {
      line.pop_back();
    }
    std::size_t start = line.find_first_not_of(" \t");
    if (start == std::string::npos) {
      flush_block();
      continue;
    }
    std::string trimmed = line.substr(start);
    if (trimmed[0] == '#') continue;
    const std::size_t comma = trimmed.find(',');
    if (name.empty()) {
      name = trimmed;
      continue;
    }
    if (comma == std::string::npos) {
      throw ingest_error("region '" + name + "': expected 'lon,lat' vertex line, got '" + trimmed + "'");
    }
    location v;
    try {
      v.lon = std::stod(trimmed.substr(0, comma));
      v.lat = std::stod(trimmed.substr(comma + 1));
    } catch (const std::exception&) {
      throw ingest_error("region '" + name + "': cannot parse vertex line '" + trimmed + "'");
    }
    poly.ring.push_back(v);
  }
  flush_block();
  if (part.size() == 0) throw ingest_error("region file " + path + ": no regions found");
  return part;
}

}  // namespace censpatial
