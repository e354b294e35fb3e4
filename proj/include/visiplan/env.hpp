#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "visiplan/common.hpp"

namespace visiplan {

/// Boolean voxel map. Cell (i,j,k) spans
/// [origin + (i,j,k)*resolution, origin + (i+1,j+1,k+1)*resolution).
///
/// A grid with a single z layer is a planar map: obstacles extend infinitely
/// in z and every world z maps onto layer 0.
class OccupancyGrid {
 public:
  OccupancyGrid() = default;
  OccupancyGrid(double resolution, const Vec3& origin, const Vec3i& dims);

  double resolution() const { return resolution_; }
  const Vec3& origin() const { return origin_; }
  const Vec3i& dims() const { return dims_; }
  bool planar() const { return dims_.z() == 1; }
  std::size_t cell_count() const { return occupied_.size(); }

  bool in_bounds(const Vec3i& c) const {
    return c.x() >= 0 && c.y() >= 0 && c.z() >= 0 && c.x() < dims_.x() &&
           c.y() < dims_.y() && c.z() < dims_.z();
  }
  std::size_t linear_index(const Vec3i& c) const {
    return (static_cast<std::size_t>(c.z()) * dims_.y() + c.y()) * dims_.x() + c.x();
  }

  /// Cell containing world point p (may be out of bounds).
  Vec3i cell_of(const Vec3& p) const;
  Vec3 center_of(const Vec3i& c) const;

  bool occupied(const Vec3i& c) const {
    return in_bounds(c) && occupied_[linear_index(c)] != 0;
  }
  /// Out-of-bounds points are free.
  bool occupied_at(const Vec3& p) const { return occupied(cell_of(p)); }
  void set_occupied(const Vec3i& c, bool value = true);

  std::size_t occupied_count() const;
  /// World-space extent [origin, origin + dims*resolution].
  Vec3 max_corner() const { return origin_ + dims_.cast<double>() * resolution_; }

  bool operator==(const OccupancyGrid&) const = default;

 private:
  double resolution_ = 1.0;
  Vec3 origin_ = Vec3::Zero();
  Vec3i dims_ = Vec3i::Ones();
  std::vector<unsigned char> occupied_ = std::vector<unsigned char>(1, 0);
};

/// Truncated Euclidean distance field sampled at cell centers. Occupied cells
/// store 0 (no signed interior distance). Immutable after construction.
class EsdfField {
 public:
  EsdfField() = default;

  double resolution() const { return resolution_; }
  const Vec3& origin() const { return origin_; }
  const Vec3i& dims() const { return dims_; }
  double truncation() const { return d_trunc_; }
  bool planar() const { return dims_.z() == 1; }

  /// Stored distance of an in-bounds cell.
  double cell_distance(const Vec3i& c) const {
    return distance_[(static_cast<std::size_t>(c.z()) * dims_.y() + c.y()) * dims_.x() + c.x()];
  }
  const std::vector<double>& distances() const { return distance_; }

  /// Trilinear interpolation of cell-center distances. Points outside the box
  /// spanned by the cell centers are clamped onto it first.
  double sample_distance(const Vec3& p) const;
  /// Analytic gradient of sample_distance. Zero along clamped axes and along
  /// z for planar fields.
  Vec3 sample_gradient(const Vec3& p) const;
  /// Value and gradient in one lookup.
  double sample(const Vec3& p, Vec3* gradient) const;

 private:
  friend EsdfField build_esdf(const OccupancyGrid& grid, double d_trunc);

  double resolution_ = 1.0;
  Vec3 origin_ = Vec3::Zero();
  Vec3i dims_ = Vec3i::Ones();
  double d_trunc_ = 5.0;
  std::vector<double> distance_ = std::vector<double>(1, 5.0);
};

inline constexpr double kDefaultTruncation = 5.0;

/// Exact Euclidean distance transform (separable lower-envelope method) to the
/// nearest occupied cell center, clamped to d_trunc.
EsdfField build_esdf(const OccupancyGrid& grid, double d_trunc = kDefaultTruncation);

// Grid files.
//
// JSON: {"resolution": r, "origin": [x,y,z], "dims": [nx,ny,nz],
//        "occupied": [[i,j,k], ...]}
// ASCII raster (planar only): '#' occupied, '.' free, one row per line; the
// first line is the highest y row.

OccupancyGrid parse_grid_json(const std::string& text);
std::string grid_to_json(const OccupancyGrid& grid);
OccupancyGrid parse_grid_ascii(const std::string& text, double resolution,
                               const Vec3& origin = Vec3::Zero());
/// Loads by extension: ".json" as JSON, anything else as ASCII raster.
OccupancyGrid load_grid(const std::string& path, double ascii_resolution = 0.1,
                        const Vec3& ascii_origin = Vec3::Zero());

}  // namespace visiplan
