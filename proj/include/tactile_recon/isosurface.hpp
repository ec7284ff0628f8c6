#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "tactile_recon/geometry.hpp"
#include "tactile_recon/gp_surface.hpp"

namespace tactile {

/// Regular lattice over `bounds` with `cells` per axis; (cells+1)^3 corners.
class GridSpec {
 public:
  GridSpec(Aabb bounds, std::array<int, 3> cells);

  const Aabb& bounds() const { return bounds_; }
  const std::array<int, 3>& cells() const { return cells_; }
  std::array<std::size_t, 3> corners_per_axis() const;
  std::size_t corner_count() const;
  Point3 spacing() const;
  double cell_diagonal() const { return norm(spacing()); }

  /// Corner (i, j, k); x varies fastest in the flat index.
  std::size_t flat(std::size_t i, std::size_t j, std::size_t k) const;
  Point3 corner(std::size_t i, std::size_t j, std::size_t k) const;
  std::vector<Point3> corner_positions() const;

 private:
  Aabb bounds_;
  std::array<int, 3> cells_;
};

/// Mean and variance sampled at every lattice corner.
struct VolumeGrid {
  GridSpec spec;
  std::vector<double> mean;
  std::vector<double> variance;

  /// Throws if array lengths disagree with the corner count or hold non-finite values.
  void validate() const;
};

VolumeGrid sample_grid(const GpModel& model, const GridSpec& spec);
/// Samples an arbitrary field; `variance` may be empty (zero variance).
VolumeGrid sample_function(const GridSpec& spec, const std::function<double(const Point3&)>& mean,
                           const std::function<double(const Point3&)>& variance = {});

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  bool operator==(const Rgb&) const = default;
};

struct VarianceRange {
  double min = 0.0;
  double max = 0.0;
};

/// Triangle mesh with per-vertex posterior variance and display color.
struct ColoredMesh {
  std::vector<Point3> vertices;
  std::vector<std::array<std::uint32_t, 3>> triangles;
  std::vector<double> variance;
  std::vector<Rgb> colors;  // empty until colorized
  std::optional<VarianceRange> variance_range;

  bool empty() const { return triangles.empty(); }
  /// Checks index ranges, degenerate triangles and per-vertex array sizes.
  void validate() const;
};

/// Extracts the `iso` level set. Corners with value < iso count as inside.
/// Vertices are shared between cells through their lattice edge, and
/// triangles wind counter-clockwise seen from the outside.
ColoredMesh marching_cubes(const VolumeGrid& grid, double iso = 0.0);

/// Blue (0,0,255) at the minimum vertex variance to red (255,0,0) at the
/// maximum, channels rounded half-up. A constant-variance mesh is all blue.
void colorize(ColoredMesh& mesh);
Rgb variance_color(double variance, const VarianceRange& range);

struct MeshTopology {
  std::size_t vertices = 0;
  std::size_t edges = 0;
  std::size_t faces = 0;
  std::size_t boundary_edges = 0;     // used by one triangle
  std::size_t nonmanifold_edges = 0;  // used by three or more
  long euler_characteristic() const {
    return static_cast<long>(vertices) - static_cast<long>(edges) + static_cast<long>(faces);
  }
  bool closed_manifold() const { return boundary_edges == 0 && nonmanifold_edges == 0; }
};

/// Edge-incidence census over referenced vertices.
MeshTopology analyze_topology(const ColoredMesh& mesh);

}  // namespace tactile
