#include "tactile_recon/isosurface.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "mc_tables.hpp"
#include "tactile_recon/error.hpp"

namespace tactile {

GridSpec::GridSpec(Aabb bounds, std::array<int, 3> cells) : bounds_(bounds), cells_(cells) {
  for (int c : cells) {
    if (c < 2) throw Error(ErrorKind::InvalidArgument, "grid: resolution must be >= 2 cells per axis");
  }
}

std::array<std::size_t, 3> GridSpec::corners_per_axis() const {
  return {static_cast<std::size_t>(cells_[0]) + 1, static_cast<std::size_t>(cells_[1]) + 1,
          static_cast<std::size_t>(cells_[2]) + 1};
}

std::size_t GridSpec::corner_count() const {
  const auto n = corners_per_axis();
  return n[0] * n[1] * n[2];
}

Point3 GridSpec::spacing() const {
  const Point3 e = bounds_.extent();
  return {e.x / cells_[0], e.y / cells_[1], e.z / cells_[2]};
}

std::size_t GridSpec::flat(std::size_t i, std::size_t j, std::size_t k) const {
  const auto n = corners_per_axis();
  return i + n[0] * (j + n[1] * k);
}

Point3 GridSpec::corner(std::size_t i, std::size_t j, std::size_t k) const {
  // Interpolate between the bounds so the last corner lands exactly on max.
  auto along = [](double lo, double hi, std::size_t idx, int cells) {
    const double t = static_cast<double>(idx) / cells;
    return idx == static_cast<std::size_t>(cells) ? hi : lo + t * (hi - lo);
  };
  const Point3& lo = bounds_.min();
  const Point3& hi = bounds_.max();
  return {along(lo.x, hi.x, i, cells_[0]), along(lo.y, hi.y, j, cells_[1]), along(lo.z, hi.z, k, cells_[2])};
}

std::vector<Point3> GridSpec::corner_positions() const {
  const auto n = corners_per_axis();
  std::vector<Point3> out;
  out.reserve(corner_count());
  for (std::size_t k = 0; k < n[2]; ++k)
    for (std::size_t j = 0; j < n[1]; ++j)
      for (std::size_t i = 0; i < n[0]; ++i) out.push_back(corner(i, j, k));
  return out;
}

void VolumeGrid::validate() const {
  const std::size_t n = spec.corner_count();
  if (mean.size() != n || variance.size() != n) {
    throw Error(ErrorKind::InvalidArgument, "grid: value arrays do not match corner count " + std::to_string(n));
  }
  auto finite = [](double v) { return std::isfinite(v); };
  if (!std::all_of(mean.begin(), mean.end(), finite) || !std::all_of(variance.begin(), variance.end(), finite)) {
    throw Error(ErrorKind::Numerical, "grid: non-finite field value");
  }
}

VolumeGrid sample_grid(const GpModel& model, const GridSpec& spec) {
  const std::vector<Point3> corners = spec.corner_positions();
  VolumeGrid grid{spec, {}, {}};
  grid.mean.reserve(corners.size());
  grid.variance.reserve(corners.size());
  for (const auto& s : model.posterior(corners)) {
    grid.mean.push_back(s.mean);
    grid.variance.push_back(s.variance);
  }
  grid.validate();
  return grid;
}

VolumeGrid sample_function(const GridSpec& spec, const std::function<double(const Point3&)>& mean,
                           const std::function<double(const Point3&)>& variance) {
  const std::vector<Point3> corners = spec.corner_positions();
  VolumeGrid grid{spec, {}, {}};
  grid.mean.reserve(corners.size());
  grid.variance.reserve(corners.size());
  for (const auto& p : corners) {
    grid.mean.push_back(mean(p));
    grid.variance.push_back(variance ? variance(p) : 0.0);
  }
  grid.validate();
  return grid;
}

void ColoredMesh::validate() const {
  if (variance.size() != vertices.size()) throw Error(ErrorKind::InvalidArgument, "mesh: variance count mismatch");
  if (!colors.empty() && colors.size() != vertices.size()) {
    throw Error(ErrorKind::InvalidArgument, "mesh: color count mismatch");
  }
  for (const auto& t : triangles) {
    for (auto idx : t) {
      if (idx >= vertices.size()) throw Error(ErrorKind::InvalidArgument, "mesh: triangle index out of range");
    }
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) {
      throw Error(ErrorKind::InvalidArgument, "mesh: degenerate triangle");
    }
  }
}

namespace {

// Cube corner offsets and edge endpoints in the table's numbering.
constexpr int kCornerOffset[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                                     {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
constexpr int kEdgeCorners[12][2] = {{0, 1}, {1, 2}, {3, 2}, {0, 3}, {4, 5}, {5, 6},
                                     {7, 6}, {4, 7}, {0, 4}, {1, 5}, {2, 6}, {3, 7}};
// Axis of each edge; the first corner above is always the lower end.
constexpr int kEdgeAxis[12] = {0, 1, 0, 1, 0, 1, 0, 1, 2, 2, 2, 2};

constexpr std::uint32_t kNoVertex = std::numeric_limits<std::uint32_t>::max();

}  // namespace

ColoredMesh marching_cubes(const VolumeGrid& grid, double iso) {
  grid.validate();
  const GridSpec& spec = grid.spec;
  const auto cells = spec.cells();

  ColoredMesh mesh;
  // One slot per (corner, axis) lattice edge.
  std::vector<std::uint32_t> edge_vertex(spec.corner_count() * 3, kNoVertex);

  auto vertex_on_edge = [&](std::size_t lower, std::size_t upper, std::size_t slot, const Point3& pa,
                            const Point3& pb) -> std::uint32_t {
    std::uint32_t& id = edge_vertex[slot];
    if (id != kNoVertex) return id;
    const double va = grid.mean[lower];
    const double vb = grid.mean[upper];
    const double t = (iso - va) / (vb - va);
    mesh.vertices.push_back(pa + (pb - pa) * t);
    mesh.variance.push_back(grid.variance[lower] + t * (grid.variance[upper] - grid.variance[lower]));
    id = static_cast<std::uint32_t>(mesh.vertices.size() - 1);
    return id;
  };

  for (int k = 0; k < cells[2]; ++k) {
    for (int j = 0; j < cells[1]; ++j) {
      for (int i = 0; i < cells[0]; ++i) {
        std::size_t corner_index[8];
        int cube = 0;
        for (int c = 0; c < 8; ++c) {
          corner_index[c] = spec.flat(static_cast<std::size_t>(i + kCornerOffset[c][0]),
                                      static_cast<std::size_t>(j + kCornerOffset[c][1]),
                                      static_cast<std::size_t>(k + kCornerOffset[c][2]));
          if (grid.mean[corner_index[c]] < iso) cube |= 1 << c;
        }
        const int edges = detail::kEdgeTable[cube];
        if (edges == 0) continue;

        std::uint32_t local[12];
        for (int e = 0; e < 12; ++e) {
          if (!(edges & (1 << e))) continue;
          const int a = kEdgeCorners[e][0];
          const int b = kEdgeCorners[e][1];
          const Point3 pa = spec.corner(static_cast<std::size_t>(i + kCornerOffset[a][0]),
                                       static_cast<std::size_t>(j + kCornerOffset[a][1]),
                                       static_cast<std::size_t>(k + kCornerOffset[a][2]));
          const Point3 pb = spec.corner(static_cast<std::size_t>(i + kCornerOffset[b][0]),
                                       static_cast<std::size_t>(j + kCornerOffset[b][1]),
                                       static_cast<std::size_t>(k + kCornerOffset[b][2]));
          local[e] = vertex_on_edge(corner_index[a], corner_index[b], corner_index[a] * 3 + kEdgeAxis[e], pa, pb);
        }
        const int* tri = detail::kTriTable[cube];
        for (int t = 0; tri[t] != -1; t += 3) {
          // The table winds clockwise from outside in this corner numbering.
          mesh.triangles.push_back({local[tri[t]], local[tri[t + 2]], local[tri[t + 1]]});
        }
      }
    }
  }
  return mesh;
}

Rgb variance_color(double variance, const VarianceRange& range) {
  const double span = range.max - range.min;
  double t = span > 0.0 ? (variance - range.min) / span : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  auto channel = [](double x) { return static_cast<std::uint8_t>(std::floor(255.0 * x + 0.5)); };
  return {channel(t), 0, channel(1.0 - t)};
}

void colorize(ColoredMesh& mesh) {
  mesh.colors.clear();
  if (mesh.vertices.empty()) {
    mesh.variance_range.reset();
    return;
  }
  const auto [lo, hi] = std::minmax_element(mesh.variance.begin(), mesh.variance.end());
  const VarianceRange range{*lo, *hi};
  mesh.variance_range = range;
  mesh.colors.reserve(mesh.vertices.size());
  for (double v : mesh.variance) mesh.colors.push_back(variance_color(v, range));
}

MeshTopology analyze_topology(const ColoredMesh& mesh) {
  std::map<std::pair<std::uint32_t, std::uint32_t>, int> edge_use;
  std::vector<bool> referenced(mesh.vertices.size(), false);
  for (const auto& t : mesh.triangles) {
    for (int e = 0; e < 3; ++e) {
      const std::uint32_t a = t[static_cast<std::size_t>(e)];
      const std::uint32_t b = t[static_cast<std::size_t>((e + 1) % 3)];
      ++edge_use[{std::min(a, b), std::max(a, b)}];
      referenced[a] = true;
    }
  }
  MeshTopology topo;
  topo.vertices = static_cast<std::size_t>(std::count(referenced.begin(), referenced.end(), true));
  topo.edges = edge_use.size();
  topo.faces = mesh.triangles.size();
  for (const auto& [edge, uses] : edge_use) {
    if (uses == 1) ++topo.boundary_edges;
    if (uses > 2) ++topo.nonmanifold_edges;
  }
  return topo;
}

}  // namespace tactile
