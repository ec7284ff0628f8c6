#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tactile_recon/geometry.hpp"
#include "tactile_recon/gp_surface.hpp"
#include "tactile_recon/isosurface.hpp"

namespace tactile {

/// Planar centroid distance (cm) and long-axis angle (degrees, folded into [0, 90]).
struct PlacementError {
  double d_cm = 0.0;
  double alpha_deg = 0.0;
};

PlacementError placement_error(const RigidPose2D& placed, const RigidPose2D& target);

struct ReconOptions {
  std::size_t surface_samples = 10000;
  double coverage_radius = 5e-3;  // a truth sample is covered within this of a vertex
  double probed_radius = 2e-2;    // a truth sample is probed within this of a contact
  std::uint64_t seed = 12345;
};

struct ReconReport {
  double mean_abs_sdf = 0.0;
  double max_abs_sdf = 0.0;
  double chamfer = 0.0;
  double coverage = 0.0;
  double probed_coverage = 0.0;  // coverage restricted to probed truth samples
  double probed_fraction = 0.0;
  double mean_var_probed = 0.0;
  double mean_var_unprobed = 0.0;
  std::size_t vertex_count = 0;
  std::size_t triangle_count = 0;
};

/// Scores a reconstruction against the analytic truth. Variance per truth
/// sample comes from `model` when given, else from the nearest mesh vertex.
/// Throws EmptyReconstruction for a mesh without triangles.
ReconReport recon_report(const ColoredMesh& mesh, const GroundTruthShape& truth, const ContactDataset& contacts,
                         const ReconOptions& options = {}, const GpModel* model = nullptr);

/// Symmetric mean nearest-neighbour distance.
double chamfer_distance(const std::vector<Point3>& a, const std::vector<Point3>& b);

/// Index of the nearest point in a fixed cloud, bucketed on a uniform grid.
class NearestNeighbors {
 public:
  NearestNeighbors(const std::vector<Point3>& points, double cell);
  /// Returns (index, distance); the cloud must be non-empty.
  std::pair<std::size_t, double> nearest(const Point3& q) const;

 private:
  std::int64_t key(std::int64_t i, std::int64_t j, std::int64_t k) const;
  std::array<std::int64_t, 3> cell_of(const Point3& p) const;

  const std::vector<Point3>& points_;
  double cell_;
  Point3 origin_;
  std::array<std::int64_t, 3> dims_{};
  std::vector<std::uint32_t> order_;
  std::vector<std::uint32_t> offsets_;
};

struct TrialResult {
  std::optional<PlacementError> error;  // empty for a failed trial
  double completion_s = 0.0;
  std::string object;
  int day = 1;
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

/// Descriptive statistics over the successful trials of one group.
struct SessionSummary {
  std::optional<MeanStd> position_cm;
  std::optional<MeanStd> orientation_deg;
  std::optional<MeanStd> completion_s;
  std::size_t failures = 0;
  std::size_t trials = 0;

  /// Failures as "k/n".
  std::string failure_label() const;
};

/// Sample mean and (n-1) standard deviation; std is 0 for a single value.
MeanStd mean_std(const std::vector<double>& values);

/// Throws InvalidArgument on an empty list.
SessionSummary summarize(const std::vector<TrialResult>& trials);

struct GroupSummary {
  std::string object;
  int day = 0;
  SessionSummary summary;
};

/// One summary per (object, day), plus an "overall" row per object (day 0).
std::vector<GroupSummary> summarize_by_group(const std::vector<TrialResult>& trials);

std::string format_table(const std::vector<GroupSummary>& groups);

}  // namespace tactile
