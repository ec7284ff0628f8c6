#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tactile_recon/geometry.hpp"
#include "tactile_recon/gp_surface.hpp"
#include "tactile_recon/isosurface.hpp"
#include "tactile_recon/metrics.hpp"
#include "tactile_recon/tactile_sim.hpp"

namespace tactile {

/// Which ground-truth object a scenario explores. Dimensions are meters
/// here; the config file states object sizes in centimeters.
struct ObjectSpec {
  std::string kind = "O1";  // O1 | O2 | O3 | sphere | box | cylinder
  Eigen::Vector3d dims = Eigen::Vector3d::Zero();  // box: full edge lengths; cylinder: (radius, -, height)
  double radius = 0.0;                             // sphere
  Point3 center;                                   // sphere / box / cylinder
  double yaw = 0.0;                                // box / cylinder, radians

  GroundTruthShape build() const;
};

struct PlacementSpec {
  RigidPose2D placed;
  bool configuration_ok = true;
  double after_s = 0.0;  // time into the placement phase
};

struct ScenarioConfig {
  ObjectSpec object;
  SphericalPrior prior;
  std::optional<double> kernel_scale;
  std::optional<double> noise_var;
  double dedup_radius = ContactDataset::kDefaultDedupRadius;

  PolicyKind policy = PolicyKind::RadialInward;
  int probes = 100;
  std::uint64_t seed = 0;
  double noise_sigma = 5e-4;
  std::int64_t probe_interval_ms = 50;
  double search_time_s = 0.0;

  Aabb fixture{{-0.3, -0.3, 0.0}, {0.3, 0.3, 0.4}};
  Aabb grid_bounds{{-0.3, -0.3, 0.0}, {0.3, 0.3, 0.4}};
  std::array<int, 3> grid_cells{48, 48, 48};
  int snapshot_every = 5;
  int snapshot_cells = 24;

  RigidPose2D target;
  std::optional<PlacementSpec> placement;
  ReconOptions report;

  std::filesystem::path output_dir = "recon_out";

  /// Smallest box holding the fixture and the grid. Contacts and queries
  /// both live inside it, so the kernel scale must cover its diagonal.
  Aabb reach_box() const;
  GpParams gp_params() const;
  GridSpec grid() const;
  GridSpec snapshot_grid() const;
  ExplorationPolicy exploration() const;
  WorkspaceFixture workspace() const { return WorkspaceFixture(fixture); }
};

/// Parses and validates a JSON scenario. Errors are Config errors naming the
/// offending key path, e.g. "exploration.probes: must be >= 1".
ScenarioConfig parse_scenario(const std::string& json_text);
ScenarioConfig load_scenario(const std::filesystem::path& path);

struct RunOptions {
  std::optional<std::filesystem::path> output_dir;
  std::optional<std::uint64_t> seed;
  bool deterministic = false;
};

/// Names of the artifacts a run writes, relative to the output directory.
namespace artifact {
inline constexpr const char* kContacts = "contacts.csv";
inline constexpr const char* kFinalMesh = "final_mesh.ply";
inline constexpr const char* kUpdates = "updates.ndjson";
inline constexpr const char* kReport = "report.json";
inline constexpr const char* kTimeline = "timeline.json";
inline constexpr const char* kManifest = "manifest.json";
inline constexpr const char* kSnapshotDir = "snapshots";
}  // namespace artifact

struct RunResult {
  std::filesystem::path output_dir;
  std::size_t contacts_logged = 0;
  std::size_t contacts_used = 0;
  ColoredMesh final_mesh;
  ReconReport report;
  TrialTimeline timeline;
  std::optional<PlacementError> placement;
};

/// Simulated exploration followed by reconstruction; writes every artifact.
RunResult run_scenario(ScenarioConfig config, const RunOptions& options = {});

/// Rebuilds from a saved contact log with the same pipeline as `run_scenario`.
RunResult replay_scenario(const std::vector<ContactPoint>& contacts, ScenarioConfig config,
                          const RunOptions& options = {});

/// Keeps contacts up to the end of the reconstruction window that opens at
/// the first contact; the simulator stops touching once placement begins.
std::vector<ContactPoint> clip_to_reconstruction_window(const std::vector<ContactPoint>& contacts);

std::string report_to_json(const ReconReport& report);

}  // namespace tactile
