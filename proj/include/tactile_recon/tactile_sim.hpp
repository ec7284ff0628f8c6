#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "tactile_recon/geometry.hpp"
#include "tactile_recon/gp_surface.hpp"

namespace tactile {

/// Virtual fixture: the end effector may not leave `region`.
class WorkspaceFixture {
 public:
  explicit WorkspaceFixture(Aabb region) : region_(region) {}

  /// 60 x 60 x 40 cm box standing on the table, centered on the origin.
  static WorkspaceFixture default_box();

  const Aabb& region() const { return region_; }
  Point3 clamp(const Point3& p) const { return region_.clamp(p); }

 private:
  Aabb region_;
};

Point3 fixture_clamp(const WorkspaceFixture& fixture, const Point3& p);

class ProbeRay {
 public:
  /// Normalizes `direction`; throws on a zero or non-finite direction.
  ProbeRay(Point3 origin, Point3 direction);

  const Point3& origin() const { return origin_; }
  const Point3& direction() const { return direction_; }
  Point3 at(double t) const { return origin_ + direction_ * t; }

 private:
  Point3 origin_;
  Point3 direction_;
};

inline constexpr double kContactTolerance = 5e-5;  // |sdf| below this is a touch
inline constexpr double kMinTraceStep = 1e-4;

struct ProbeOutcome {
  std::optional<Point3> contact;  // empty on a miss
  double travelled = 0.0;

  bool hit() const { return contact.has_value(); }
};

/// Sphere-traces the analytic SDF along the ray.
ProbeOutcome probe(const GroundTruthShape& shape, const ProbeRay& ray, double max_dist);

enum class PolicyKind { RadialInward, TopDownGrid, RandomDirections };

std::string to_string(PolicyKind kind);
/// Accepts "radial-inward", "top-down-grid", "random-directions".
PolicyKind parse_policy_kind(const std::string& name);

/// Scripted stand-in for the operator's exploration. Probes start on the
/// sphere `region` (the prior's semi-sphere for radial-inward).
struct ExplorationPolicy {
  PolicyKind kind = PolicyKind::RadialInward;
  int probe_count = 100;
  std::uint64_t seed = 1;
  double noise_sigma = 5e-4;
  SphericalPrior region;
  std::int64_t start_ms = 0;
  std::int64_t probe_interval_ms = 50;
  int sensor_count = 4;
};

/// Contacts in probe order; positions are noise-perturbed then clamped.
/// Identical policies yield identical sequences.
std::vector<ContactPoint> explore(const ExplorationPolicy& policy, const GroundTruthShape& shape,
                                  const WorkspaceFixture& fixture);

enum class TrialPhase { Searching, Reconstructing, Placing, Done };
enum class TrialOutcome { Pending, Success, Timeout, WrongConfiguration };

std::string to_string(TrialPhase phase);
std::string to_string(TrialOutcome outcome);

inline constexpr double kGreenDurationS = 20.0;
inline constexpr double kBlueDurationS = 120.0;

namespace event {
struct FirstContact {};
struct Tick {
  double seconds = 0.0;
};
struct Placed {
  bool configuration_ok = true;
};
}  // namespace event

using TrialEvent = std::variant<event::FirstContact, event::Tick, event::Placed>;

struct PhaseEntry {
  TrialPhase phase;
  double at_s;
};

/// Virtual-clock trial state machine: searching until the first touch, a
/// fixed reconstruction window, then a bounded placement window.
class TrialTimeline {
 public:
  TrialTimeline();

  /// Throws a Protocol error for an event the current phase does not accept.
  void apply(const TrialEvent& e);

  TrialPhase phase() const { return phase_; }
  TrialOutcome outcome() const { return outcome_; }
  double clock_s() const { return clock_s_; }
  double green_remaining_s() const { return green_remaining_s_; }
  double blue_remaining_s() const { return blue_remaining_s_; }
  const std::vector<PhaseEntry>& history() const { return history_; }
  /// Time spent from the first touch to the end of the trial.
  std::optional<double> completion_s() const;
  /// Time spent in the placement phase.
  std::optional<double> placement_s() const;

 private:
  void enter(TrialPhase p);
  std::optional<double> entered(TrialPhase p) const;

  TrialPhase phase_ = TrialPhase::Searching;
  TrialOutcome outcome_ = TrialOutcome::Pending;
  double clock_s_ = 0.0;
  double green_remaining_s_ = kGreenDurationS;
  double blue_remaining_s_ = kBlueDurationS;
  std::vector<PhaseEntry> history_;
};

TrialTimeline advance_timeline(TrialTimeline timeline, const TrialEvent& e);

}  // namespace tactile
