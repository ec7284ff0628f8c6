#include "tactile_recon/tactile_sim.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "tactile_recon/error.hpp"

namespace tactile {

WorkspaceFixture WorkspaceFixture::default_box() { return WorkspaceFixture(Aabb({-0.3, -0.3, 0.0}, {0.3, 0.3, 0.4})); }

Point3 fixture_clamp(const WorkspaceFixture& fixture, const Point3& p) { return fixture.clamp(p); }

ProbeRay::ProbeRay(Point3 origin, Point3 direction) : origin_(origin) {
  const double len = norm(direction);
  if (!origin.finite() || !std::isfinite(len) || len == 0.0) {
    throw Error(ErrorKind::InvalidArgument, "probe: ray needs a finite origin and non-zero direction");
  }
  direction_ = direction * (1.0 / len);
}

ProbeOutcome probe(const GroundTruthShape& shape, const ProbeRay& ray, double max_dist) {
  if (!(max_dist > 0.0)) throw Error(ErrorKind::InvalidArgument, "probe: max distance must be positive");
  double t = 0.0;
  double d = sdf_eval(shape, ray.origin());
  // A probe that starts buried cannot touch anything from outside.
  if (d <= -kContactTolerance) return {std::nullopt, 0.0};
  double outside_t = 0.0;
  while (true) {
    if (std::abs(d) < kContactTolerance) return {ray.at(t), t};
    if (d < 0.0) {
      // Overshot by the minimum step; bisect back to the crossing.
      double lo = outside_t;
      double hi = t;
      for (int i = 0; i < 64; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double dm = sdf_eval(shape, ray.at(mid));
        if (std::abs(dm) < kContactTolerance) return {ray.at(mid), mid};
        (dm > 0.0 ? lo : hi) = mid;
      }
      return {ray.at(lo), lo};
    }
    outside_t = t;
    t += std::max(d, kMinTraceStep);
    if (t > max_dist) return {std::nullopt, max_dist};
    d = sdf_eval(shape, ray.at(t));
  }
}

std::string to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::RadialInward:
      return "radial-inward";
    case PolicyKind::TopDownGrid:
      return "top-down-grid";
    case PolicyKind::RandomDirections:
      return "random-directions";
  }
  return "unknown";
}

PolicyKind parse_policy_kind(const std::string& name) {
  if (name == "radial-inward") return PolicyKind::RadialInward;
  if (name == "top-down-grid") return PolicyKind::TopDownGrid;
  if (name == "random-directions") return PolicyKind::RandomDirections;
  throw Error(ErrorKind::InvalidArgument, "unknown exploration policy '" + name + "'");
}

namespace {

Point3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  while (true) {
    const Point3 v{gauss(rng), gauss(rng), gauss(rng)};
    const double n = norm(v);
    if (n > 1e-12) return v * (1.0 / n);
  }
}

std::vector<ProbeRay> plan_rays(const ExplorationPolicy& policy, std::mt19937_64& rng) {
  const Point3 c = policy.region.center;
  const double r = policy.region.radius;
  std::vector<ProbeRay> rays;
  rays.reserve(static_cast<std::size_t>(policy.probe_count));
  switch (policy.kind) {
    case PolicyKind::RadialInward:
      // From the upper half of the region sphere toward its center.
      for (int i = 0; i < policy.probe_count; ++i) {
        Point3 u = random_unit(rng);
        u.z = std::abs(u.z);
        rays.emplace_back(c + u * r, u * -1.0);
      }
      break;
    case PolicyKind::TopDownGrid: {
      const int side = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(policy.probe_count))));
      for (int i = 0; i < policy.probe_count; ++i) {
        const int row = i / side;
        const int col = i % side;
        const double fx = side > 1 ? static_cast<double>(col) / (side - 1) : 0.5;
        const double fy = side > 1 ? static_cast<double>(row) / (side - 1) : 0.5;
        const Point3 origin{c.x - r + 2.0 * r * fx, c.y - r + 2.0 * r * fy, c.z + r};
        rays.emplace_back(origin, Point3{0.0, 0.0, -1.0});
      }
      break;
    }
    case PolicyKind::RandomDirections: {
      std::uniform_real_distribution<double> uni(0.0, 1.0);
      for (int i = 0; i < policy.probe_count; ++i) {
        const Point3 origin = c + random_unit(rng) * r;
        const Point3 aim = c + random_unit(rng) * (0.5 * r * std::cbrt(uni(rng)));
        rays.emplace_back(origin, aim - origin);
      }
      break;
    }
  }
  return rays;
}

}  // namespace

std::vector<ContactPoint> explore(const ExplorationPolicy& policy, const GroundTruthShape& shape,
                                  const WorkspaceFixture& fixture) {
  if (policy.probe_count < 1) throw Error(ErrorKind::InvalidArgument, "explore: probe count must be >= 1");
  if (!(policy.noise_sigma >= 0.0)) throw Error(ErrorKind::InvalidArgument, "explore: noise sigma must be >= 0");
  if (!(policy.region.radius > 0.0)) throw Error(ErrorKind::InvalidArgument, "explore: region radius must be > 0");
  if (policy.probe_interval_ms < 1) throw Error(ErrorKind::InvalidArgument, "explore: probe interval must be >= 1 ms");

  std::mt19937_64 rng(policy.seed);
  const std::vector<ProbeRay> rays = plan_rays(policy, rng);
  // Noise draws use their own stream so the ray plan does not depend on sigma.
  std::mt19937_64 noise_rng(policy.seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> noise(0.0, 1.0);

  std::vector<ContactPoint> out;
  const double reach = 2.0 * policy.region.radius;
  for (std::size_t i = 0; i < rays.size(); ++i) {
    const ProbeOutcome hit = probe(shape, rays[i], reach);
    if (!hit.hit()) continue;
    Point3 p = *hit.contact;
    if (policy.noise_sigma > 0.0) {
      p = p + Point3{noise(noise_rng), noise(noise_rng), noise(noise_rng)} * policy.noise_sigma;
    }
    ContactPoint c;
    c.position = fixture.clamp(p);
    c.timestamp_ms = policy.start_ms + static_cast<std::int64_t>(i + 1) * policy.probe_interval_ms;
    c.sensor_id = policy.sensor_count > 0 ? static_cast<int>(i % static_cast<std::size_t>(policy.sensor_count)) : 0;
    out.push_back(c);
  }
  return out;
}

std::string to_string(TrialPhase phase) {
  switch (phase) {
    case TrialPhase::Searching:
      return "searching";
    case TrialPhase::Reconstructing:
      return "reconstructing";
    case TrialPhase::Placing:
      return "placing";
    case TrialPhase::Done:
      return "done";
  }
  return "unknown";
}

std::string to_string(TrialOutcome outcome) {
  switch (outcome) {
    case TrialOutcome::Pending:
      return "pending";
    case TrialOutcome::Success:
      return "success";
    case TrialOutcome::Timeout:
      return "timeout";
    case TrialOutcome::WrongConfiguration:
      return "wrong-configuration";
  }
  return "unknown";
}

TrialTimeline::TrialTimeline() { history_.push_back({TrialPhase::Searching, 0.0}); }

void TrialTimeline::enter(TrialPhase p) {
  phase_ = p;
  history_.push_back({p, clock_s_});
}

namespace {
// Rounding left over from summing many ticks does not keep a window open.
constexpr double kWindowSlackS = 1e-9;
}  // namespace

void TrialTimeline::apply(const TrialEvent& e) {
  if (phase_ == TrialPhase::Done) throw Error(ErrorKind::Protocol, "timeline: trial already finished");

  if (std::holds_alternative<event::FirstContact>(e)) {
    if (phase_ != TrialPhase::Searching) {
      throw Error(ErrorKind::Protocol, "timeline: first-contact during " + to_string(phase_));
    }
    green_remaining_s_ = kGreenDurationS;
    enter(TrialPhase::Reconstructing);
    return;
  }

  if (const auto* placed = std::get_if<event::Placed>(&e)) {
    if (phase_ != TrialPhase::Placing) throw Error(ErrorKind::Protocol, "timeline: placed during " + to_string(phase_));
    outcome_ = placed->configuration_ok ? TrialOutcome::Success : TrialOutcome::WrongConfiguration;
    enter(TrialPhase::Done);
    return;
  }

  double dt = std::get<event::Tick>(e).seconds;
  if (!(dt >= 0.0) || !std::isfinite(dt)) throw Error(ErrorKind::Protocol, "timeline: tick must be finite and >= 0");

  if (phase_ == TrialPhase::Searching) {
    clock_s_ += dt;
    return;
  }
  if (phase_ == TrialPhase::Reconstructing) {
    const double used = std::min(dt, green_remaining_s_);
    clock_s_ += used;
    green_remaining_s_ -= used;
    dt -= used;
    if (green_remaining_s_ > kWindowSlackS) return;
    green_remaining_s_ = 0.0;
    blue_remaining_s_ = kBlueDurationS;
    enter(TrialPhase::Placing);
  }
  // Placing; leftover time from the green window carries over.
  const double used = std::min(dt, blue_remaining_s_);
  clock_s_ += used;
  blue_remaining_s_ -= used;
  if (blue_remaining_s_ <= kWindowSlackS) {
    blue_remaining_s_ = 0.0;
    outcome_ = TrialOutcome::Timeout;
    enter(TrialPhase::Done);
  }
}

std::optional<double> TrialTimeline::entered(TrialPhase p) const {
  for (const auto& h : history_) {
    if (h.phase == p) return h.at_s;
  }
  return std::nullopt;
}

std::optional<double> TrialTimeline::completion_s() const {
  const auto start = entered(TrialPhase::Reconstructing);
  const auto end = entered(TrialPhase::Done);
  if (!start || !end) return std::nullopt;
  return *end - *start;
}

std::optional<double> TrialTimeline::placement_s() const {
  const auto start = entered(TrialPhase::Placing);
  const auto end = entered(TrialPhase::Done);
  if (!start || !end) return std::nullopt;
  return *end - *start;
}

TrialTimeline advance_timeline(TrialTimeline timeline, const TrialEvent& e) {
  timeline.apply(e);
  return timeline;
}

}  // namespace tactile
