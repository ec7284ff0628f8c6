#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "tactile_recon/error.hpp"
#include "tactile_recon/tactile_sim.hpp"
#include "test_support.hpp"

using namespace tactile;

namespace {

const GroundTruthShape kSphere(Primitive::sphere(0.06, {0.0, 0.0, 0.1}));

ExplorationPolicy radial(int n, double sigma, std::uint64_t seed = 3) {
  ExplorationPolicy p;
  p.kind = PolicyKind::RadialInward;
  p.probe_count = n;
  p.noise_sigma = sigma;
  p.seed = seed;
  p.region = {{0.0, 0.0, 0.1}, 0.09};
  return p;
}

}  // namespace

TEST_CASE("fixture clamp") {
  const auto f = WorkspaceFixture::default_box();
  CHECK(fixture_clamp(f, {0.1, -0.2, 0.3}) == Point3{0.1, -0.2, 0.3});
  CHECK(fixture_clamp(f, {0.4, -0.2, 0.3}) == Point3{0.3, -0.2, 0.3});
  std::mt19937_64 rng(11);
  for (int i = 0; i < 10000; ++i) {
    const Point3 p = testing::uniform_point(rng, {-1, -1, -1}, {1, 1, 1});
    const Point3 c = fixture_clamp(f, p);
    REQUIRE(f.region().contains(c));
    REQUIRE(fixture_clamp(f, c) == c);
  }
}

TEST_CASE("probe ray is normalized") {
  const ProbeRay r({0, 0, 0}, {3, 4, 12});
  CHECK(std::abs(norm(r.direction()) - 1.0) < 1e-12);
  CHECK_THROWS_AS(ProbeRay({0, 0, 0}, {0, 0, 0}), Error);
  CHECK_THROWS_AS(ProbeRay({0, 0, 0}, {NAN, 0, 1}), Error);
}

TEST_CASE("probe hits a sphere at the analytic distance") {
  const GroundTruthShape s(Primitive::sphere(0.06, {0, 0, 0}));
  const auto hit = probe(s, ProbeRay({0.2, 0, 0}, {-1, 0, 0}), 1.0);
  REQUIRE(hit.hit());
  CHECK(std::abs(distance(*hit.contact, {0.2, 0, 0}) - 0.14) <= 5e-5);
  CHECK(std::abs(sdf_eval(s, *hit.contact)) < kContactTolerance);

  CHECK_FALSE(probe(s, ProbeRay({0.2, 0, 0}, {1, 0, 0}), 1.0).hit());
  CHECK_FALSE(probe(s, ProbeRay({0.2, 0, 0}, {-1, 0, 0}), 0.1).hit());

  // Tangent: either outcome is allowed, but a contact must be within tolerance.
  const auto tangent = probe(s, ProbeRay({0.2, 0.06, 0}, {-1, 0, 0}), 1.0);
  if (tangent.hit()) CHECK(std::abs(sdf_eval(s, *tangent.contact)) < kContactTolerance);
}

TEST_CASE("probe on boxes lands on the surface") {
  const auto o1 = make_o1();
  std::mt19937_64 rng(2);
  int hits = 0;
  for (int i = 0; i < 500; ++i) {
    const Point3 origin = testing::uniform_point(rng, {-0.2, -0.2, 0.15}, {0.2, 0.2, 0.25});
    const Point3 aim = testing::uniform_point(rng, {-0.05, -0.02, 0.0}, {0.05, 0.02, 0.06});
    const auto out = probe(o1, ProbeRay(origin, aim - origin), 1.0);
    REQUIRE(out.hit());
    REQUIRE(std::abs(sdf_eval(o1, *out.contact)) < kContactTolerance);
    ++hits;
  }
  CHECK(hits == 500);
}

TEST_CASE("noise-free radial exploration touches the surface") {
  const auto contacts = explore(radial(100, 0.0), kSphere, WorkspaceFixture::default_box());
  CHECK(contacts.size() == 100);
  for (const auto& c : contacts) REQUIRE(std::abs(sdf_eval(kSphere, c.position)) < 5e-5);
  for (std::size_t i = 1; i < contacts.size(); ++i) REQUIRE(contacts[i].timestamp_ms > contacts[i - 1].timestamp_ms);
  // Radial probes come from above the equator of the region.
  for (const auto& c : contacts) REQUIRE(c.position.z >= 0.1 - 1e-9);
}

TEST_CASE("contact noise has the configured spread") {
  const auto contacts = explore(radial(300, 5e-4), kSphere, WorkspaceFixture::default_box());
  REQUIRE(contacts.size() == 300);
  std::vector<double> d;
  for (const auto& c : contacts) d.push_back(sdf_eval(kSphere, c.position));
  const double mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(d.size());
  double ss = 0.0;
  for (double v : d) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(d.size() - 1));
  CHECK(sd >= 3e-4);
  CHECK(sd <= 7e-4);
}

TEST_CASE("exploration is deterministic per seed") {
  for (auto kind : {PolicyKind::RadialInward, PolicyKind::TopDownGrid, PolicyKind::RandomDirections}) {
    auto p = radial(60, 5e-4, 99);
    p.kind = kind;
    const auto a = explore(p, kSphere, WorkspaceFixture::default_box());
    const auto b = explore(p, kSphere, WorkspaceFixture::default_box());
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      REQUIRE(a[i].position == b[i].position);
      REQUIRE(a[i].timestamp_ms == b[i].timestamp_ms);
      REQUIRE(a[i].sensor_id == b[i].sensor_id);
    }
    p.seed = 100;
    const auto c = explore(p, kSphere, WorkspaceFixture::default_box());
    if (kind != PolicyKind::TopDownGrid) CHECK_FALSE(c.front().position == a.front().position);
  }
}

TEST_CASE("contacts stay inside the fixture") {
  // Object pokes out of a small fixture; clamped contacts stay inside it.
  const WorkspaceFixture small(Aabb({-0.05, -0.05, 0.0}, {0.05, 0.05, 0.13}));
  auto p = radial(200, 2e-3);
  p.kind = PolicyKind::RandomDirections;
  for (const auto& c : explore(p, kSphere, small)) REQUIRE(small.region().contains(c.position));
}

TEST_CASE("top-down grid probes hit the top of a box") {
  ExplorationPolicy p;
  p.kind = PolicyKind::TopDownGrid;
  p.probe_count = 25;
  p.noise_sigma = 0.0;
  p.region = {{0, 0, 0.04}, 0.02};
  const auto contacts = explore(p, make_o2(), WorkspaceFixture::default_box());
  CHECK(contacts.size() == 25);
  for (const auto& c : contacts) CHECK(c.position.z == doctest::Approx(0.055).epsilon(1e-3));
}

TEST_CASE("policy names") {
  for (auto k : {PolicyKind::RadialInward, PolicyKind::TopDownGrid, PolicyKind::RandomDirections}) {
    CHECK(parse_policy_kind(to_string(k)) == k);
  }
  CHECK_THROWS_AS(parse_policy_kind("spiral"), Error);
}

TEST_CASE("timeline phases and timers") {
  TrialTimeline t;
  CHECK(t.phase() == TrialPhase::Searching);
  t.apply(event::Tick{3.0});
  t.apply(event::FirstContact{});
  CHECK(t.phase() == TrialPhase::Reconstructing);
  CHECK(t.green_remaining_s() == 20.0);
  t.apply(event::Tick{19.5});
  CHECK(t.phase() == TrialPhase::Reconstructing);
  t.apply(event::Tick{0.5});
  CHECK(t.phase() == TrialPhase::Placing);
  CHECK(t.blue_remaining_s() == 120.0);
  t.apply(event::Tick{40.0});
  t.apply(event::Placed{true});
  CHECK(t.phase() == TrialPhase::Done);
  CHECK(t.outcome() == TrialOutcome::Success);
  CHECK(*t.completion_s() == doctest::Approx(60.0));
  CHECK(*t.placement_s() == doctest::Approx(40.0));
  CHECK(t.clock_s() == doctest::Approx(63.0));
}

TEST_CASE("blue timer expiry is a failure") {
  TrialTimeline t;
  t.apply(event::FirstContact{});
  t.apply(event::Tick{20.0});
  REQUIRE(t.phase() == TrialPhase::Placing);
  t.apply(event::Tick{120.0});
  CHECK(t.phase() == TrialPhase::Done);
  CHECK(t.outcome() == TrialOutcome::Timeout);
  CHECK(*t.completion_s() == doctest::Approx(140.0));
}

TEST_CASE("ticks carry across phase boundaries") {
  TrialTimeline t;
  t.apply(event::FirstContact{});
  t.apply(event::Tick{30.0});
  CHECK(t.phase() == TrialPhase::Placing);
  CHECK(t.blue_remaining_s() == doctest::Approx(110.0));
  const auto after = advance_timeline(t, event::Tick{500.0});
  CHECK(after.outcome() == TrialOutcome::Timeout);
  CHECK(after.clock_s() == doctest::Approx(140.0));
  // advance_timeline leaves its input alone
  CHECK(t.phase() == TrialPhase::Placing);
}

TEST_CASE("wrong configuration is a failure") {
  TrialTimeline t;
  t.apply(event::FirstContact{});
  t.apply(event::Tick{25.0});
  t.apply(event::Placed{false});
  CHECK(t.outcome() == TrialOutcome::WrongConfiguration);
}

TEST_CASE("illegal events are rejected") {
  TrialTimeline t;
  CHECK_THROWS_AS(t.apply(event::Placed{true}), Error);
  t.apply(event::FirstContact{});
  CHECK_THROWS_AS(t.apply(event::FirstContact{}), Error);
  CHECK_THROWS_AS(t.apply(event::Placed{true}), Error);
  CHECK_THROWS_AS(t.apply(event::Tick{-1.0}), Error);
  t.apply(event::Tick{20.0});
  CHECK_THROWS_AS(t.apply(event::FirstContact{}), Error);
  t.apply(event::Placed{true});
  CHECK_THROWS_AS(t.apply(event::Tick{1.0}), Error);
  try {
    t.apply(event::Tick{1.0});
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Protocol);
  }
}

TEST_CASE("timeline never runs backwards and is bounded") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> dt(0.0, 7.0);
  for (int trial = 0; trial < 200; ++trial) {
    TrialTimeline t;
    const double search = dt(rng) * 3;
    t.apply(event::Tick{search});
    t.apply(event::FirstContact{});
    while (t.phase() != TrialPhase::Done) {
      if (t.phase() == TrialPhase::Placing && dt(rng) < 0.3) {
        t.apply(event::Placed{true});
      } else {
        t.apply(event::Tick{dt(rng)});
      }
    }
    const auto& h = t.history();
    for (std::size_t i = 1; i < h.size(); ++i) {
      REQUIRE(static_cast<int>(h[i].phase) > static_cast<int>(h[i - 1].phase));
      REQUIRE(h[i].at_s >= h[i - 1].at_s);
    }
    REQUIRE(t.clock_s() <= search + 140.0 + 1e-9);
  }
}

TEST_CASE("many small ticks close the windows on time") {
  TrialTimeline t;
  t.apply(event::FirstContact{});
  for (int i = 0; i < 200; ++i) t.apply(event::Tick{0.1});
  CHECK(t.phase() == TrialPhase::Placing);
  for (int i = 0; i < 1200; ++i) t.apply(event::Tick{0.1});
  CHECK(t.phase() == TrialPhase::Done);
  CHECK(t.outcome() == TrialOutcome::Timeout);
}
