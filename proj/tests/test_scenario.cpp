#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "tactile_recon/error.hpp"
#include "tactile_recon/io.hpp"
#include "tactile_recon/scenario.hpp"

using namespace tactile;
namespace fs = std::filesystem;

namespace {

const fs::path kData = fs::path(__FILE__).parent_path() / "data";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "tactile_recon_test_scenario" / name;
  fs::remove_all(dir);
  return dir;
}

/// Parses `text` and returns the Config error message, or "" if it parsed.
std::string config_error(const std::string& text) {
  try {
    parse_scenario(text);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
    return e.what();
  }
  return "";
}

const char* kMinimal = R"({"object": {"kind": "O2"}, "exploration": {"probes": 10, "seed": 3}})";

}  // namespace

TEST_CASE("minimal config gets documented defaults") {
  const auto c = parse_scenario(kMinimal);
  CHECK(c.object.kind == "O2");
  CHECK(c.policy == PolicyKind::RadialInward);
  CHECK(c.grid_cells == std::array<int, 3>{48, 48, 48});
  CHECK(c.snapshot_every == 5);
  CHECK(c.noise_sigma == 5e-4);
  CHECK(c.dedup_radius == 1e-3);
  CHECK(c.target.y() == doctest::Approx(0.22));
  // Kernel scale and noise follow the fixture diagonal.
  const auto p = c.gp_params();
  CHECK(p.kernel.scale == doctest::Approx(std::sqrt(0.6 * 0.6 * 2 + 0.4 * 0.4)));
  CHECK(p.noise_var == doctest::Approx(1e-6 * std::pow(p.kernel.scale, 3)));
  // The default prior sits on the table and encloses the object.
  CHECK(c.prior.center.z == 0.0);
  std::mt19937_64 rng(1);
  for (const auto& s : c.object.build().sample_surface(500, rng)) REQUIRE(c.prior(s.position) < 0.0);
}

TEST_CASE("config errors name the offending key") {
  CHECK(config_error(R"({"object": {"kind": "O1"}, "exploration": {"probes": 0, "seed": 1}})").find("exploration.probes") == 0);
  CHECK(config_error(R"({"object": {"kind": "O1"}, "exploration": {"probes": 3}})").find("exploration.seed") == 0);
  CHECK(config_error(R"({"object": {"kind": "O4"}, "exploration": {"probes": 3, "seed": 1}})").find("object.kind") == 0);
  CHECK(config_error(R"({"object": {"kind": "O1"}, "exploration": {"probes": 3, "seed": 1, "speed": 2}})")
            .find("exploration.speed: unknown key") == 0);
  CHECK(config_error(R"({"object": {"kind": "sphere", "radius_cm": -1}, "exploration": {"probes": 3, "seed": 1}})")
            .find("object.radius_cm") == 0);
  CHECK(config_error(R"({"object": {"kind": "O1"}, "exploration": {"probes": 3, "seed": 1}, "grid": {"resolution": 1}})")
            .find("grid.resolution") == 0);
  CHECK(config_error(R"({"object": {"kind": "O1"}, "exploration": {"probes": 3, "seed": 1},
                         "fixture": {"min_m": [0, 0, 0], "max_m": [1, 1, 0]}})")
            .find("fixture.min_m") == 0);
  CHECK(config_error(R"({"object": {"kind": "O1"}, "exploration": {"probes": 3, "seed": 1}, "gp": {"kernel_scale_m": 0.2}})")
            .find("gp.kernel_scale_m") == 0);
  CHECK(config_error(R"({"object": {"kind": "O1"}, "exploration": {"probes": 3, "seed": -4}})").find("exploration.seed") == 0);
  CHECK(config_error("{not json").find("config: not valid JSON") == 0);
  CHECK(config_error(R"({"object": {"kind": "O1"}, "exploration": {"probes": 3, "seed": 1}, "extra": 1})").find("extra") == 0);
  CHECK_THROWS_AS(load_scenario(kData / "missing.json"), Error);
}

TEST_CASE("example configs parse") {
  const auto root = fs::path(__FILE__).parent_path().parent_path() / "configs";
  for (const char* name : {"sphere.json", "o1.json", "o2.json", "o3.json"}) {
    CAPTURE(name);
    CHECK_NOTHROW(load_scenario(root / name));
  }
}

TEST_CASE("reconstruction window keeps contacts up to 20 s after the first") {
  std::vector<ContactPoint> c;
  for (int i = 0; i < 10; ++i) c.push_back({{0, 0, 0}, 5000 + 5000 * i, 0});
  const auto kept = clip_to_reconstruction_window(c);
  CHECK(kept.size() == 5);
  CHECK(kept.back().timestamp_ms == 25000);
  CHECK(clip_to_reconstruction_window({}).empty());
}

TEST_CASE("a run writes every manifest artifact") {
  const auto dir = scratch("run");
  auto cfg = load_scenario(kData / "small_sphere.json");
  const auto res = run_scenario(cfg, RunOptions{dir, std::nullopt, true});
  CHECK(res.contacts_logged == 40);
  CHECK_FALSE(res.final_mesh.empty());
  CHECK(res.timeline.outcome() == TrialOutcome::Success);
  REQUIRE(res.placement);
  CHECK(res.placement->d_cm == doctest::Approx(std::hypot(0.5, 1.0)));

  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK_FALSE(manifest.contains("created_at"));
  CHECK(manifest["seed"] == 5);
  std::set<std::string> listed;
  for (const auto& a : manifest["artifacts"]) {
    const fs::path p = dir / a["path"].get<std::string>();
    REQUIRE(fs::exists(p));
    CHECK(a["bytes"].get<std::uintmax_t>() == fs::file_size(p));
    CHECK(a["sha256"].get<std::string>() == sha256_file(p));
    listed.insert(a["path"].get<std::string>());
  }
  for (const char* name : {"contacts.csv", "final_mesh.ply", "updates.ndjson", "report.json", "timeline.json"}) {
    CHECK(listed.count(name) == 1);
  }

  // One snapshot and one update per 10 contacts, then the terminal record.
  std::ifstream stream(dir / "updates.ndjson");
  const auto recs = parse_update_stream(stream);
  const std::size_t updates = res.contacts_logged / 10;
  REQUIRE(recs.size() == updates + 1);
  for (std::size_t i = 0; i + 1 < recs.size(); ++i) {
    CHECK(recs[i].update.sequence == i);
    CHECK_FALSE(recs[i].update.compute_ms.has_value());
    REQUIRE(recs[i].update.mesh_ref);
    CHECK(listed.count(*recs[i].update.mesh_ref) == 1);
    if (i > 0) CHECK(recs[i].update.contacts >= recs[i - 1].update.contacts);
  }
  CHECK(recs.back().terminal);
}

TEST_CASE("non-deterministic runs record wall-clock fields") {
  const auto dir = scratch("wallclock");
  run_scenario(load_scenario(kData / "small_sphere.json"), RunOptions{dir, std::nullopt, false});
  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest.contains("created_at"));
  std::ifstream stream(dir / "updates.ndjson");
  CHECK(parse_update_stream(stream).front().update.compute_ms.has_value());
}

TEST_CASE("seed override changes the contacts") {
  const auto cfg = load_scenario(kData / "small_sphere.json");
  const auto a = scratch("seed_a");
  const auto b = scratch("seed_b");
  run_scenario(cfg, RunOptions{a, std::nullopt, true});
  run_scenario(cfg, RunOptions{b, std::uint64_t{6}, true});
  CHECK(slurp(a / "contacts.csv") != slurp(b / "contacts.csv"));
  CHECK(nlohmann::json::parse(slurp(b / "manifest.json"))["seed"] == 6);
}

TEST_CASE("replay reproduces the run byte for byte") {
  const auto cfg = load_scenario(kData / "small_sphere.json");
  const auto run_dir = scratch("replay_src");
  run_scenario(cfg, RunOptions{run_dir, std::nullopt, true});
  const auto contacts = read_contact_log(run_dir / "contacts.csv");
  const auto replay_dir = scratch("replay_dst");
  replay_scenario(contacts, cfg, RunOptions{replay_dir, std::nullopt, true});
  for (const char* name : {"contacts.csv", "final_mesh.ply", "updates.ndjson", "report.json", "timeline.json", "manifest.json"}) {
    CAPTURE(name);
    CHECK(slurp(run_dir / name) == slurp(replay_dir / name));
  }
}

TEST_CASE("no contacts is a pipeline failure") {
  const auto dir = scratch("empty");
  try {
    run_scenario(load_scenario(kData / "no_contacts.json"), RunOptions{dir, std::nullopt, true});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::EmptyReconstruction);
  }
}

TEST_CASE("late placement times out") {
  auto cfg = load_scenario(kData / "small_sphere.json");
  cfg.placement->after_s = 150.0;
  const auto res = run_scenario(cfg, RunOptions{scratch("timeout"), std::nullopt, true});
  CHECK(res.timeline.outcome() == TrialOutcome::Timeout);
  CHECK_FALSE(res.placement.has_value());
}
