#include "tactile_recon/scenario.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <functional>
#include <nlohmann/json.hpp>
#include <numbers>
#include <set>
#include <sstream>

#include "tactile_recon/error.hpp"
#include "tactile_recon/io.hpp"

namespace tactile {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

constexpr double kCm = 0.01;
constexpr double kDeg = std::numbers::pi / 180.0;

[[noreturn]] void config_error(const std::string& path, const std::string& msg) {
  throw Error(ErrorKind::Config, path + ": " + msg);
}

/// Typed access to one JSON object, with key paths in every error.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) config_error(path_.empty() ? "<root>" : path_, "must be an object");
  }

  /// Rejects keys outside `allowed`.
  void only(std::initializer_list<const char*> allowed) const {
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, value] : j_.items()) {
      if (!ok.count(key)) config_error(child(key), "unknown key");
    }
  }

  bool has(const char* key) const { return j_.contains(key) && !j_.at(key).is_null(); }
  std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  Section section(const char* key) const {
    if (!has(key)) config_error(child(key), "required section missing");
    return Section(j_.at(key), child(key));
  }

  double number(const char* key) const {
    if (!has(key)) config_error(child(key), "required key missing");
    const json& v = j_.at(key);
    if (!v.is_number()) config_error(child(key), "must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) config_error(child(key), "must be finite");
    return d;
  }
  double number(const char* key, double fallback) const { return has(key) ? number(key) : fallback; }

  double positive(const char* key) const {
    const double d = number(key);
    if (!(d > 0.0)) config_error(child(key), "must be > 0");
    return d;
  }
  double positive(const char* key, double fallback) const { return has(key) ? positive(key) : fallback; }

  double non_negative(const char* key, double fallback) const {
    const double d = number(key, fallback);
    if (!(d >= 0.0)) config_error(child(key), "must be >= 0");
    return d;
  }

  std::int64_t integer(const char* key, std::int64_t min) const {
    if (!has(key)) config_error(child(key), "required key missing");
    const json& v = j_.at(key);
    if (!v.is_number_integer()) config_error(child(key), "must be an integer");
    const auto i = v.get<std::int64_t>();
    if (i < min) config_error(child(key), "must be >= " + std::to_string(min));
    return i;
  }
  std::int64_t integer(const char* key, std::int64_t min, std::int64_t fallback) const {
    return has(key) ? integer(key, min) : fallback;
  }

  std::uint64_t unsigned_integer(const char* key) const {
    if (!has(key)) config_error(child(key), "required key missing (runs never draw implicit entropy)");
    const json& v = j_.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      config_error(child(key), "must be a non-negative integer");
    }
    return v.get<std::uint64_t>();
  }

  bool boolean(const char* key, bool fallback) const {
    if (!has(key)) return fallback;
    if (!j_.at(key).is_boolean()) config_error(child(key), "must be true or false");
    return j_.at(key).get<bool>();
  }

  std::string string(const char* key) const {
    if (!has(key)) config_error(child(key), "required key missing");
    if (!j_.at(key).is_string()) config_error(child(key), "must be a string");
    return j_.at(key).get<std::string>();
  }

  Point3 vec3(const char* key, double scale = 1.0) const {
    if (!has(key)) config_error(child(key), "required key missing");
    const json& v = j_.at(key);
    if (!v.is_array() || v.size() != 3) config_error(child(key), "must be an array of 3 numbers");
    double out[3];
    for (std::size_t i = 0; i < 3; ++i) {
      if (!v[i].is_number()) config_error(child(key) + "[" + std::to_string(i) + "]", "must be a number");
      out[i] = v[i].get<double>() * scale;
      if (!std::isfinite(out[i])) config_error(child(key) + "[" + std::to_string(i) + "]", "must be finite");
    }
    return {out[0], out[1], out[2]};
  }

  std::array<int, 3> resolution(const char* key, std::array<int, 3> fallback) const {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    auto one = [&](const json& x, const std::string& path) {
      if (!x.is_number_integer() || x.get<std::int64_t>() < 2 || x.get<std::int64_t>() > 1024) {
        config_error(path, "must be an integer in [2, 1024]");
      }
      return static_cast<int>(x.get<std::int64_t>());
    };
    if (v.is_array()) {
      if (v.size() != 3) config_error(child(key), "must be an integer or an array of 3 integers");
      return {one(v[0], child(key) + "[0]"), one(v[1], child(key) + "[1]"), one(v[2], child(key) + "[2]")};
    }
    const int n = one(v, child(key));
    return {n, n, n};
  }

  Aabb box(const char* min_key, const char* max_key) const {
    const Point3 lo = vec3(min_key);
    const Point3 hi = vec3(max_key);
    if (!(lo.x < hi.x && lo.y < hi.y && lo.z < hi.z)) config_error(child(min_key), "must be below " + std::string(max_key) + " on every axis");
    return Aabb(lo, hi);
  }

 private:
  const json& j_;
  std::string path_;
};

ObjectSpec parse_object(const Section& s) {
  ObjectSpec o;
  o.kind = s.string("kind");
  if (o.kind == "O1" || o.kind == "O2" || o.kind == "O3") {
    s.only({"kind"});
  } else if (o.kind == "sphere") {
    s.only({"kind", "radius_cm", "center_cm"});
    o.radius = s.positive("radius_cm") * kCm;
    o.center = s.has("center_cm") ? s.vec3("center_cm", kCm) : Point3{0.0, 0.0, o.radius};
  } else if (o.kind == "box") {
    s.only({"kind", "dims_cm", "center_cm", "yaw_deg"});
    const Point3 d = s.vec3("dims_cm", kCm);
    if (!(d.x > 0 && d.y > 0 && d.z > 0)) config_error(s.child("dims_cm"), "all dimensions must be > 0");
    o.dims = d.vec();
    o.center = s.has("center_cm") ? s.vec3("center_cm", kCm) : Point3{0.0, 0.0, d.z / 2};
    o.yaw = s.number("yaw_deg", 0.0) * kDeg;
  } else if (o.kind == "cylinder") {
    s.only({"kind", "radius_cm", "height_cm", "center_cm"});
    o.dims = {s.positive("radius_cm") * kCm, 0.0, s.positive("height_cm") * kCm};
    o.center = s.has("center_cm") ? s.vec3("center_cm", kCm) : Point3{0.0, 0.0, o.dims.z() / 2};
  } else {
    config_error(s.child("kind"), "must be one of O1, O2, O3, sphere, box, cylinder");
  }
  return o;
}

/// Semi-sphere on the table under the object, large enough to enclose it.
SphericalPrior default_prior(const GroundTruthShape& shape) {
  std::mt19937_64 rng(1);
  const auto samples = shape.sample_surface(4000, rng);
  Point3 lo = samples.front().position;
  Point3 hi = lo;
  for (const auto& s : samples) {
    lo = {std::min(lo.x, s.position.x), std::min(lo.y, s.position.y), std::min(lo.z, s.position.z)};
    hi = {std::max(hi.x, s.position.x), std::max(hi.y, s.position.y), std::max(hi.z, s.position.z)};
  }
  const Point3 c{(lo.x + hi.x) / 2, (lo.y + hi.y) / 2, 0.0};
  double reach = 0.0;
  for (const auto& s : samples) reach = std::max(reach, distance(s.position, c));
  return {c, 1.2 * reach};
}

std::string iso_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

}  // namespace

GroundTruthShape ObjectSpec::build() const {
  if (kind == "O1") return make_o1();
  if (kind == "O2") return make_o2();
  if (kind == "O3") return make_o3();
  if (kind == "sphere") return GroundTruthShape(Primitive::sphere(radius, center));
  if (kind == "box") {
    return GroundTruthShape(
        Primitive::box(dims / 2.0, Pose3::from_axis_angle(center, Eigen::Vector3d::UnitZ(), yaw)));
  }
  if (kind == "cylinder") return GroundTruthShape(Primitive::cylinder(dims.x(), dims.z() / 2, Pose3::translate(center)));
  throw Error(ErrorKind::Config, "object.kind: unknown '" + kind + "'");
}

GpParams ScenarioConfig::gp_params() const {
  GpParams p = kernel_scale ? GpParams::for_scale(*kernel_scale, prior) : GpParams::for_workspace(reach_box(), prior);
  if (noise_var) p.noise_var = *noise_var;
  p.dedup_radius = dedup_radius;
  return p;
}

Aabb ScenarioConfig::reach_box() const {
  const Point3& a = fixture.min();
  const Point3& b = fixture.max();
  const Point3& g = grid_bounds.min();
  const Point3& h = grid_bounds.max();
  return Aabb({std::min(a.x, g.x), std::min(a.y, g.y), std::min(a.z, g.z)},
              {std::max(b.x, h.x), std::max(b.y, h.y), std::max(b.z, h.z)});
}

GridSpec ScenarioConfig::grid() const { return GridSpec(grid_bounds, grid_cells); }

GridSpec ScenarioConfig::snapshot_grid() const { return GridSpec(grid_bounds, {snapshot_cells, snapshot_cells, snapshot_cells}); }

ExplorationPolicy ScenarioConfig::exploration() const {
  ExplorationPolicy p;
  p.kind = policy;
  p.probe_count = probes;
  p.seed = seed;
  p.noise_sigma = noise_sigma;
  p.region = prior;
  p.start_ms = static_cast<std::int64_t>(std::llround(search_time_s * 1000.0));
  p.probe_interval_ms = probe_interval_ms;
  return p;
}

ScenarioConfig parse_scenario(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Config, std::string("config: not valid JSON: ") + e.what());
  }
  const Section top(root, "");
  top.only({"object", "prior", "gp", "exploration", "grid", "snapshots", "fixture", "target", "placement", "report",
            "output_dir"});

  ScenarioConfig c;
  c.object = parse_object(top.section("object"));
  const GroundTruthShape shape = c.object.build();

  if (top.has("fixture")) {
    const Section s = top.section("fixture");
    s.only({"min_m", "max_m"});
    c.fixture = s.box("min_m", "max_m");
  }
  c.grid_bounds = c.fixture;

  if (top.has("prior")) {
    const Section s = top.section("prior");
    s.only({"center_m", "radius_m"});
    c.prior = {s.vec3("center_m"), s.positive("radius_m")};
  } else {
    c.prior = default_prior(shape);
  }

  if (top.has("gp")) {
    const Section s = top.section("gp");
    s.only({"kernel_scale_m", "noise_var", "dedup_radius_m"});
    if (s.has("kernel_scale_m")) c.kernel_scale = s.positive("kernel_scale_m");
    if (s.has("noise_var")) c.noise_var = s.non_negative("noise_var", 0.0);
    c.dedup_radius = s.non_negative("dedup_radius_m", c.dedup_radius);
  }

  {
    const Section s = top.section("exploration");
    s.only({"policy", "probes", "seed", "noise_sigma_m", "probe_interval_ms", "search_time_s"});
    try {
      c.policy = parse_policy_kind(s.has("policy") ? s.string("policy") : "radial-inward");
    } catch (const Error& e) {
      config_error(s.child("policy"), e.what());
    }
    c.probes = static_cast<int>(s.integer("probes", 1));
    c.seed = s.unsigned_integer("seed");
    c.noise_sigma = s.non_negative("noise_sigma_m", c.noise_sigma);
    c.probe_interval_ms = s.integer("probe_interval_ms", 1, c.probe_interval_ms);
    c.search_time_s = s.non_negative("search_time_s", 0.0);
  }

  if (top.has("grid")) {
    const Section s = top.section("grid");
    s.only({"min_m", "max_m", "resolution"});
    if (s.has("min_m") || s.has("max_m")) c.grid_bounds = s.box("min_m", "max_m");
    c.grid_cells = s.resolution("resolution", c.grid_cells);
  }

  if (c.kernel_scale && *c.kernel_scale < c.reach_box().diagonal() * (1.0 - 1e-12)) {
    std::ostringstream msg;
    msg << "must be >= " << c.reach_box().diagonal() << " m (diagonal of the fixture and grid bounds)";
    config_error("gp.kernel_scale_m", msg.str());
  }

  if (top.has("snapshots")) {
    const Section s = top.section("snapshots");
    s.only({"every", "resolution"});
    c.snapshot_every = static_cast<int>(s.integer("every", 1, c.snapshot_every));
    c.snapshot_cells = static_cast<int>(s.integer("resolution", 2, c.snapshot_cells));
  }

  // Target marker four object widths (22 cm) from the object's center.
  c.target = RigidPose2D(0.0, kTargetOffset, 0.0);
  if (top.has("target")) {
    const Section s = top.section("target");
    s.only({"x_cm", "y_cm", "yaw_deg"});
    c.target = RigidPose2D(s.number("x_cm") * kCm, s.number("y_cm") * kCm, s.number("yaw_deg", 0.0) * kDeg);
  }

  if (top.has("placement")) {
    const Section s = top.section("placement");
    s.only({"x_cm", "y_cm", "yaw_deg", "configuration_ok", "after_s"});
    PlacementSpec p;
    p.placed = RigidPose2D(s.number("x_cm") * kCm, s.number("y_cm") * kCm, s.number("yaw_deg", 0.0) * kDeg);
    p.configuration_ok = s.boolean("configuration_ok", true);
    p.after_s = s.non_negative("after_s", 0.0);
    c.placement = p;
  }

  if (top.has("report")) {
    const Section s = top.section("report");
    s.only({"surface_samples", "coverage_radius_m", "probed_radius_m", "seed"});
    c.report.surface_samples = static_cast<std::size_t>(s.integer("surface_samples", 1, 10000));
    c.report.coverage_radius = s.positive("coverage_radius_m", c.report.coverage_radius);
    c.report.probed_radius = s.positive("probed_radius_m", c.report.probed_radius);
    if (s.has("seed")) c.report.seed = s.unsigned_integer("seed");
  }

  if (top.has("output_dir")) c.output_dir = top.string("output_dir");
  return c;
}

ScenarioConfig load_scenario(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Config, "config: cannot read '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

std::vector<ContactPoint> clip_to_reconstruction_window(const std::vector<ContactPoint>& contacts) {
  if (contacts.empty()) return {};
  const std::int64_t end = contacts.front().timestamp_ms + static_cast<std::int64_t>(kGreenDurationS * 1000.0);
  std::vector<ContactPoint> out;
  for (const auto& c : contacts) {
    if (c.timestamp_ms > end) break;
    out.push_back(c);
  }
  return out;
}

std::string report_to_json(const ReconReport& r) {
  ojson j;
  j["mean_abs_sdf_m"] = r.mean_abs_sdf;
  j["max_abs_sdf_m"] = r.max_abs_sdf;
  j["chamfer_m"] = r.chamfer;
  j["coverage"] = r.coverage;
  j["probed_coverage"] = r.probed_coverage;
  j["probed_fraction"] = r.probed_fraction;
  j["mean_variance_probed"] = r.mean_var_probed;
  j["mean_variance_unprobed"] = r.mean_var_unprobed;
  j["vertices"] = r.vertex_count;
  j["triangles"] = r.triangle_count;
  return j.dump(2);
}

namespace {

class ArtifactWriter {
 public:
  ArtifactWriter(fs::path root) : root_(std::move(root)) {
    std::error_code ec;
    fs::create_directories(root_ / artifact::kSnapshotDir, ec);
    if (ec) throw Error(ErrorKind::Io, "cannot create output directory '" + root_.string() + "': " + ec.message());
  }

  fs::path path(const std::string& rel) const { return root_ / rel; }
  void record(const std::string& rel) { written_.push_back(rel); }

  void text(const std::string& rel, const std::string& body) {
    std::ofstream out(path(rel), std::ios::binary | std::ios::trunc);
    out << body;
    out.flush();
    if (!out) throw Error(ErrorKind::Io, "write failed: " + path(rel).string());
    record(rel);
  }

  void manifest(std::uint64_t seed, bool deterministic) {
    ojson j;
    j["seed"] = seed;
    j["deterministic"] = deterministic;
    if (!deterministic) j["created_at"] = iso_now();
    ojson list = ojson::array();
    for (const auto& rel : written_) {
      ojson a;
      a["path"] = rel;
      a["bytes"] = fs::file_size(path(rel));
      a["sha256"] = sha256_file(path(rel));
      list.push_back(a);
    }
    j["artifacts"] = list;
    std::ofstream out(path(artifact::kManifest), std::ios::binary | std::ios::trunc);
    out << j.dump(2) << '\n';
    out.flush();
    if (!out) throw Error(ErrorKind::Io, "write failed: manifest");
  }

 private:
  fs::path root_;
  std::vector<std::string> written_;
};

TrialTimeline simulate_timeline(const std::vector<ContactPoint>& contacts, const std::optional<PlacementSpec>& placement) {
  TrialTimeline tl;
  if (contacts.empty()) return tl;
  tl.apply(event::Tick{static_cast<double>(contacts.front().timestamp_ms) / 1000.0});
  tl.apply(event::FirstContact{});
  tl.apply(event::Tick{kGreenDurationS});
  if (placement) {
    if (placement->after_s >= kBlueDurationS) {
      tl.apply(event::Tick{kBlueDurationS});
    } else {
      tl.apply(event::Tick{placement->after_s});
      tl.apply(event::Placed{placement->configuration_ok});
    }
  }
  return tl;
}

std::string timeline_to_json(const TrialTimeline& tl, const std::optional<PlacementError>& err) {
  ojson j;
  j["green_duration_s"] = kGreenDurationS;
  j["blue_duration_s"] = kBlueDurationS;
  ojson phases = ojson::array();
  for (const auto& h : tl.history()) phases.push_back({{"phase", to_string(h.phase)}, {"at_s", h.at_s}});
  j["phases"] = phases;
  j["final_phase"] = to_string(tl.phase());
  j["outcome"] = to_string(tl.outcome());
  const auto completion = tl.completion_s();
  j["completion_s"] = completion ? ojson(*completion) : ojson(nullptr);
  if (err) {
    j["placement_error"] = {{"d_cm", err->d_cm}, {"alpha_deg", err->alpha_deg}};
  } else {
    j["placement_error"] = nullptr;
  }
  return j.dump(2) + "\n";
}

RunResult reconstruct(const ScenarioConfig& cfg, const std::vector<ContactPoint>& contacts, const RunOptions& opts) {
  using clock = std::chrono::steady_clock;
  RunResult res;
  res.output_dir = opts.output_dir ? *opts.output_dir : cfg.output_dir;
  res.contacts_logged = contacts.size();

  ArtifactWriter out(res.output_dir);
  write_contact_log(contacts, out.path(artifact::kContacts));
  out.record(artifact::kContacts);

  if (contacts.empty()) throw Error(ErrorKind::EmptyReconstruction, "exploration produced no contacts");

  const GroundTruthShape truth = cfg.object.build();
  GpModel model(cfg.gp_params());

  std::ofstream stream_file(out.path(artifact::kUpdates), std::ios::binary | std::ios::trunc);
  if (!stream_file) throw Error(ErrorKind::Io, "cannot open update stream for writing");
  UpdateStreamWriter stream(stream_file);

  const GridSpec snapshot_grid = cfg.snapshot_grid();
  for (std::size_t i = 0; i < contacts.size(); ++i) {
    const auto started = clock::now();
    model.add_contact(contacts[i]);
    if ((i + 1) % static_cast<std::size_t>(cfg.snapshot_every) != 0) continue;

    ColoredMesh snap = marching_cubes(sample_grid(model, snapshot_grid));
    colorize(snap);
    char name[64];
    std::snprintf(name, sizeof name, "%s/mesh_%04llu.ply", artifact::kSnapshotDir,
                  static_cast<unsigned long long>(stream.next_sequence()));
    write_ply(snap, out.path(name));
    out.record(name);

    UpdateMessage m;
    m.sequence = stream.next_sequence();
    m.timestamp_ms = contacts[i].timestamp_ms;
    m.contacts = model.size();
    m.vertices = snap.vertices.size();
    m.triangles = snap.triangles.size();
    m.variance_range = snap.variance_range;
    m.mesh_ref = name;
    if (!opts.deterministic) {
      m.compute_ms = std::chrono::duration<double, std::milli>(clock::now() - started).count();
    }
    stream.emit(m);
  }
  stream.finish();
  stream_file.close();
  out.record(artifact::kUpdates);

  res.contacts_used = model.size();
  res.final_mesh = marching_cubes(sample_grid(model, cfg.grid()));
  colorize(res.final_mesh);
  write_ply(res.final_mesh, out.path(artifact::kFinalMesh));
  out.record(artifact::kFinalMesh);

  res.report = recon_report(res.final_mesh, truth, model.dataset(), cfg.report, &model);
  out.text(artifact::kReport, report_to_json(res.report) + "\n");

  res.timeline = simulate_timeline(contacts, cfg.placement);
  if (cfg.placement && res.timeline.outcome() != TrialOutcome::Timeout) {
    res.placement = placement_error(cfg.placement->placed, cfg.target);
  }
  out.text(artifact::kTimeline, timeline_to_json(res.timeline, res.placement));

  out.manifest(cfg.seed, opts.deterministic);
  return res;
}

}  // namespace

RunResult run_scenario(ScenarioConfig config, const RunOptions& options) {
  if (options.seed) config.seed = *options.seed;
  const GroundTruthShape truth = config.object.build();
  const std::vector<ContactPoint> all = explore(config.exploration(), truth, config.workspace());
  return reconstruct(config, clip_to_reconstruction_window(all), options);
}

RunResult replay_scenario(const std::vector<ContactPoint>& contacts, ScenarioConfig config, const RunOptions& options) {
  if (options.seed) config.seed = *options.seed;
  return reconstruct(config, contacts, options);
}

}  // namespace tactile
