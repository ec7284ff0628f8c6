#include "tactile_recon/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <random>

#include "tactile_recon/error.hpp"

namespace tactile {

PlacementError placement_error(const RigidPose2D& placed, const RigidPose2D& target) {
  PlacementError e;
  e.d_cm = 100.0 * std::hypot(placed.x() - target.x(), placed.y() - target.y());
  // A rectangle turned by 180 degrees occupies the same footprint.
  const double folded = std::abs(std::remainder(placed.yaw() - target.yaw(), std::numbers::pi));
  e.alpha_deg = folded * 180.0 / std::numbers::pi;
  return e;
}

NearestNeighbors::NearestNeighbors(const std::vector<Point3>& points, double cell) : points_(points), cell_(cell) {
  if (points.empty()) throw Error(ErrorKind::InvalidArgument, "nearest: empty point cloud");
  Point3 lo = points.front();
  Point3 hi = points.front();
  for (const auto& p : points) {
    lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
    hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
  }
  origin_ = lo;
  const Point3 ext = hi - lo;
  // Keep the bucket count bounded for sparse, wide clouds.
  const double widest = std::max({ext.x, ext.y, ext.z});
  if (!(cell_ > 0.0)) cell_ = 1.0;
  cell_ = std::max(cell_, widest / 128.0);
  if (cell_ <= 0.0) cell_ = 1.0;
  dims_ = {static_cast<std::int64_t>(ext.x / cell_) + 1, static_cast<std::int64_t>(ext.y / cell_) + 1,
           static_cast<std::int64_t>(ext.z / cell_) + 1};

  const auto buckets = static_cast<std::size_t>(dims_[0] * dims_[1] * dims_[2]);
  offsets_.assign(buckets + 1, 0);
  std::vector<std::int64_t> keys(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto c = cell_of(points[i]);
    keys[i] = key(c[0], c[1], c[2]);
    ++offsets_[static_cast<std::size_t>(keys[i]) + 1];
  }
  std::partial_sum(offsets_.begin(), offsets_.end(), offsets_.begin());
  order_.resize(points.size());
  std::vector<std::uint32_t> fill(offsets_.begin(), offsets_.end() - 1);
  for (std::size_t i = 0; i < points.size(); ++i) {
    order_[fill[static_cast<std::size_t>(keys[i])]++] = static_cast<std::uint32_t>(i);
  }
}

std::int64_t NearestNeighbors::key(std::int64_t i, std::int64_t j, std::int64_t k) const {
  return i + dims_[0] * (j + dims_[1] * k);
}

std::array<std::int64_t, 3> NearestNeighbors::cell_of(const Point3& p) const {
  auto axis = [&](double v, double o, std::int64_t dim) {
    const auto c = static_cast<std::int64_t>(std::floor((v - o) / cell_));
    return std::clamp<std::int64_t>(c, 0, dim - 1);
  };
  return {axis(p.x, origin_.x, dims_[0]), axis(p.y, origin_.y, dims_[1]), axis(p.z, origin_.z, dims_[2])};
}

std::pair<std::size_t, double> NearestNeighbors::nearest(const Point3& q) const {
  const auto c = cell_of(q);
  // Distance from q to the (clamped) home cell, so rings stay valid for outside queries.
  const Point3 cell_lo{origin_.x + c[0] * cell_, origin_.y + c[1] * cell_, origin_.z + c[2] * cell_};
  const double gap = norm(Point3{std::max({cell_lo.x - q.x, 0.0, q.x - (cell_lo.x + cell_)}),
                                 std::max({cell_lo.y - q.y, 0.0, q.y - (cell_lo.y + cell_)}),
                                 std::max({cell_lo.z - q.z, 0.0, q.z - (cell_lo.z + cell_)})});
  const std::int64_t max_ring = std::max({dims_[0], dims_[1], dims_[2]});
  std::size_t best = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (std::int64_t r = 0; r <= max_ring; ++r) {
    for (std::int64_t k = std::max<std::int64_t>(0, c[2] - r); k <= std::min(dims_[2] - 1, c[2] + r); ++k) {
      for (std::int64_t j = std::max<std::int64_t>(0, c[1] - r); j <= std::min(dims_[1] - 1, c[1] + r); ++j) {
        for (std::int64_t i = std::max<std::int64_t>(0, c[0] - r); i <= std::min(dims_[0] - 1, c[0] + r); ++i) {
          const std::int64_t ring = std::max({std::abs(i - c[0]), std::abs(j - c[1]), std::abs(k - c[2])});
          if (ring != r) continue;
          const auto b = static_cast<std::size_t>(key(i, j, k));
          for (std::uint32_t s = offsets_[b]; s < offsets_[b + 1]; ++s) {
            const Point3 d = points_[order_[s]] - q;
            const double d2 = dot(d, d);
            if (d2 < best_d2 || (d2 == best_d2 && order_[s] < best)) {
              best_d2 = d2;
              best = order_[s];
            }
          }
        }
      }
    }
    // Anything in ring r+1 is at least r cells away along one axis.
    const double bound = std::max(gap, static_cast<double>(r) * cell_);
    if (best_d2 <= bound * bound) break;
  }
  return {best, std::sqrt(best_d2)};
}

namespace {

double mean_nearest(const std::vector<Point3>& from, const NearestNeighbors& to) {
  double acc = 0.0;
  for (const auto& p : from) acc += to.nearest(p).second;
  return acc / static_cast<double>(from.size());
}

double suggested_cell(const std::vector<Point3>& pts) {
  Point3 lo = pts.front();
  Point3 hi = pts.front();
  for (const auto& p : pts) {
    lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
    hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
  }
  const Point3 e = hi - lo;
  const double volume = std::max(e.x, 1e-6) * std::max(e.y, 1e-6) * std::max(e.z, 1e-6);
  return std::cbrt(volume / static_cast<double>(pts.size())) * 2.0;
}

}  // namespace

double chamfer_distance(const std::vector<Point3>& a, const std::vector<Point3>& b) {
  if (a.empty() || b.empty()) throw Error(ErrorKind::InvalidArgument, "chamfer: empty point set");
  const NearestNeighbors na(a, suggested_cell(a));
  const NearestNeighbors nb(b, suggested_cell(b));
  return 0.5 * (mean_nearest(a, nb) + mean_nearest(b, na));
}

ReconReport recon_report(const ColoredMesh& mesh, const GroundTruthShape& truth, const ContactDataset& contacts,
                         const ReconOptions& options, const GpModel* model) {
  if (mesh.empty() || mesh.vertices.empty()) {
    throw Error(ErrorKind::EmptyReconstruction, "report: mesh has no triangles");
  }
  if (options.surface_samples == 0) throw Error(ErrorKind::InvalidArgument, "report: need surface samples");

  ReconReport rep;
  rep.vertex_count = mesh.vertices.size();
  rep.triangle_count = mesh.triangles.size();
  double acc = 0.0;
  for (const auto& v : mesh.vertices) {
    const double d = std::abs(sdf_eval(truth, v));
    acc += d;
    rep.max_abs_sdf = std::max(rep.max_abs_sdf, d);
  }
  rep.mean_abs_sdf = acc / static_cast<double>(mesh.vertices.size());

  std::mt19937_64 rng(options.seed);
  const std::vector<SurfacePoint> samples = truth.sample_surface(options.surface_samples, rng);
  std::vector<Point3> truth_pts;
  truth_pts.reserve(samples.size());
  for (const auto& s : samples) truth_pts.push_back(s.position);

  const NearestNeighbors mesh_nn(mesh.vertices, suggested_cell(mesh.vertices));
  const NearestNeighbors truth_nn(truth_pts, suggested_cell(truth_pts));
  std::vector<std::size_t> nearest_vertex(truth_pts.size());
  double truth_to_mesh = 0.0;
  std::size_t covered = 0;
  for (std::size_t i = 0; i < truth_pts.size(); ++i) {
    const auto [idx, d] = mesh_nn.nearest(truth_pts[i]);
    nearest_vertex[i] = idx;
    truth_to_mesh += d;
    if (d <= options.coverage_radius) ++covered;
  }
  rep.chamfer = 0.5 * (truth_to_mesh / static_cast<double>(truth_pts.size()) + mean_nearest(mesh.vertices, truth_nn));
  rep.coverage = static_cast<double>(covered) / static_cast<double>(truth_pts.size());

  std::vector<bool> probed(truth_pts.size(), false);
  if (!contacts.empty()) {
    std::vector<Point3> cpts;
    for (const auto& c : contacts.points()) cpts.push_back(c.position);
    const NearestNeighbors contact_nn(cpts, options.probed_radius);
    for (std::size_t i = 0; i < truth_pts.size(); ++i) {
      probed[i] = contact_nn.nearest(truth_pts[i]).second <= options.probed_radius;
    }
  }

  std::vector<double> variance(truth_pts.size());
  if (model != nullptr) {
    const auto post = model->posterior(truth_pts);
    for (std::size_t i = 0; i < post.size(); ++i) variance[i] = post[i].variance;
  } else {
    for (std::size_t i = 0; i < truth_pts.size(); ++i) variance[i] = mesh.variance[nearest_vertex[i]];
  }

  std::size_t n_probed = 0;
  std::size_t covered_probed = 0;
  double var_probed = 0.0;
  double var_unprobed = 0.0;
  for (std::size_t i = 0; i < truth_pts.size(); ++i) {
    if (probed[i]) {
      ++n_probed;
      var_probed += variance[i];
      if (mesh_nn.nearest(truth_pts[i]).second <= options.coverage_radius) ++covered_probed;
    } else {
      var_unprobed += variance[i];
    }
  }
  const std::size_t n_unprobed = truth_pts.size() - n_probed;
  rep.probed_fraction = static_cast<double>(n_probed) / static_cast<double>(truth_pts.size());
  rep.probed_coverage = n_probed ? static_cast<double>(covered_probed) / static_cast<double>(n_probed) : 0.0;
  rep.mean_var_probed = n_probed ? var_probed / static_cast<double>(n_probed) : 0.0;
  rep.mean_var_unprobed = n_unprobed ? var_unprobed / static_cast<double>(n_unprobed) : 0.0;
  return rep;
}

MeanStd mean_std(const std::vector<double>& values) {
  if (values.empty()) throw Error(ErrorKind::InvalidArgument, "stats: no values");
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() == 1) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (n - 1.0))};
}

std::string SessionSummary::failure_label() const { return std::to_string(failures) + "/" + std::to_string(trials); }

SessionSummary summarize(const std::vector<TrialResult>& trials) {
  if (trials.empty()) throw Error(ErrorKind::InvalidArgument, "summarize: no trials");
  SessionSummary s;
  s.trials = trials.size();
  std::vector<double> d;
  std::vector<double> alpha;
  std::vector<double> time;
  for (const auto& t : trials) {
    if (!t.error) {
      ++s.failures;
      continue;
    }
    d.push_back(t.error->d_cm);
    alpha.push_back(t.error->alpha_deg);
    time.push_back(t.completion_s);
  }
  if (!d.empty()) {
    s.position_cm = mean_std(d);
    s.orientation_deg = mean_std(alpha);
    s.completion_s = mean_std(time);
  }
  return s;
}

std::vector<GroupSummary> summarize_by_group(const std::vector<TrialResult>& trials) {
  std::map<std::string, std::map<int, std::vector<TrialResult>>> groups;
  for (const auto& t : trials) groups[t.object][t.day].push_back(t);
  std::vector<GroupSummary> out;
  for (const auto& [object, days] : groups) {
    std::vector<TrialResult> all;
    for (const auto& [day, list] : days) {
      out.push_back({object, day, summarize(list)});
      all.insert(all.end(), list.begin(), list.end());
    }
    out.push_back({object, 0, summarize(all)});
  }
  return out;
}

std::string format_table(const std::vector<GroupSummary>& groups) {
  std::string out = "object  day      position[cm]     orientation[deg]  time[s]           failures\n";
  char line[256];
  auto cell = [](const std::optional<MeanStd>& m) {
    char buf[64];
    if (!m) return std::string("-");
    std::snprintf(buf, sizeof buf, "%.2f +/- %.2f", m->mean, m->std);
    return std::string(buf);
  };
  for (const auto& g : groups) {
    const std::string day = g.day == 0 ? "overall" : std::to_string(g.day);
    std::snprintf(line, sizeof line, "%-7s %-8s %-16s %-17s %-17s %s\n", g.object.c_str(), day.c_str(),
                  cell(g.summary.position_cm).c_str(), cell(g.summary.orientation_deg).c_str(),
                  cell(g.summary.completion_s).c_str(), g.summary.failure_label().c_str());
    out += line;
  }
  return out;
}

}  // namespace tactile
