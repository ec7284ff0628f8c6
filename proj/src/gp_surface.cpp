#include "tactile_recon/gp_surface.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <string>
#include <thread>

#include "tactile_recon/error.hpp"

namespace tactile {

namespace {

constexpr std::size_t kQueryChunk = 2048;
// Round-off may push a variance slightly below zero; anything lower is a failure.
constexpr double kVarianceFloor = -1e-9;

}  // namespace

ContactDataset::ContactDataset(double dedup_radius) : dedup_radius_(dedup_radius) {
  if (!(dedup_radius >= 0.0)) throw Error(ErrorKind::InvalidArgument, "dataset: dedup radius must be >= 0");
}

bool ContactDataset::accepts(const Point3& p) const {
  return std::none_of(points_.begin(), points_.end(),
                      [&](const ContactPoint& c) { return distance(c.position, p) < dedup_radius_; });
}

bool ContactDataset::insert(const ContactPoint& c) {
  if (!c.position.finite()) throw Error(ErrorKind::InvalidArgument, "contact: non-finite position");
  if (!points_.empty() && c.timestamp_ms < points_.back().timestamp_ms) {
    throw Error(ErrorKind::InvalidArgument, "contact: timestamp earlier than previous contact");
  }
  if (!accepts(c.position)) return false;
  points_.push_back(c);
  return true;
}

GpParams GpParams::for_scale(double kernel_scale, const SphericalPrior& prior) {
  GpParams p;
  p.kernel.scale = kernel_scale;
  p.prior = prior;
  const double k0 = p.kernel.at_zero();
  p.noise_var = 1e-6 * k0;
  p.jitter_initial = 1e-10 * k0;
  p.jitter_max = 1e-6 * k0;
  return p;
}

GpParams GpParams::for_workspace(const Aabb& workspace, const SphericalPrior& prior) {
  return for_scale(workspace.diagonal(), prior);
}

void GpParams::validate() const {
  if (!(kernel.scale > 0.0) || !std::isfinite(kernel.scale)) {
    throw Error(ErrorKind::InvalidArgument, "gp: kernel scale must be positive");
  }
  if (!(prior.radius > 0.0) || !prior.center.finite()) {
    throw Error(ErrorKind::InvalidArgument, "gp: prior radius must be positive");
  }
  if (!(noise_var >= 0.0)) throw Error(ErrorKind::InvalidArgument, "gp: noise variance must be >= 0");
  if (!(jitter_initial > 0.0) || !(jitter_max >= jitter_initial)) {
    throw Error(ErrorKind::InvalidArgument, "gp: jitter must satisfy 0 < initial <= max");
  }
}

void CholeskyFactor::reserve(std::size_t n) {
  const auto cap = static_cast<std::size_t>(storage_.rows());
  if (n <= cap) return;
  const std::size_t grown = std::max<std::size_t>({n, 2 * cap, 16});
  storage_.conservativeResize(static_cast<Eigen::Index>(grown), static_cast<Eigen::Index>(grown));
}

bool CholeskyFactor::append(const Eigen::VectorXd& cross, double self) {
  const auto n = static_cast<Eigen::Index>(n_);
  Eigen::VectorXd row = cross;
  if (n > 0) lower().solveInPlace(row);
  const double pivot_sq = self - row.squaredNorm();
  if (!(pivot_sq > 0.0) || !std::isfinite(pivot_sq)) return false;
  reserve(n_ + 1);
  storage_.row(n).head(n) = row.transpose();
  storage_(n, n) = std::sqrt(pivot_sq);
  ++n_;
  return true;
}

bool CholeskyFactor::assign(const Eigen::MatrixXd& matrix) {
  Eigen::LLT<Eigen::MatrixXd> llt(matrix);
  if (llt.info() != Eigen::Success) return false;
  reserve(static_cast<std::size_t>(matrix.rows()));
  n_ = static_cast<std::size_t>(matrix.rows());
  storage_.topLeftCorner(matrix.rows(), matrix.rows()) = llt.matrixL();
  return true;
}

void CholeskyFactor::solve_lower_in_place(Eigen::Ref<Eigen::MatrixXd> b) const {
  if (n_ > 0) lower().solveInPlace(b);
}

GpModel::GpModel(GpParams params)
    : params_(params), dataset_(params.dedup_radius), jitter_(params.jitter_initial) {
  params_.validate();
}

AddResult GpModel::add_contact(const ContactPoint& c) {
  if (!c.position.finite()) throw Error(ErrorKind::InvalidArgument, "contact: non-finite position");
  if (!dataset_.accepts(c.position)) return AddResult::Rejected;

  const std::size_t n = dataset_.size();
  Eigen::VectorXd cross(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) cross[static_cast<Eigen::Index>(i)] = params_.kernel(dataset_[i].position, c.position);
  const double self = params_.kernel.at_zero() + params_.noise_var + jitter_;

  // Validates the timestamp before the factor is touched.
  ContactDataset grown = dataset_;
  grown.insert(c);

  if (factor_.append(cross, self)) {
    dataset_ = std::move(grown);
    const auto last = static_cast<Eigen::Index>(n);
    double acc = -params_.prior(c.position);
    for (Eigen::Index j = 0; j < last; ++j) acc -= factor_(last, j) * whitened_[j];
    whitened_.conservativeResize(last + 1);
    whitened_[last] = acc / factor_(last, last);
    return AddResult::Accepted;
  }

  // Pivot breakdown: escalate jitter and refactor everything.
  GpModel backup = *this;
  try {
    dataset_ = std::move(grown);
    refactor_from(jitter_ * 10.0);
  } catch (...) {
    *this = std::move(backup);
    throw;
  }
  return AddResult::Accepted;
}

void GpModel::refactor_from(double start) {
  const std::size_t n = dataset_.size();
  const auto ni = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd gram(ni, ni);
  for (Eigen::Index i = 0; i < ni; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double k = params_.kernel(dataset_[static_cast<std::size_t>(i)].position,
                                      dataset_[static_cast<std::size_t>(j)].position);
      gram(i, j) = k;
      gram(j, i) = k;
    }
  }
  Eigen::VectorXd residual(ni);
  for (Eigen::Index i = 0; i < ni; ++i) residual[i] = -params_.prior(dataset_[static_cast<std::size_t>(i)].position);

  // The tolerance admits the last x10 step despite rounding in the product.
  for (double jitter = start; jitter <= params_.jitter_max * (1.0 + 1e-9); jitter *= 10.0) {
    Eigen::MatrixXd a = gram;
    a.diagonal().array() += params_.noise_var + jitter;
    CholeskyFactor candidate;
    if (!candidate.assign(a)) continue;
    candidate.solve_lower_in_place(residual);
    factor_ = std::move(candidate);
    whitened_ = std::move(residual);
    jitter_ = jitter;
    return;
  }
  throw Error(ErrorKind::Numerical,
              "gp: factorization broke down at maximum jitter with " + std::to_string(n) + " contacts");
}

void GpModel::batch_refit() {
  GpModel backup = *this;
  try {
    refactor_from(params_.jitter_initial);
  } catch (...) {
    *this = std::move(backup);
    throw;
  }
}

GpModel batch_refit(const GpModel& model) {
  GpModel copy = model;
  copy.batch_refit();
  return copy;
}

void GpModel::evaluate_chunk(std::span<const Point3> queries, double* mean, double* var) const {
  const auto n = static_cast<Eigen::Index>(dataset_.size());
  const auto q = static_cast<Eigen::Index>(queries.size());
  const double k0 = params_.kernel.at_zero();
  if (n == 0) {
    for (Eigen::Index j = 0; j < q; ++j) {
      if (mean) mean[j] = params_.prior(queries[static_cast<std::size_t>(j)]);
      if (var) var[j] = k0;
    }
    return;
  }
  Eigen::MatrixXd cross(n, q);
  for (Eigen::Index j = 0; j < q; ++j) {
    const Point3& p = queries[static_cast<std::size_t>(j)];
    for (Eigen::Index i = 0; i < n; ++i) cross(i, j) = params_.kernel(dataset_[static_cast<std::size_t>(i)].position, p);
  }
  factor_.solve_lower_in_place(cross);
  const auto w = whitened_.head(n);
  for (Eigen::Index j = 0; j < q; ++j) {
    if (mean) mean[j] = params_.prior(queries[static_cast<std::size_t>(j)]) + cross.col(j).dot(w);
    if (var) {
      double v = k0 - cross.col(j).squaredNorm();
      if (v < kVarianceFloor) {
        throw Error(ErrorKind::Numerical, "gp: posterior variance " + std::to_string(v) + " below round-off floor");
      }
      var[j] = std::max(v, 0.0);
    }
  }
}

std::vector<FieldSample> GpModel::posterior(std::span<const Point3> queries) const {
  std::vector<double> mean(queries.size());
  std::vector<double> var(queries.size());
  const std::size_t chunks = (queries.size() + kQueryChunk - 1) / kQueryChunk;
  const unsigned workers = std::min<std::size_t>(std::max(1u, std::thread::hardware_concurrency()), chunks);

  auto run_chunk = [&](std::size_t c) {
    const std::size_t begin = c * kQueryChunk;
    const std::size_t len = std::min(kQueryChunk, queries.size() - begin);
    evaluate_chunk(queries.subspan(begin, len), mean.data() + begin, var.data() + begin);
  };

  if (workers <= 1) {
    for (std::size_t c = 0; c < chunks; ++c) run_chunk(c);
  } else {
    // Chunk boundaries do not depend on the worker count, so results are bitwise stable.
    std::vector<std::exception_ptr> errors(workers);
    {
      std::vector<std::jthread> pool;
      for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
          try {
            for (std::size_t c = w; c < chunks; c += workers) run_chunk(c);
          } catch (...) {
            errors[w] = std::current_exception();
          }
        });
      }
    }
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  std::vector<FieldSample> out(queries.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = {mean[i], var[i]};
  return out;
}

std::vector<double> GpModel::posterior_mean(std::span<const Point3> queries) const {
  std::vector<double> out;
  out.reserve(queries.size());
  for (const auto& s : posterior(queries)) out.push_back(s.mean);
  return out;
}

std::vector<double> GpModel::posterior_var(std::span<const Point3> queries) const {
  std::vector<double> out;
  out.reserve(queries.size());
  for (const auto& s : posterior(queries)) out.push_back(s.variance);
  return out;
}

FieldSample GpModel::posterior_at(const Point3& q) const {
  FieldSample s;
  evaluate_chunk(std::span<const Point3>(&q, 1), &s.mean, &s.variance);
  return s;
}

}  // namespace tactile
