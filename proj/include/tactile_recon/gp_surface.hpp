#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <vector>

#include "tactile_recon/geometry.hpp"

namespace tactile {

struct ContactPoint {
  Point3 position;
  std::int64_t timestamp_ms = 0;
  int sensor_id = 0;
};

/// Contacts registered so far. Targets are implicitly zero (points on the
/// surface), so only positions are stored.
class ContactDataset {
 public:
  static constexpr double kDefaultDedupRadius = 1e-3;

  explicit ContactDataset(double dedup_radius = kDefaultDedupRadius);

  /// True when no stored point lies closer than the dedup radius.
  bool accepts(const Point3& p) const;
  /// Appends the contact unless it duplicates an existing one. Throws on a
  /// non-finite position or a timestamp earlier than the last stored one.
  bool insert(const ContactPoint& c);

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const ContactPoint& operator[](std::size_t i) const { return points_[i]; }
  const std::vector<ContactPoint>& points() const { return points_; }
  double dedup_radius() const { return dedup_radius_; }

 private:
  double dedup_radius_;
  std::vector<ContactPoint> points_;
};

/// 3-D thin-plate covariance k(d) = 2d^3 - 3Rd^2 + R^3.
struct TpsKernel {
  double scale = 1.0;

  double of_distance(double d) const { return 2.0 * d * d * d - 3.0 * scale * d * d + scale * scale * scale; }
  double operator()(const Point3& a, const Point3& b) const { return of_distance(distance(a, b)); }
  double at_zero() const { return scale * scale * scale; }
};

/// GP mean function: signed distance to a sphere.
struct SphericalPrior {
  Point3 center;
  double radius = 0.1;

  double operator()(const Point3& p) const { return distance(p, center) - radius; }
};

struct GpParams {
  TpsKernel kernel;
  SphericalPrior prior;
  double noise_var = 0.0;
  double jitter_initial = 0.0;
  double jitter_max = 0.0;
  double dedup_radius = ContactDataset::kDefaultDedupRadius;

  /// Kernel scale = workspace diagonal, noise 1e-6 R^3, jitter 1e-10 R^3 up to 1e-6 R^3.
  static GpParams for_workspace(const Aabb& workspace, const SphericalPrior& prior);
  /// Same defaults around an explicit kernel scale.
  static GpParams for_scale(double kernel_scale, const SphericalPrior& prior);

  void validate() const;
};

struct FieldSample {
  double mean = 0.0;
  double variance = 0.0;
};

/// Lower-triangular Cholesky factor that grows one row at a time.
class CholeskyFactor {
 public:
  std::size_t size() const { return n_; }
  void clear() { n_ = 0; }

  /// Appends the row for a new symmetric column `cross` (covariances with the
  /// existing rows) and diagonal entry `self`. Returns false, leaving the
  /// factor unchanged, if the new pivot is not positive.
  bool append(const Eigen::VectorXd& cross, double self);

  /// Replaces the factor with L where L L^T = matrix.
  bool assign(const Eigen::MatrixXd& matrix);

  double operator()(Eigen::Index i, Eigen::Index j) const { return storage_(i, j); }
  auto lower() const { return storage_.topLeftCorner(n_, n_).triangularView<Eigen::Lower>(); }
  /// Solves L X = B in place.
  void solve_lower_in_place(Eigen::Ref<Eigen::MatrixXd> b) const;

 private:
  void reserve(std::size_t n);

  Eigen::MatrixXd storage_;
  std::size_t n_ = 0;
};

enum class AddResult { Accepted, Rejected };

/// GP implicit-surface estimate conditioned on surface contacts.
///
/// Mean   mu(q)  = m(q) + k_q^T (K + s I)^-1 (0 - m(X))
/// Var    var(q) = k(q,q) - k_q^T (K + s I)^-1 k_q
///
/// with s = noise variance + jitter. The factor of (K + s I) and the
/// whitened residual L^-1 (0 - m(X)) are kept current on every mutation.
/// Mutation needs exclusive access; const queries may run concurrently.
class GpModel {
 public:
  explicit GpModel(GpParams params);

  /// Rejected (model unchanged) if within the dedup radius of a stored
  /// contact. Otherwise the factor is extended by one row. Throws a
  /// Numerical error, leaving the model unchanged, if the factorization
  /// breaks down at the largest permitted jitter.
  AddResult add_contact(const ContactPoint& c);

  /// Rebuilds the factorization from scratch starting at the initial jitter.
  void batch_refit();

  std::vector<double> posterior_mean(std::span<const Point3> queries) const;
  std::vector<double> posterior_var(std::span<const Point3> queries) const;
  std::vector<FieldSample> posterior(std::span<const Point3> queries) const;
  FieldSample posterior_at(const Point3& q) const;

  const GpParams& params() const { return params_; }
  const ContactDataset& dataset() const { return dataset_; }
  std::size_t size() const { return dataset_.size(); }
  double jitter() const { return jitter_; }

 private:
  void evaluate_chunk(std::span<const Point3> queries, double* mean, double* var) const;
  /// Factorizes the dataset from scratch, escalating jitter from `start`.
  void refactor_from(double start);

  GpParams params_;
  ContactDataset dataset_;
  CholeskyFactor factor_;
  Eigen::VectorXd whitened_;  // L^-1 (0 - m(X)), first size() entries valid
  double jitter_;
};

/// Returns a copy of `model` refit from scratch.
GpModel batch_refit(const GpModel& model);

}  // namespace tactile
