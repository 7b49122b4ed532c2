#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "disparity/features.hpp"

namespace disparity {

// Weighted diagonal-covariance Gaussian mixture. Immutable once built;
// log_density is safe for concurrent callers.
class GmmModel {
 public:
  // means and variances are dim x num_components (column per component).
  // Validates: weights on the simplex (1e-12), variances positive, all
  // entries finite. Throws std::invalid_argument otherwise.
  GmmModel(Eigen::VectorXd weights, Eigen::MatrixXd means,
           Eigen::MatrixXd variances);

  int num_components() const { return static_cast<int>(weights_.size()); }
  int dim() const { return static_cast<int>(means_.rows()); }
  const Eigen::VectorXd& weights() const { return weights_; }
  const Eigen::MatrixXd& means() const { return means_; }
  const Eigen::MatrixXd& variances() const { return variances_; }

  // log sum_j w_j N(x; mu_j, diag(sigma_j^2)), via log-sum-exp.
  double log_density(const Eigen::VectorXd& x) const;

  // log_density of every column; one vector entry per frame.
  Eigen::VectorXd log_density_frames(const Eigen::MatrixXd& frames) const;

 private:
  Eigen::VectorXd weights_;
  Eigen::MatrixXd means_;      // d x K
  Eigen::MatrixXd variances_;  // d x K
  Eigen::MatrixXd inv_var_;    // d x K, 1/sigma^2
  Eigen::VectorXd log_norm_;   // K: log w_j - 0.5 sum_d log(2 pi sigma_jd^2)
};

struct EmConfig {
  int num_components = 32;
  int max_iters = 50;
  double rel_tol = 1e-6;
  // Per-dimension floor factor: floor_d = max(variance_floor * gvar_d, 1e-12)
  // where gvar is the global per-dimension variance of the training frames.
  double variance_floor = 1e-4;
  std::uint64_t seed = 0;
  int num_restarts = 1;

  void validate() const;
};

// Per-restart diagnostics from em_fit.
struct EmTrace {
  // log_likelihood[r][t] = total data log-likelihood of restart r's model
  // before iteration t's update (entry 0 is the initialization, the last
  // entry the final model).
  std::vector<std::vector<double>> log_likelihood;
  int best_restart = 0;
  // Training data had (near-)identical frames with num_components > 1; the
  // fit degrades gracefully to fewer effective components.
  bool degenerate = false;
};

// Fits a mixture by EM with k-means++ seeding. Deterministic for a fixed
// seed. Returns the restart with the highest final log-likelihood.
GmmModel em_fit(const FeatureMatrix& features, const EmConfig& config,
                EmTrace* trace = nullptr);

// (1/M) sum_i log_density(frame i).
double mean_log_likelihood(const GmmModel& model, const FeatureMatrix& features);

}  // namespace disparity
