#include "disparity/gmm.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "disparity/errors.hpp"
#include "disparity/rng.hpp"

namespace disparity {
namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;
constexpr double kMinVariance = 1e-12;

// Component log densities for every frame: K x M.
Eigen::MatrixXd component_log_densities(const Eigen::MatrixXd& frames,
                                        const Eigen::MatrixXd& means,
                                        const Eigen::MatrixXd& inv_var,
                                        const Eigen::VectorXd& log_norm) {
  const int k = static_cast<int>(means.cols());
  const int m = static_cast<int>(frames.cols());
  Eigen::MatrixXd logp(k, m);
  for (int j = 0; j < k; ++j) {
    const auto diff = frames.colwise() - means.col(j);
    logp.row(j) = ((diff.array().square().colwise() * inv_var.col(j).array())
                       .colwise()
                       .sum() *
                   -0.5)
                      .matrix();
    logp.row(j).array() += log_norm[j];
  }
  return logp;
}

Eigen::VectorXd log_sum_exp_columns(const Eigen::MatrixXd& logp) {
  const int m = static_cast<int>(logp.cols());
  Eigen::VectorXd out(m);
  for (int i = 0; i < m; ++i) {
    const double mx = logp.col(i).maxCoeff();
    out[i] = mx + std::log((logp.col(i).array() - mx).exp().sum());
  }
  return out;
}

struct MixtureParams {
  Eigen::VectorXd weights;
  Eigen::MatrixXd means;
  Eigen::MatrixXd variances;
};

Eigen::VectorXd precompute_log_norm(const MixtureParams& p) {
  const int k = static_cast<int>(p.weights.size());
  Eigen::VectorXd log_norm(k);
  for (int j = 0; j < k; ++j) {
    const double log_det = p.variances.col(j).array().log().sum();
    const double log_w =
        p.weights[j] > 0.0 ? std::log(p.weights[j])
                           : -std::numeric_limits<double>::infinity();
    log_norm[j] = log_w - 0.5 * (p.means.rows() * kLog2Pi + log_det);
  }
  return log_norm;
}

// k-means++ seeding: first center uniform, later centers proportional to
// squared distance from the nearest existing center.
std::vector<int> kmeanspp_centers(const Eigen::MatrixXd& data, int k, Rng& rng) {
  const int m = static_cast<int>(data.cols());
  std::vector<int> centers;
  centers.reserve(k);
  centers.push_back(static_cast<int>(rng.uniform_below(m)));

  Eigen::VectorXd min_sq =
      (data.colwise() - data.col(centers[0])).colwise().squaredNorm().transpose();
  for (int c = 1; c < k; ++c) {
    const double total = min_sq.sum();
    int pick;
    if (!(total > 0.0)) {
      pick = static_cast<int>(rng.uniform_below(m));  // identical frames
    } else {
      const double threshold = rng.uniform() * total;
      double acc = 0.0;
      pick = m - 1;
      for (int i = 0; i < m; ++i) {
        acc += min_sq[i];
        if (acc >= threshold) {
          pick = i;
          break;
        }
      }
    }
    centers.push_back(pick);
    min_sq = min_sq.cwiseMin(
        (data.colwise() - data.col(pick)).colwise().squaredNorm().transpose());
  }
  return centers;
}

}  // namespace

GmmModel::GmmModel(Eigen::VectorXd weights, Eigen::MatrixXd means,
                   Eigen::MatrixXd variances)
    : weights_(std::move(weights)),
      means_(std::move(means)),
      variances_(std::move(variances)) {
  const int k = static_cast<int>(weights_.size());
  if (k < 1) throw std::invalid_argument("mixture needs >= 1 component");
  if (means_.cols() != k || variances_.cols() != k ||
      means_.rows() != variances_.rows() || means_.rows() < 1) {
    throw std::invalid_argument("mixture parameter shapes disagree");
  }
  if (!weights_.allFinite() || !means_.allFinite() || !variances_.allFinite()) {
    throw std::invalid_argument("mixture parameters must be finite");
  }
  if (weights_.minCoeff() < 0.0 || std::abs(weights_.sum() - 1.0) > 1e-12) {
    throw std::invalid_argument("weights must be a simplex vector");
  }
  if (variances_.minCoeff() <= 0.0) {
    throw std::invalid_argument("variances must be positive");
  }
  inv_var_ = variances_.cwiseInverse();
  log_norm_ = precompute_log_norm({weights_, means_, variances_});
}

double GmmModel::log_density(const Eigen::VectorXd& x) const {
  if (x.size() != dim()) {
    throw std::invalid_argument("log_density: dimension mismatch (" +
                                std::to_string(x.size()) + " vs model dim " +
                                std::to_string(dim()) + ")");
  }
  double mx = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd logp(num_components());
  for (int j = 0; j < num_components(); ++j) {
    const double quad =
        ((x - means_.col(j)).array().square() * inv_var_.col(j).array()).sum();
    logp[j] = log_norm_[j] - 0.5 * quad;
    mx = std::max(mx, logp[j]);
  }
  return mx + std::log((logp.array() - mx).exp().sum());
}

Eigen::VectorXd GmmModel::log_density_frames(const Eigen::MatrixXd& frames) const {
  if (frames.rows() != dim()) {
    throw std::invalid_argument("log_density_frames: dimension mismatch");
  }
  return log_sum_exp_columns(
      component_log_densities(frames, means_, inv_var_, log_norm_));
}

void EmConfig::validate() const {
  if (num_components < 1) throw DataError("num_components must be >= 1");
  if (max_iters < 1) throw DataError("max_iters must be >= 1");
  if (!(rel_tol > 0.0)) throw DataError("rel_tol must be positive");
  if (!(variance_floor > 0.0)) throw DataError("variance_floor must be positive");
  if (num_restarts < 1) throw DataError("num_restarts must be >= 1");
}

GmmModel em_fit(const FeatureMatrix& features, const EmConfig& config,
                EmTrace* trace) {
  config.validate();
  const Eigen::MatrixXd& data = features.values;
  const int d = static_cast<int>(data.rows());
  const int m = static_cast<int>(data.cols());
  const int k = config.num_components;
  if (m < k) {
    throw DataError("EM needs at least one frame per component (" +
                    std::to_string(m) + " frames, " + std::to_string(k) +
                    " components)");
  }
  if (!data.allFinite()) throw DataError("features contain non-finite values");

  const Eigen::VectorXd global_mean = data.rowwise().mean();
  const Eigen::VectorXd global_var =
      (data.colwise() - global_mean).array().square().rowwise().mean().matrix();
  const Eigen::VectorXd var_floor =
      (config.variance_floor * global_var.array()).max(kMinVariance).matrix();

  if (trace != nullptr) {
    trace->log_likelihood.assign(config.num_restarts, {});
    trace->best_restart = 0;
    trace->degenerate = global_var.maxCoeff() <= 0.0 && k > 1;
  }

  const auto floor_variances = [&](Eigen::MatrixXd& variances) {
    for (int j = 0; j < k; ++j) {
      variances.col(j) = variances.col(j).cwiseMax(var_floor);
    }
  };

  MixtureParams best;
  double best_ll = -std::numeric_limits<double>::infinity();
  int best_restart = 0;

  for (int r = 0; r < config.num_restarts; ++r) {
    Rng rng(splitmix64(splitmix64(config.seed) + static_cast<std::uint64_t>(r)));

    // Initialization: k-means++ centers, one hard-assignment M-step.
    const std::vector<int> centers = kmeanspp_centers(data, k, rng);
    MixtureParams params;
    params.weights.resize(k);
    params.means.resize(d, k);
    params.variances.resize(d, k);
    {
      std::vector<int> assign(m, 0);
      for (int i = 0; i < m; ++i) {
        double best_d = std::numeric_limits<double>::infinity();
        for (int j = 0; j < k; ++j) {
          const double dist =
              (data.col(i) - data.col(centers[j])).squaredNorm();
          if (dist < best_d) {
            best_d = dist;
            assign[i] = j;
          }
        }
      }
      Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
      Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(d, k);
      Eigen::MatrixXd sq_sums = Eigen::MatrixXd::Zero(d, k);
      for (int i = 0; i < m; ++i) {
        counts[assign[i]] += 1.0;
        sums.col(assign[i]) += data.col(i);
        sq_sums.col(assign[i]) += data.col(i).array().square().matrix();
      }
      for (int j = 0; j < k; ++j) {
        if (counts[j] > 0.0) {
          params.weights[j] = counts[j];
          params.means.col(j) = sums.col(j) / counts[j];
          params.variances.col(j) =
              sq_sums.col(j) / counts[j] -
              params.means.col(j).array().square().matrix();
        } else {
          params.weights[j] = 1.0;
          params.means.col(j) = data.col(centers[j]);
          params.variances.col(j) = global_var;
        }
      }
      params.weights /= params.weights.sum();
      floor_variances(params.variances);
    }

    std::vector<double>* ll_trace =
        trace != nullptr ? &trace->log_likelihood[r] : nullptr;
    double prev_ll = -std::numeric_limits<double>::infinity();
    Eigen::MatrixXd inv_var;
    Eigen::VectorXd log_norm;

    const auto evaluate = [&]() {
      inv_var = params.variances.cwiseInverse();
      log_norm = precompute_log_norm(params);
      return component_log_densities(data, params.means, inv_var, log_norm);
    };

    double final_ll = 0.0;
    for (int iter = 0; iter <= config.max_iters; ++iter) {
      const Eigen::MatrixXd logp = evaluate();
      const Eigen::VectorXd frame_ll = log_sum_exp_columns(logp);
      const double ll = frame_ll.sum();
      if (ll_trace != nullptr) ll_trace->push_back(ll);
      final_ll = ll;

      const bool converged =
          iter > 0 && ll - prev_ll < config.rel_tol * std::abs(prev_ll);
      if (iter == config.max_iters || converged) break;
      prev_ll = ll;

      // E-step.
      const Eigen::MatrixXd resp =
          (logp.rowwise() - frame_ll.transpose()).array().exp().matrix();

      // M-step.
      Eigen::VectorXd nk = resp.rowwise().sum();
      Eigen::MatrixXd means_new = data * resp.transpose();
      Eigen::MatrixXd sq_new =
          data.array().square().matrix() * resp.transpose();
      for (int j = 0; j < k; ++j) {
        if (nk[j] < 1e-10) {
          // Dead component: re-seed at the frame the model explains worst.
          int worst = 0;
          frame_ll.minCoeff(&worst);
          nk[j] = 1.0;
          means_new.col(j) = data.col(worst);
          sq_new.col(j) =
              (data.col(worst).array().square() + global_var.array()).matrix();
        }
        means_new.col(j) /= nk[j];
        sq_new.col(j) /= nk[j];
      }
      params.weights = nk / nk.sum();
      params.means = means_new;
      params.variances =
          sq_new - params.means.array().square().matrix();
      floor_variances(params.variances);
    }

    if (final_ll > best_ll) {
      best_ll = final_ll;
      best = params;
      best_restart = r;
    }
  }

  if (trace != nullptr) trace->best_restart = best_restart;
  return GmmModel(best.weights, best.means, best.variances);
}

double mean_log_likelihood(const GmmModel& model, const FeatureMatrix& features) {
  if (features.num_frames() < 1) throw DataError("no frames");
  return model.log_density_frames(features.values).mean();
}

}  // namespace disparity
