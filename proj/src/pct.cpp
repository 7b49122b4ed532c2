#include "disparity/pct.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Eigenvalues>

#include "disparity/errors.hpp"

namespace disparity {

Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& frames) {
  const int m = static_cast<int>(frames.cols());
  if (m < 2) {
    throw DataError("sample covariance needs at least 2 frames, got " +
                    std::to_string(m));
  }
  const Eigen::VectorXd mean = frames.rowwise().mean();
  const Eigen::MatrixXd centered = frames.colwise() - mean;
  return centered * centered.transpose() / static_cast<double>(m - 1);
}

PctTransform pct_compute(const Eigen::MatrixXd& frames) {
  if (frames.rows() < 1) {
    throw DataError("PCT input must have at least one dimension");
  }
  if (!frames.allFinite()) {
    throw DataError("PCT input contains non-finite values");
  }
  const Eigen::MatrixXd cov = sample_covariance(frames);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) {
    throw NumericError("covariance eigendecomposition failed");
  }

  const int d = static_cast<int>(frames.rows());
  PctTransform out;
  out.rotation.resize(d, d);
  out.eigenvalues.resize(d);
  // The solver returns eigenvalues in ascending order; we want them
  // descending, with exact ties kept in the solver's original order.
  std::vector<int> order(d);
  for (int i = 0; i < d; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return solver.eigenvalues()[a] > solver.eigenvalues()[b];
  });
  for (int r = 0; r < d; ++r) {
    const int src = order[r];
    out.eigenvalues[r] = solver.eigenvalues()[src];
    Eigen::RowVectorXd row = solver.eigenvectors().col(src).transpose();
    // Sign convention: largest-magnitude entry positive, earliest on ties.
    int arg = 0;
    double best = -1.0;
    for (int c = 0; c < d; ++c) {
      const double mag = std::abs(row[c]);
      if (mag > best) {
        best = mag;
        arg = c;
      }
    }
    if (row[arg] < 0.0) row = -row;
    out.rotation.row(r) = row;
  }
  return out;
}

Eigen::MatrixXd pct_apply(const PctTransform& transform,
                          const Eigen::MatrixXd& frames) {
  if (transform.rotation.cols() != frames.rows()) {
    throw DataError("PCT dimension mismatch: transform is " +
                    std::to_string(transform.rotation.cols()) +
                    "-dimensional, frames are " +
                    std::to_string(frames.rows()) + "-dimensional");
  }
  return transform.rotation * frames;
}

FeatureMatrix pct_apply(const PctTransform& transform,
                        const FeatureMatrix& features) {
  FeatureMatrix out;
  out.values = pct_apply(transform, features.values);
  out.config_fingerprint = features.config_fingerprint;
  return out;
}

}  // namespace disparity
