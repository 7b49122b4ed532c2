#pragma once

#include <Eigen/Dense>

#include "disparity/features.hpp"

namespace disparity {

// Principal component transformation fitted to one utterance.
//
// `rotation` is the d x d orthogonal matrix whose rows are the principal
// directions of the frame cloud, ordered by descending variance.  Applying
// it is a pure rotation: frames are neither centered nor truncated, so the
// transformed features live in the same space and keep their density mass.
struct PctTransform {
  Eigen::MatrixXd rotation;     // d x d; row r = r-th principal direction.
  Eigen::VectorXd eigenvalues;  // Descending covariance eigenvalues.

  int dim() const { return static_cast<int>(rotation.rows()); }
};

// Unbiased sample covariance (denominator M - 1) of a d x M frame matrix.
Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& frames);

// Fits the transformation to a d x M frame matrix (requires M >= 2).
//
// Eigenvectors are sorted by descending eigenvalue.  Each one is sign-fixed
// so that its largest-magnitude entry is positive; when several entries tie
// for the largest magnitude, the lowest-indexed one decides.  That makes the
// result deterministic up to genuinely degenerate (repeated) eigenvalues.
PctTransform pct_compute(const Eigen::MatrixXd& frames);

// Rotates frames into the principal axes: returns `rotation * frames`.
Eigen::MatrixXd pct_apply(const PctTransform& transform,
                          const Eigen::MatrixXd& frames);

// Convenience overload preserving the feature-config fingerprint.
FeatureMatrix pct_apply(const PctTransform& transform,
                        const FeatureMatrix& features);

}  // namespace disparity

