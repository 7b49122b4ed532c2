#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "disparity/divergence.hpp"
#include "disparity/features.hpp"
#include "disparity/gmm.hpp"
#include "disparity/pct.hpp"

namespace disparity {

// One enrolled speaker: a mixture density over (optionally rotated) frames.
//
// With `use_pct` the rotation is fitted to the speaker's own training
// frames and the mixture is estimated in that rotated space; a test frame x
// is then evaluated as f(P x).  Because P is orthogonal the rotation leaves
// densities' mass intact, so scores from different speakers (each with its
// own rotation) remain comparable.
struct SpeakerModel {
  GmmModel gmm;
  PctTransform pct;  // Meaningful only when `use_pct` is true.
  bool use_pct = false;
  std::uint64_t feature_fingerprint = 0;  // Training feature configuration.
};

// Fits a speaker model on the concatenated training frames.
SpeakerModel train_speaker(const FeatureMatrix& train_features,
                           const EmConfig& em_config, bool use_pct);

// Fits the test-utterance density g used by residual-based scoring.
//
// With `use_pct` the utterance's own principal rotation is computed first
// and g is estimated on the rotated frames, mirroring speaker training.
GmmModel fit_test_density(const FeatureMatrix& test_features,
                          const EmConfig& em_config, bool use_pct);

// Scores one utterance against one speaker.  `test_density` must be the
// model produced by `fit_test_density` with the same `use_pct` flag as the
// speaker (it may be null when the configuration never evaluates g, i.e.
// for Type I LD).  Higher is better.
double score_speaker(const SpeakerModel& speaker,
                     const FeatureMatrix& test_features,
                     const GmmModel* test_density,
                     const ScoringConfig& config);

struct IdentificationResult {
  std::string best_speaker;
  std::map<std::string, double> scores;  // Per-speaker utterance scores.
};

// Identifies the speaker of one utterance: fits the test density at most
// once, scores every enrolled speaker (in parallel), and returns the argmax
// with ties broken toward the lexicographically smallest speaker id.
IdentificationResult identify(const std::map<std::string, SpeakerModel>& speakers,
                              const FeatureMatrix& test_features,
                              const EmConfig& test_em_config,
                              const ScoringConfig& config);

// How per-classifier score maps are combined into an ensemble.
enum class FusionMode {
  kStandardized,  // Zero-median, unit-MAD standardization, then sum.
  kSum,           // Plain sum of raw scores.
};

std::string fusion_mode_name(FusionMode mode);     // "standardized", "sum"
FusionMode parse_fusion_mode(const std::string& name);

// Fuses several per-speaker score maps (same key set in each) into one.
//
// In kStandardized mode each classifier's scores are first centered at
// their median and divided by their median absolute deviation (a MAD of
// zero falls back to a scale of one), so classifiers with wildly different
// score ranges contribute comparably.
std::map<std::string, double> fuse_scores(
    const std::vector<std::map<std::string, double>>& per_classifier,
    FusionMode mode);

// Argmax over a score map; ties go to the lexicographically smallest key.
std::string best_speaker(const std::map<std::string, double>& scores);

}  // namespace disparity

