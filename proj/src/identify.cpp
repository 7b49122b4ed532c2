#include "disparity/identify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "disparity/errors.hpp"
#include "disparity/parallel.hpp"

namespace disparity {
namespace {

std::vector<double> to_vector(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

// Log densities of the speaker model over the test frames, rotated into the
// speaker's principal axes when the model was trained that way.
std::vector<double> speaker_log_densities(const SpeakerModel& speaker,
                                          const Eigen::MatrixXd& frames) {
  if (speaker.use_pct) {
    return to_vector(speaker.gmm.log_density_frames(
        pct_apply(speaker.pct, frames)));
  }
  return to_vector(speaker.gmm.log_density_frames(frames));
}

double median_of(std::vector<double> values) {
  const size_t n = values.size();
  std::sort(values.begin(), values.end());
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

SpeakerModel train_speaker(const FeatureMatrix& train_features,
                           const EmConfig& em_config, bool use_pct) {
  if (!use_pct) {
    // The stored transformation is the identity so that the archived model
    // has the same shape either way; scoring skips the rotation entirely.
    const int d = static_cast<int>(train_features.values.rows());
    PctTransform identity{Eigen::MatrixXd::Identity(d, d),
                          Eigen::VectorXd::Ones(d)};
    return SpeakerModel{em_fit(train_features, em_config),
                        std::move(identity), false,
                        train_features.config_fingerprint};
  }
  PctTransform pct = pct_compute(train_features.values);
  FeatureMatrix rotated = pct_apply(pct, train_features);
  GmmModel gmm = em_fit(rotated, em_config);
  return SpeakerModel{std::move(gmm), std::move(pct), true,
                      train_features.config_fingerprint};
}

GmmModel fit_test_density(const FeatureMatrix& test_features,
                          const EmConfig& em_config, bool use_pct) {
  if (!use_pct) return em_fit(test_features, em_config);
  const PctTransform pct = pct_compute(test_features.values);
  return em_fit(pct_apply(pct, test_features), em_config);
}

double score_speaker(const SpeakerModel& speaker,
                     const FeatureMatrix& test_features,
                     const GmmModel* test_density,
                     const ScoringConfig& config) {
  config.validate();
  if (test_features.num_frames() < 1) {
    throw DataError("cannot score an utterance with no frames");
  }
  if (speaker.feature_fingerprint != test_features.config_fingerprint) {
    throw DataError(
        "speaker model was trained with a different feature configuration");
  }
  const std::vector<double> log_f =
      speaker_log_densities(speaker, test_features.values);

  if (!config.needs_test_density()) {
    return utterance_score({}, log_f, config);
  }
  if (test_density == nullptr) {
    throw DataError("this scoring configuration needs a test-utterance density");
  }
  // g lives in the test utterance's own principal axes (or the raw space);
  // the rotation is recomputed here so a lone score_speaker call agrees with
  // identify(), which shares one rotation across all speakers.
  Eigen::MatrixXd g_frames = test_features.values;
  if (speaker.use_pct) {
    g_frames = pct_apply(pct_compute(test_features.values), g_frames);
  }
  const std::vector<double> log_g =
      to_vector(test_density->log_density_frames(g_frames));
  return utterance_score(log_g, log_f, config);
}

IdentificationResult identify(const std::map<std::string, SpeakerModel>& speakers,
                              const FeatureMatrix& test_features,
                              const EmConfig& test_em_config,
                              const ScoringConfig& config) {
  config.validate();
  if (speakers.empty()) throw DataError("no enrolled speakers");
  if (test_features.num_frames() < 1) {
    throw DataError("cannot identify an utterance with no frames");
  }

  const bool use_pct = speakers.begin()->second.use_pct;
  for (const auto& [id, model] : speakers) {
    if (model.use_pct != use_pct) {
      throw DataError("speaker '" + id +
                      "' disagrees with the others about the rotation flag");
    }
    if (model.feature_fingerprint != test_features.config_fingerprint) {
      throw DataError("speaker '" + id +
                      "' was trained with a different feature configuration");
    }
  }

  // The test density and its log densities depend only on the utterance, so
  // they are computed once and shared across speakers.
  std::vector<double> log_g;
  if (config.needs_test_density()) {
    const GmmModel g = fit_test_density(test_features, test_em_config, use_pct);
    Eigen::MatrixXd g_frames = test_features.values;
    if (use_pct) {
      g_frames = pct_apply(pct_compute(test_features.values), g_frames);
    }
    log_g = to_vector(g.log_density_frames(g_frames));
  }

  std::vector<std::string> ids;
  std::vector<const SpeakerModel*> models;
  ids.reserve(speakers.size());
  for (const auto& [id, model] : speakers) {
    ids.push_back(id);
    models.push_back(&model);
  }

  std::vector<double> slot_scores(ids.size());
  parallel_for(static_cast<int>(ids.size()), [&](int i) {
    const std::vector<double> log_f =
        speaker_log_densities(*models[i], test_features.values);
    slot_scores[i] = utterance_score(log_g, log_f, config);
  });

  IdentificationResult result;
  double best = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < ids.size(); ++i) {
    result.scores.emplace(ids[i], slot_scores[i]);
    if (slot_scores[i] > best) {  // strict: first (smallest id) wins ties
      best = slot_scores[i];
      result.best_speaker = ids[i];
    }
  }
  if (result.best_speaker.empty()) {
    // Every score was -inf or NaN; fall back to the smallest id.
    result.best_speaker = ids.front();
  }
  return result;
}

std::string fusion_mode_name(FusionMode mode) {
  return mode == FusionMode::kStandardized ? "standardized" : "sum";
}

FusionMode parse_fusion_mode(const std::string& name) {
  std::string s = name;
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (s == "standardized") return FusionMode::kStandardized;
  if (s == "sum") return FusionMode::kSum;
  throw DataError("unknown fusion mode '" + name +
                  "' (expected standardized or sum)");
}

std::map<std::string, double> fuse_scores(
    const std::vector<std::map<std::string, double>>& per_classifier,
    FusionMode mode) {
  if (per_classifier.empty()) throw DataError("nothing to fuse");
  const auto& reference = per_classifier.front();
  if (reference.empty()) throw DataError("cannot fuse empty score maps");
  for (const auto& scores : per_classifier) {
    if (scores.size() != reference.size() ||
        !std::equal(scores.begin(), scores.end(), reference.begin(),
                    [](const auto& a, const auto& b) {
                      return a.first == b.first;
                    })) {
      throw DataError("fused score maps must share one speaker set");
    }
  }

  std::map<std::string, double> fused;
  for (const auto& [id, unused] : reference) fused.emplace(id, 0.0);

  for (const auto& scores : per_classifier) {
    if (mode == FusionMode::kSum) {
      for (const auto& [id, value] : scores) fused[id] += value;
      continue;
    }
    std::vector<double> values;
    values.reserve(scores.size());
    for (const auto& [id, value] : scores) values.push_back(value);
    const double med = median_of(values);
    std::vector<double> deviations;
    deviations.reserve(values.size());
    for (double v : values) deviations.push_back(std::abs(v - med));
    const double mad = median_of(deviations);
    const double scale = mad > 0.0 ? mad : 1.0;
    for (const auto& [id, value] : scores) {
      fused[id] += (value - med) / scale;
    }
  }
  return fused;
}

std::string best_speaker(const std::map<std::string, double>& scores) {
  if (scores.empty()) throw DataError("empty score map");
  std::string best_id = scores.begin()->first;
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& [id, value] : scores) {
    if (value > best) {
      best = value;
      best_id = id;
    }
  }
  return best_id;
}

}  // namespace disparity
