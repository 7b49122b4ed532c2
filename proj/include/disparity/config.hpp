#pragma once

#include <string>

#include "disparity/divergence.hpp"
#include "disparity/features.hpp"
#include "disparity/gmm.hpp"

namespace disparity {

// Complete recipe for one classifier: how features are extracted, how the
// speaker and test-utterance mixtures are fit, how utterances are scored,
// and whether per-speaker principal rotations are applied.
struct ClassifierConfig {
  FeatureConfig features;
  EmConfig em_speaker;          // speaker models; plenty of training frames
  EmConfig em_test = test_em_defaults();  // test-utterance density g
  ScoringConfig scoring;
  bool use_pct = true;

  // Test utterances are short, so the default g uses fewer components than
  // the 32-component speaker models.
  static EmConfig test_em_defaults() {
    EmConfig c;
    c.num_components = 8;
    return c;
  }

  void validate() const;
};

// Applies one `key = value` setting. Keys mirror the struct fields:
//   feature.window_size   feature.window_shift  feature.num_filters
//   feature.num_ceps      feature.min_freq      feature.max_freq
//   feature.use_delta     feature.include_c0    feature.pre_emphasis
//   feature.window_function
//   em.<field>            (sets both mixtures)
//   em_speaker.<field>    em_test.<field>
//     where <field> is one of num_components, max_iters, rel_tol,
//     variance_floor, seed, num_restarts
//   scoring.measure       scoring.estimator     scoring.beta
//   scoring.trim_low      scoring.trim_high
//   use_pct
// Unknown keys and unparsable values raise DataError.
void apply_config_entry(ClassifierConfig& config, const std::string& key,
                        const std::string& value);

// Parses `key = value` lines on top of `base`. '#' starts a comment; blank
// lines are skipped; later lines override earlier ones.
ClassifierConfig parse_config_text(const std::string& text,
                                   ClassifierConfig base = {});

ClassifierConfig load_config_file(const std::string& path,
                                  ClassifierConfig base = {});

// Value parsing helpers shared with the CLI; all throw DataError with the
// offending text on failure.
bool parse_bool_value(const std::string& text);
long long parse_int_value(const std::string& text);
double parse_double_value(const std::string& text);

}  // namespace disparity
