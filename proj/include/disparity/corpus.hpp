#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "disparity/config.hpp"
#include "disparity/features.hpp"
#include "disparity/identify.hpp"

namespace disparity {

// One corpus row: which speaker, which utterance, where the audio lives.
struct ManifestEntry {
  std::string speaker_id;
  int utterance_index = 0;
  std::string path;
};

struct CorpusManifest {
  std::vector<ManifestEntry> entries;
  std::map<std::string, std::string> metadata;
};

// Reads a tab-separated manifest: `speaker_id<TAB>utterance_index<TAB>path`
// per line, `#` comments and blank lines skipped. Relative paths are
// resolved against the manifest's directory. Validates: at least one entry,
// unique (speaker, utterance) pairs, every speaker with >= 2 utterances.
CorpusManifest load_manifest(const std::string& path);

// Per-speaker utterance counts for the train and test sides.
struct SplitSpec {
  int train_count = 0;
  int test_count = 0;
  void validate() const;  // both >= 1
};

// Per speaker: utterances ordered by utterance_index, first train_count of
// them for training, the next test_count for testing.
struct CorpusSplit {
  std::map<std::string, std::vector<ManifestEntry>> train;
  std::map<std::string, std::vector<ManifestEntry>> test;
};

// Splits deterministically; a speaker with fewer than train_count +
// test_count utterances is an error naming that speaker.
CorpusSplit split_corpus(const CorpusManifest& manifest, const SplitSpec& spec);

// Maps a manifest entry to its feature matrix. The default implementation
// loads a WAV file and extracts features; synthetic corpora substitute a
// provider that returns precomputed features. Providers must throw on
// failure -- a skipped utterance would silently skew accuracies.
using FeatureProvider =
    std::function<FeatureMatrix(const ManifestEntry&, const FeatureConfig&)>;

FeatureProvider wav_feature_provider();

// Outcome of scoring one test utterance under one classifier.
struct TrialRecord {
  std::string true_speaker;
  int utterance_index = 0;
  std::string predicted;
  std::map<std::string, double> scores;
};

// Everything evaluate() learned about one classifier configuration.
struct ClassifierResult {
  std::string label;
  ClassifierConfig config;
  std::vector<TrialRecord> trials;  // ordered by (speaker id, utterance idx)
  double accuracy = 0.0;            // percent, 0..100
  std::map<std::pair<std::string, std::string>, int> confusion;
};

struct EvaluationReport {
  std::vector<ClassifierResult> classifiers;
  // Present when evaluate() ran with combine=true: the ensemble decision
  // from fusing every classifier's per-speaker scores, utterance by
  // utterance.
  std::optional<ClassifierResult> combined;
};

// Short deterministic description of a configuration, used as the CSV row
// label, e.g. "ld-1 wpct mfcc20+d win0.025 band0-nyq trim0/0 beta0.2".
std::string classifier_label(const ClassifierConfig& config);

// Trains every speaker and identifies every test utterance, once per
// classifier configuration. Seeds are derived per speaker and per utterance
// from the configs' seeds, so results are reproducible and independent of
// evaluation order.
EvaluationReport evaluate(const CorpusManifest& manifest,
                          const SplitSpec& split_spec,
                          const std::vector<ClassifierConfig>& configs,
                          bool combine, const FeatureProvider& provider,
                          FusionMode fusion_mode = FusionMode::kStandardized);

// Which feature family a sweep point uses.
enum class FeatureSet {
  kBase,       // whatever the base config says
  kMfccDelta,  // 20 MFCCs + 20 delta MFCCs (dim 40)
  kMfccOnly,   // 39 MFCCs from a 40-filter bank (dim 39)
};

std::string feature_set_name(FeatureSet fs);  // "base", "fs1", "fs2"
FeatureSet parse_feature_set(const std::string& name);

// Cartesian sweep axes. Empty axes collapse to the base config's value, so
// an all-empty grid is a single-point sweep.
struct SweepGrid {
  std::vector<double> window_sizes;                   // seconds
  std::vector<std::pair<double, double>> freq_bands;  // (min_freq, max_freq)
  std::vector<Measure> measures;
  std::vector<Estimator> estimators;
  std::vector<TrimSpec> trims;
  std::vector<double> betas;
  std::vector<bool> use_pct_values;
  std::vector<FeatureSet> feature_sets;
};

// The ensemble row for one (measure, estimator, use_pct, feature set)
// column group: scores fused across that group's experiments.
struct CombinedRow {
  Measure measure = Measure::kLD;
  Estimator estimator = Estimator::kTypeI;
  bool use_pct = false;
  std::string feature_tag;
  std::string label;
  double accuracy = 0.0;
  std::vector<TrialRecord> trials;
};

struct SweepOutcome {
  EvaluationReport report;           // one ClassifierResult per grid point
  std::vector<CombinedRow> combined;  // one row per column group
};

// Expands the grid over the base config, evaluates every point, and fuses
// each column group's scores into its Combined row. Grid points differing
// only in window size / frequency band / trimming / beta form the
// experiment rows of one column group.
SweepOutcome sweep(const CorpusManifest& manifest, const SplitSpec& split_spec,
                   const ClassifierConfig& base_config, const SweepGrid& grid,
                   const FeatureProvider& provider,
                   FusionMode fusion_mode = FusionMode::kStandardized);

// CSV report: header plus one row per classifier and one per Combined row.
// Columns: kind,label,window_size,min_freq,max_freq,features,measure,
// estimator,use_pct,trim_low,trim_high,beta,accuracy.
std::string report_csv(const SweepOutcome& outcome);
std::string report_csv(const EvaluationReport& report);

// Fixed-width text table: one block per (measure, estimator), experiments
// as rows (window/band/trim/beta), accuracy columns split by rotation
// (WOPCT/WPCT) and feature set, and a final Combined row per column.
std::string report_table(const SweepOutcome& outcome);

// Writes text to `path` atomically (temp file + rename).
void write_text_file(const std::string& path, const std::string& text);

}  // namespace disparity
