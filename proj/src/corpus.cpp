#include "disparity/corpus.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "disparity/audio.hpp"
#include "disparity/errors.hpp"
#include "disparity/parallel.hpp"
#include "disparity/rng.hpp"

namespace disparity {
namespace {

std::string format_g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string format_accuracy(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

// Feature-family tag independent of window/band, e.g. "mfcc20+d".
std::string feature_tag(const FeatureConfig& f) {
  std::string tag = "mfcc" + std::to_string(f.num_ceps);
  if (f.use_delta) tag += "+d";
  return tag;
}

FeatureMatrix features_for(const ManifestEntry& entry,
                           const FeatureConfig& config,
                           const FeatureProvider& provider) {
  try {
    return provider(entry, config);
  } catch (const std::exception& e) {
    throw DataError("feature extraction failed for speaker '" +
                    entry.speaker_id + "' utterance " +
                    std::to_string(entry.utterance_index) + " ('" +
                    entry.path + "'): " + e.what());
  }
}

FeatureMatrix concat_features(const std::vector<ManifestEntry>& entries,
                              const FeatureConfig& config,
                              const FeatureProvider& provider) {
  std::vector<FeatureMatrix> parts;
  parts.reserve(entries.size());
  int total_frames = 0;
  for (const auto& entry : entries) {
    parts.push_back(features_for(entry, config, provider));
    total_frames += parts.back().num_frames();
    if (parts.back().dim() != parts.front().dim() ||
        parts.back().config_fingerprint != parts.front().config_fingerprint) {
      throw DataError("utterances of speaker '" + entries.front().speaker_id +
                      "' disagree in feature shape or configuration");
    }
  }
  FeatureMatrix out;
  out.config_fingerprint = parts.front().config_fingerprint;
  out.values.resize(parts.front().dim(), total_frames);
  int col = 0;
  for (const auto& part : parts) {
    out.values.middleCols(col, part.num_frames()) = part.values;
    col += part.num_frames();
  }
  return out;
}

void finalize_result(ClassifierResult& result) {
  int correct = 0;
  result.confusion.clear();
  for (const auto& trial : result.trials) {
    if (trial.predicted == trial.true_speaker) ++correct;
    ++result.confusion[{trial.true_speaker, trial.predicted}];
  }
  result.accuracy = result.trials.empty()
                        ? 0.0
                        : 100.0 * correct /
                              static_cast<double>(result.trials.size());
}

// Fuses aligned trial lists from several classifiers into one trial list.
std::vector<TrialRecord> fuse_trials(
    const std::vector<const std::vector<TrialRecord>*>& sources,
    FusionMode mode) {
  const size_t n = sources.front()->size();
  std::vector<TrialRecord> fused;
  fused.reserve(n);
  for (size_t t = 0; t < n; ++t) {
    std::vector<std::map<std::string, double>> maps;
    maps.reserve(sources.size());
    for (const auto* trials : sources) maps.push_back((*trials)[t].scores);
    TrialRecord rec;
    rec.true_speaker = (*sources.front())[t].true_speaker;
    rec.utterance_index = (*sources.front())[t].utterance_index;
    rec.scores = fuse_scores(maps, mode);
    rec.predicted = best_speaker(rec.scores);
    fused.push_back(std::move(rec));
  }
  return fused;
}

void append_csv_row(std::string& out, const std::string& kind,
                    const std::string& label, const ClassifierConfig* config,
                    double accuracy) {
  out += kind;
  out += ',' + label + ',';
  if (config != nullptr) {
    const FeatureConfig& f = config->features;
    out += format_g(f.window_size) + ',' + format_g(f.min_freq) + ',' +
           format_g(f.max_freq) + ',' + feature_tag(f) + ',' +
           measure_name(config->scoring.measure) + ',' +
           estimator_name(config->scoring.estimator) + ',' +
           (config->use_pct ? "1," : "0,") +
           format_g(config->scoring.trim.low_frac) + ',' +
           format_g(config->scoring.trim.high_frac) + ',' +
           format_g(config->scoring.beta) + ',';
  } else {
    out += ",,,,,,,,,,";
  }
  out += format_accuracy(accuracy);
  out += '\n';
}

constexpr char kCsvHeader[] =
    "kind,label,window_size,min_freq,max_freq,features,measure,estimator,"
    "use_pct,trim_low,trim_high,beta,accuracy\n";

}  // namespace

CorpusManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest '" + path + "'");
  const std::filesystem::path base_dir =
      std::filesystem::path(path).parent_path();

  CorpusManifest manifest;
  std::set<std::pair<std::string, int>> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' ||
                             line.back() == '\t')) {
      line.pop_back();
    }
    if (line.empty()) continue;

    std::vector<std::string> fields;
    size_t begin = 0;
    while (true) {
      const size_t tab = line.find('\t', begin);
      fields.push_back(line.substr(begin, tab - begin));
      if (tab == std::string::npos) break;
      begin = tab + 1;
    }
    if (fields.size() != 3 || fields[0].empty() || fields[2].empty()) {
      throw DataError("manifest line " + std::to_string(line_no) +
                      " is not 'speaker<TAB>index<TAB>path'");
    }
    ManifestEntry entry;
    entry.speaker_id = fields[0];
    try {
      size_t used = 0;
      entry.utterance_index = std::stoi(fields[1], &used);
      if (used != fields[1].size() || entry.utterance_index < 0) {
        throw std::invalid_argument(fields[1]);
      }
    } catch (const std::exception&) {
      throw DataError("manifest line " + std::to_string(line_no) +
                      ": bad utterance index '" + fields[1] + "'");
    }
    std::filesystem::path p(fields[2]);
    entry.path = p.is_absolute() ? p.string() : (base_dir / p).string();

    if (!seen.insert({entry.speaker_id, entry.utterance_index}).second) {
      throw DataError("manifest line " + std::to_string(line_no) +
                      ": duplicate utterance (" + entry.speaker_id + ", " +
                      std::to_string(entry.utterance_index) + ")");
    }
    manifest.entries.push_back(std::move(entry));
  }

  if (manifest.entries.empty()) {
    throw DataError("manifest '" + path + "' has no entries");
  }
  std::map<std::string, int> counts;
  for (const auto& entry : manifest.entries) ++counts[entry.speaker_id];
  for (const auto& [id, count] : counts) {
    if (count < 2) {
      throw DataError("speaker '" + id + "' has only " +
                      std::to_string(count) +
                      " utterance; at least 2 are required");
    }
  }
  return manifest;
}

void SplitSpec::validate() const {
  if (train_count < 1 || test_count < 1) {
    throw DataError("split needs train_count >= 1 and test_count >= 1");
  }
}

CorpusSplit split_corpus(const CorpusManifest& manifest,
                         const SplitSpec& spec) {
  spec.validate();
  std::map<std::string, std::vector<ManifestEntry>> by_speaker;
  for (const auto& entry : manifest.entries) {
    by_speaker[entry.speaker_id].push_back(entry);
  }
  CorpusSplit split;
  for (auto& [id, entries] : by_speaker) {
    std::sort(entries.begin(), entries.end(),
              [](const ManifestEntry& a, const ManifestEntry& b) {
                return a.utterance_index < b.utterance_index;
              });
    for (size_t i = 1; i < entries.size(); ++i) {
      if (entries[i].utterance_index == entries[i - 1].utterance_index) {
        throw DataError("speaker '" + id + "' repeats utterance index " +
                        std::to_string(entries[i].utterance_index));
      }
    }
    const size_t needed =
        static_cast<size_t>(spec.train_count) + spec.test_count;
    if (entries.size() < needed) {
      throw DataError("speaker '" + id + "' has " +
                      std::to_string(entries.size()) +
                      " utterances but the split needs " +
                      std::to_string(needed));
    }
    split.train[id].assign(entries.begin(), entries.begin() + spec.train_count);
    split.test[id].assign(entries.begin() + spec.train_count,
                          entries.begin() + static_cast<long>(needed));
  }
  return split;
}

FeatureProvider wav_feature_provider() {
  return [](const ManifestEntry& entry, const FeatureConfig& config) {
    return build_features(load_wav(entry.path), config);
  };
}

std::string classifier_label(const ClassifierConfig& config) {
  const FeatureConfig& f = config.features;
  std::string label = measure_name(config.scoring.measure) + "-" +
                      estimator_name(config.scoring.estimator);
  label += config.use_pct ? " wpct" : " wopct";
  label += ' ' + feature_tag(f);
  label += " win" + format_g(f.window_size);
  label += " band" + format_g(f.min_freq) + "-" +
           (f.max_freq == 0.0 ? std::string("nyq") : format_g(f.max_freq));
  label += " trim" + format_g(config.scoring.trim.low_frac) + "/" +
           format_g(config.scoring.trim.high_frac);
  label += " beta" + format_g(config.scoring.beta);
  return label;
}

EvaluationReport evaluate(const CorpusManifest& manifest,
                          const SplitSpec& split_spec,
                          const std::vector<ClassifierConfig>& configs,
                          bool combine, const FeatureProvider& provider,
                          FusionMode fusion_mode) {
  if (configs.empty()) {
    throw DataError("need at least one classifier configuration");
  }
  for (const auto& config : configs) config.validate();
  const CorpusSplit split = split_corpus(manifest, split_spec);

  std::vector<const ManifestEntry*> test_entries;
  for (const auto& [id, entries] : split.test) {
    for (const auto& entry : entries) test_entries.push_back(&entry);
  }

  EvaluationReport report;
  for (const auto& config : configs) {
    ClassifierResult result;
    result.config = config;
    result.label = classifier_label(config);

    // Train every speaker (concurrently; each fit is single-threaded).
    std::vector<std::string> ids;
    ids.reserve(split.train.size());
    for (const auto& [id, entries] : split.train) ids.push_back(id);
    std::vector<std::optional<SpeakerModel>> fitted(ids.size());
    parallel_for(static_cast<int>(ids.size()), [&](int i) {
      FeatureMatrix features =
          concat_features(split.train.at(ids[i]), config.features, provider);
      EmConfig em = config.em_speaker;
      em.seed = derive_seed(em.seed, "speaker:" + ids[i]);
      fitted[i] = train_speaker(features, em, config.use_pct);
    });
    std::map<std::string, SpeakerModel> models;
    for (size_t i = 0; i < ids.size(); ++i) {
      models.emplace(ids[i], std::move(*fitted[i]));
    }

    // Identify every test utterance (concurrently; identification of one
    // utterance then runs serially on its worker).
    result.trials.resize(test_entries.size());
    parallel_for(static_cast<int>(test_entries.size()), [&](int i) {
      const ManifestEntry& entry = *test_entries[i];
      const FeatureMatrix features =
          features_for(entry, config.features, provider);
      EmConfig em = config.em_test;
      em.seed = derive_seed(em.seed, "test:" + entry.speaker_id + ":" +
                                         std::to_string(entry.utterance_index));
      IdentificationResult id_result =
          identify(models, features, em, config.scoring);
      result.trials[i] =
          TrialRecord{entry.speaker_id, entry.utterance_index,
                      std::move(id_result.best_speaker),
                      std::move(id_result.scores)};
    });
    finalize_result(result);
    report.classifiers.push_back(std::move(result));
  }

  if (combine) {
    std::vector<const std::vector<TrialRecord>*> sources;
    sources.reserve(report.classifiers.size());
    for (const auto& classifier : report.classifiers) {
      sources.push_back(&classifier.trials);
    }
    ClassifierResult combined;
    combined.label = "Combined";
    combined.trials = fuse_trials(sources, fusion_mode);
    finalize_result(combined);
    report.combined = std::move(combined);
  }
  return report;
}

std::string feature_set_name(FeatureSet fs) {
  switch (fs) {
    case FeatureSet::kBase:
      return "base";
    case FeatureSet::kMfccDelta:
      return "fs1";
    case FeatureSet::kMfccOnly:
      return "fs2";
  }
  throw DataError("unknown feature set");
}

FeatureSet parse_feature_set(const std::string& name) {
  std::string s = name;
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (s == "base") return FeatureSet::kBase;
  if (s == "fs1" || s == "fs-i" || s == "fsi") return FeatureSet::kMfccDelta;
  if (s == "fs2" || s == "fs-ii" || s == "fsii") return FeatureSet::kMfccOnly;
  throw DataError("unknown feature set '" + name +
                  "' (expected base, fs1, or fs2)");
}

namespace {

void apply_feature_set(FeatureConfig& f, FeatureSet fs) {
  switch (fs) {
    case FeatureSet::kBase:
      return;
    case FeatureSet::kMfccDelta:  // 20 MFCCs + 20 deltas
      f.num_ceps = 20;
      f.use_delta = true;
      break;
    case FeatureSet::kMfccOnly:  // 39 MFCCs, no deltas
      f.num_ceps = 39;
      f.use_delta = false;
      break;
  }
  const int min_filters = f.num_ceps + (f.include_c0 ? 0 : 1);
  f.num_filters = std::max(f.num_filters, min_filters);
}

}  // namespace

SweepOutcome sweep(const CorpusManifest& manifest, const SplitSpec& split_spec,
                   const ClassifierConfig& base_config, const SweepGrid& grid,
                   const FeatureProvider& provider, FusionMode fusion_mode) {
  const auto windows = grid.window_sizes.empty()
                           ? std::vector<double>{base_config.features.window_size}
                           : grid.window_sizes;
  const auto bands =
      grid.freq_bands.empty()
          ? std::vector<std::pair<double, double>>{{base_config.features.min_freq,
                                                    base_config.features.max_freq}}
          : grid.freq_bands;
  const auto trims = grid.trims.empty()
                         ? std::vector<TrimSpec>{base_config.scoring.trim}
                         : grid.trims;
  const auto betas = grid.betas.empty()
                         ? std::vector<double>{base_config.scoring.beta}
                         : grid.betas;
  const auto measures = grid.measures.empty()
                            ? std::vector<Measure>{base_config.scoring.measure}
                            : grid.measures;
  const auto estimators =
      grid.estimators.empty()
          ? std::vector<Estimator>{base_config.scoring.estimator}
          : grid.estimators;
  const auto pcts = grid.use_pct_values.empty()
                        ? std::vector<bool>{base_config.use_pct}
                        : grid.use_pct_values;
  const auto fsets = grid.feature_sets.empty()
                         ? std::vector<FeatureSet>{FeatureSet::kBase}
                         : grid.feature_sets;

  // Experiment axes (rows) outermost, column axes innermost, so the report
  // lists each experiment's column variants together.
  std::vector<ClassifierConfig> configs;
  for (double window : windows) {
    for (const auto& band : bands) {
      for (const TrimSpec& trim : trims) {
        for (double beta : betas) {
          for (Measure measure : measures) {
            for (Estimator estimator : estimators) {
              for (bool use_pct : pcts) {
                for (FeatureSet fs : fsets) {
                  ClassifierConfig c = base_config;
                  c.features.window_size = window;
                  c.features.min_freq = band.first;
                  c.features.max_freq = band.second;
                  apply_feature_set(c.features, fs);
                  c.scoring.measure = measure;
                  c.scoring.estimator = estimator;
                  c.scoring.trim = trim;
                  c.scoring.beta = beta;
                  c.use_pct = use_pct;
                  configs.push_back(std::move(c));
                }
              }
            }
          }
        }
      }
    }
  }

  SweepOutcome outcome;
  outcome.report =
      evaluate(manifest, split_spec, configs, false, provider, fusion_mode);

  // Column groups: same measure/estimator/rotation/feature family, varying
  // only in the experiment axes. Fuse each group's scores.
  std::vector<std::tuple<Measure, Estimator, bool, std::string>> group_order;
  std::map<std::tuple<Measure, Estimator, bool, std::string>,
           std::vector<const ClassifierResult*>>
      groups;
  for (const auto& classifier : outcome.report.classifiers) {
    const auto key = std::make_tuple(
        classifier.config.scoring.measure, classifier.config.scoring.estimator,
        classifier.config.use_pct, feature_tag(classifier.config.features));
    if (groups.find(key) == groups.end()) group_order.push_back(key);
    groups[key].push_back(&classifier);
  }
  for (const auto& key : group_order) {
    const auto& members = groups[key];
    std::vector<const std::vector<TrialRecord>*> sources;
    sources.reserve(members.size());
    for (const auto* member : members) sources.push_back(&member->trials);

    CombinedRow row;
    row.measure = std::get<0>(key);
    row.estimator = std::get<1>(key);
    row.use_pct = std::get<2>(key);
    row.feature_tag = std::get<3>(key);
    row.label = "Combined " + measure_name(row.measure) + "-" +
                estimator_name(row.estimator) +
                (row.use_pct ? " wpct " : " wopct ") + row.feature_tag;
    row.trials = fuse_trials(sources, fusion_mode);
    int correct = 0;
    for (const auto& trial : row.trials) {
      if (trial.predicted == trial.true_speaker) ++correct;
    }
    row.accuracy = row.trials.empty()
                       ? 0.0
                       : 100.0 * correct /
                             static_cast<double>(row.trials.size());
    outcome.combined.push_back(std::move(row));
  }
  return outcome;
}

std::string report_csv(const EvaluationReport& report) {
  std::string out = kCsvHeader;
  for (const auto& classifier : report.classifiers) {
    append_csv_row(out, "individual", classifier.label, &classifier.config,
                   classifier.accuracy);
  }
  if (report.combined.has_value()) {
    append_csv_row(out, "combined", report.combined->label, nullptr,
                   report.combined->accuracy);
  }
  return out;
}

std::string report_csv(const SweepOutcome& outcome) {
  std::string out = kCsvHeader;
  for (const auto& classifier : outcome.report.classifiers) {
    append_csv_row(out, "individual", classifier.label, &classifier.config,
                   classifier.accuracy);
  }
  for (const auto& row : outcome.combined) {
    append_csv_row(out, "combined", row.label, nullptr, row.accuracy);
  }
  return out;
}

std::string report_table(const SweepOutcome& outcome) {
  // Blocks by (measure, estimator); columns by (use_pct, feature tag);
  // rows by experiment (window, band, trim, beta).
  struct Cell {
    std::string experiment;
    bool use_pct;
    std::string feature;
    double accuracy;
  };
  std::vector<std::pair<Measure, Estimator>> block_order;
  std::map<std::pair<Measure, Estimator>, std::vector<Cell>> blocks;
  std::vector<std::string> experiment_order;

  const auto experiment_key = [](const ClassifierConfig& c) {
    const FeatureConfig& f = c.features;
    return "win" + format_g(f.window_size) + "  band" + format_g(f.min_freq) +
           "-" + (f.max_freq == 0.0 ? std::string("nyq") : format_g(f.max_freq)) +
           "  trim" + format_g(c.scoring.trim.low_frac) + "/" +
           format_g(c.scoring.trim.high_frac) + "  beta" +
           format_g(c.scoring.beta);
  };

  for (const auto& classifier : outcome.report.classifiers) {
    const auto block_key = std::make_pair(classifier.config.scoring.measure,
                                          classifier.config.scoring.estimator);
    if (blocks.find(block_key) == blocks.end()) block_order.push_back(block_key);
    const std::string exp = experiment_key(classifier.config);
    if (std::find(experiment_order.begin(), experiment_order.end(), exp) ==
        experiment_order.end()) {
      experiment_order.push_back(exp);
    }
    blocks[block_key].push_back(Cell{exp, classifier.config.use_pct,
                                     feature_tag(classifier.config.features),
                                     classifier.accuracy});
  }

  std::ostringstream out;
  for (const auto& block_key : block_order) {
    const auto& cells = blocks[block_key];

    std::vector<std::pair<bool, std::string>> columns;
    for (const auto& cell : cells) {
      const auto col = std::make_pair(cell.use_pct, cell.feature);
      if (std::find(columns.begin(), columns.end(), col) == columns.end()) {
        columns.push_back(col);
      }
    }
    std::sort(columns.begin(), columns.end(),
              [](const auto& a, const auto& b) {
                if (a.first != b.first) return !a.first;  // WOPCT before WPCT
                return a.second < b.second;
              });

    size_t exp_width = std::string("experiment").size();
    for (const auto& exp : experiment_order) {
      exp_width = std::max(exp_width, exp.size());
    }

    out << "measure " << measure_name(block_key.first) << ", type "
        << estimator_name(block_key.second) << "\n";
    out << "  " << std::string(exp_width + 4, ' ');
    for (const auto& col : columns) {
      std::string head = (col.first ? "WPCT " : "WOPCT ") + col.second;
      out << "  " << head;
    }
    out << "\n";

    const auto emit_row = [&](const std::string& name,
                              const std::function<std::optional<double>(
                                  const std::pair<bool, std::string>&)>& value) {
      out << "  " << name << std::string(exp_width + 4 - name.size(), ' ');
      for (const auto& col : columns) {
        const std::string head =
            (col.first ? "WPCT " : "WOPCT ") + col.second;
        const auto v = value(col);
        std::string text = v.has_value() ? format_accuracy(*v) : "-";
        const size_t cell_width = std::max(head.size(), text.size());
        out << "  " << std::string(cell_width - text.size(), ' ') << text;
      }
      out << "\n";
    };

    for (const auto& exp : experiment_order) {
      bool present = false;
      for (const auto& cell : cells) {
        if (cell.experiment == exp) present = true;
      }
      if (!present) continue;
      emit_row(exp, [&](const std::pair<bool, std::string>& col)
                        -> std::optional<double> {
        for (const auto& cell : cells) {
          if (cell.experiment == exp && cell.use_pct == col.first &&
              cell.feature == col.second) {
            return cell.accuracy;
          }
        }
        return std::nullopt;
      });
    }

    emit_row("Combined", [&](const std::pair<bool, std::string>& col)
                             -> std::optional<double> {
      for (const auto& row : outcome.combined) {
        if (row.measure == block_key.first &&
            row.estimator == block_key.second && row.use_pct == col.first &&
            row.feature_tag == col.second) {
          return row.accuracy;
        }
      }
      return std::nullopt;
    });
    out << "\n";
  }
  return out.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open '" + tmp + "' for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw DataError("failed writing '" + tmp + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw DataError("cannot move output into place at '" + path + "'");
  }
}

}  // namespace disparity
