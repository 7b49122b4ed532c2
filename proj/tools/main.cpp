// disparity-id: command-line front end for the speaker-identification
// toolkit. Subcommands: train, identify, evaluate, sweep, raf-curves,
// synth, inspect. Exit codes: 0 success, 2 usage error, 3 data error,
// 4 numeric failure.

#include <algorithm>
#include <cstdio>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "disparity/archive.hpp"
#include "disparity/audio.hpp"
#include "disparity/config.hpp"
#include "disparity/corpus.hpp"
#include "disparity/divergence.hpp"
#include "disparity/errors.hpp"
#include "disparity/identify.hpp"
#include "disparity/parallel.hpp"
#include "disparity/rng.hpp"
#include "disparity/synth.hpp"

namespace {

using namespace disparity;

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

// A bad flag combination or value discovered after CLI11's own parsing;
// exits with the usage code, like any other malformed invocation.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string format_g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

// The flags shared by every subcommand that builds a classifier
// configuration. Precedence: command line > config file > defaults.
struct ConfigFlags {
  std::string config_path;
  std::string measure;
  std::string estimator;
  double trim_low = 0.0;
  double trim_high = 0.0;
  double beta = 0.0;
  std::uint64_t seed = 0;
  bool pct = false;
  bool no_pct = false;

  CLI::Option* config_opt = nullptr;
  CLI::Option* measure_opt = nullptr;
  CLI::Option* estimator_opt = nullptr;
  CLI::Option* trim_low_opt = nullptr;
  CLI::Option* trim_high_opt = nullptr;
  CLI::Option* beta_opt = nullptr;
  CLI::Option* seed_opt = nullptr;

  void attach(CLI::App* cmd, bool with_pct) {
    config_opt = cmd->add_option("--config", config_path,
                                 "key = value configuration file")
                     ->check(CLI::ExistingFile);
    measure_opt = cmd->add_option("--measure", measure,
                                  "disparity measure: ld, hd, or pcs")
                      ->check(CLI::IsMember({"ld", "hd", "pcs"}));
    estimator_opt = cmd->add_option("--estimator", estimator,
                                    "estimator type: 1 or 2")
                        ->check(CLI::IsMember({"1", "2"}));
    trim_low_opt = cmd->add_option("--trim-low", trim_low,
                                   "fraction of smallest residuals trimmed")
                       ->check(CLI::Range(0.0, 0.9999));
    trim_high_opt = cmd->add_option("--trim-high", trim_high,
                                    "fraction of largest residuals trimmed")
                        ->check(CLI::Range(0.0, 0.9999));
    beta_opt = cmd->add_option("--beta", beta,
                               "residual rescaling exponent (> 0)")
                   ->check(CLI::PositiveNumber);
    seed_opt = cmd->add_option("--seed", seed,
                               "base RNG seed (sets both EM seeds)");
    if (with_pct) {
      cmd->add_flag("--pct", pct, "enable per-speaker principal rotations");
      cmd->add_flag("--no-pct", no_pct, "disable principal rotations");
    }
  }

  // Applies only the flags that were actually given.
  void apply(ClassifierConfig& config) const {
    if (measure_opt->count() > 0) config.scoring.measure = parse_measure(measure);
    if (estimator_opt->count() > 0) {
      config.scoring.estimator = parse_estimator(estimator);
    }
    if (trim_low_opt->count() > 0) config.scoring.trim.low_frac = trim_low;
    if (trim_high_opt->count() > 0) config.scoring.trim.high_frac = trim_high;
    if (beta_opt->count() > 0) config.scoring.beta = beta;
    if (seed_opt->count() > 0) {
      config.em_speaker.seed = seed;
      config.em_test.seed = seed;
    }
    if (pct && no_pct) {
      throw UsageError("--pct and --no-pct are mutually exclusive");
    }
    if (pct) config.use_pct = true;
    if (no_pct) config.use_pct = false;
  }

  ClassifierConfig build() const {
    ClassifierConfig config;
    if (config_opt->count() > 0) config = load_config_file(config_path);
    apply(config);
    config.validate();
    return config;
  }
};

FeatureMatrix concat_utterance_features(
    const std::vector<ManifestEntry>& entries, const FeatureConfig& config,
    long* frames_out, double* seconds_out) {
  std::vector<FeatureMatrix> parts;
  long frames = 0;
  double seconds = 0.0;
  for (const auto& entry : entries) {
    const AudioSignal signal = load_wav(entry.path);
    seconds += signal.duration_seconds();
    parts.push_back(build_features(signal, config));
    frames += parts.back().num_frames();
  }
  FeatureMatrix out;
  out.config_fingerprint = parts.front().config_fingerprint;
  out.values.resize(parts.front().dim(), frames);
  int col = 0;
  for (const auto& part : parts) {
    out.values.middleCols(col, part.num_frames()) = part.values;
    col += part.num_frames();
  }
  if (frames_out != nullptr) *frames_out = frames;
  if (seconds_out != nullptr) *seconds_out = seconds;
  return out;
}

int cmd_train(const std::string& manifest_path, const std::string& out_path,
              const ConfigFlags& flags) {
  const ClassifierConfig config = flags.build();
  const CorpusManifest manifest = load_manifest(manifest_path);

  std::map<std::string, std::vector<ManifestEntry>> by_speaker;
  for (const auto& entry : manifest.entries) {
    by_speaker[entry.speaker_id].push_back(entry);
  }
  std::vector<std::string> ids;
  for (auto& [id, entries] : by_speaker) {
    std::sort(entries.begin(), entries.end(),
              [](const ManifestEntry& a, const ManifestEntry& b) {
                return a.utterance_index < b.utterance_index;
              });
    ids.push_back(id);
  }

  struct Fit {
    std::optional<SpeakerModel> model;
    long frames = 0;
    double seconds = 0.0;
  };
  std::vector<Fit> fits(ids.size());
  parallel_for(static_cast<int>(ids.size()), [&](int i) {
    Fit& fit = fits[i];
    const FeatureMatrix features = concat_utterance_features(
        by_speaker.at(ids[i]), config.features, &fit.frames, &fit.seconds);
    EmConfig em = config.em_speaker;
    em.seed = derive_seed(em.seed, "speaker:" + ids[i]);
    fit.model = train_speaker(features, em, config.use_pct);
  });

  ModelArchive archive;
  archive.feature_config = config.features;
  archive.em_config = config.em_test;
  archive.use_pct = config.use_pct;
  long total_frames = 0;
  double total_seconds = 0.0;
  for (size_t i = 0; i < ids.size(); ++i) {
    archive.speakers.emplace(ids[i], std::move(*fits[i].model));
    total_frames += fits[i].frames;
    total_seconds += fits[i].seconds;
  }
  save_archive(archive, out_path);

  std::printf("trained %zu speakers from %zu utterances (%ld frames, %.1f s of audio)\n",
              ids.size(), manifest.entries.size(), total_frames, total_seconds);
  std::printf("archive written to %s\n", out_path.c_str());
  return 0;
}

int cmd_identify(const std::string& archive_path, const std::string& wav_path,
                 const ConfigFlags& flags) {
  const ModelArchive archive = load_archive(archive_path);

  ClassifierConfig config;
  config.features = archive.feature_config;
  config.em_test = archive.em_config;
  config.use_pct = archive.use_pct;
  if (flags.config_opt->count() > 0) {
    const ClassifierConfig from_file = load_config_file(flags.config_path, config);
    if (from_file.features.fingerprint() != archive.feature_config.fingerprint()) {
      throw DataError(
          "config file changes feature settings; the archive's feature "
          "configuration is authoritative for identification");
    }
    if (from_file.use_pct != archive.use_pct) {
      throw DataError("config file changes use_pct, which is baked into the archive");
    }
    config = from_file;
  }
  flags.apply(config);
  config.validate();

  const AudioSignal signal = load_wav(wav_path);
  const FeatureMatrix features = build_features(signal, config.features);
  const IdentificationResult result =
      identify(archive.speakers, features, config.em_test, config.scoring);

  std::vector<std::pair<std::string, double>> ranked(result.scores.begin(),
                                                     result.scores.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  std::printf("scores (%s type %s, %s, trim %s/%s):\n",
              measure_name(config.scoring.measure).c_str(),
              estimator_name(config.scoring.estimator).c_str(),
              config.use_pct ? "wpct" : "wopct",
              format_g(config.scoring.trim.low_frac).c_str(),
              format_g(config.scoring.trim.high_frac).c_str());
  int rank = 1;
  for (const auto& [id, score] : ranked) {
    std::printf("%3d. %-20s %.6f\n", rank++, id.c_str(), score);
  }
  std::printf("Decision: %s\n", result.best_speaker.c_str());
  return 0;
}

std::string evaluation_summary(const EvaluationReport& report) {
  std::string text;
  const auto add = [&text](const ClassifierResult& result) {
    int correct = 0;
    for (const auto& trial : result.trials) {
      if (trial.predicted == trial.true_speaker) ++correct;
    }
    char line[160];
    std::snprintf(line, sizeof line, "%s\n  accuracy %.3f (%d/%zu correct)\n",
                  result.label.c_str(), result.accuracy, correct,
                  result.trials.size());
    text += line;
  };
  for (const auto& classifier : report.classifiers) add(classifier);
  if (report.combined.has_value()) add(*report.combined);
  return text;
}

int cmd_evaluate(const std::string& manifest_path, int train_count,
                 int test_count, bool combine, const std::string& fusion_name,
                 const std::string& out_prefix, const ConfigFlags& flags) {
  const ClassifierConfig config = flags.build();
  const CorpusManifest manifest = load_manifest(manifest_path);
  const SplitSpec split{train_count, test_count};

  const EvaluationReport report =
      evaluate(manifest, split, {config}, combine, wav_feature_provider(),
               parse_fusion_mode(fusion_name));

  write_text_file(out_prefix + ".csv", report_csv(report));
  const std::string summary = evaluation_summary(report);
  write_text_file(out_prefix + ".txt", summary);
  std::fputs(summary.c_str(), stdout);
  std::printf("reports written to %s.csv and %s.txt\n", out_prefix.c_str(),
              out_prefix.c_str());
  return 0;
}

std::pair<double, double> parse_pair(const std::string& text,
                                     const std::string& what) {
  const size_t colon = text.find(':');
  if (colon == std::string::npos) {
    throw UsageError(what + " must be two numbers separated by ':', got '" +
                     text + "'");
  }
  try {
    return {parse_double_value(text.substr(0, colon)),
            parse_double_value(text.substr(colon + 1))};
  } catch (const DataError& e) {
    throw UsageError(std::string(e.what()) + " in " + what);
  }
}

int cmd_sweep(const std::string& manifest_path, int train_count,
              int test_count, const std::vector<double>& windows,
              const std::vector<std::string>& bands,
              const std::vector<std::string>& measures,
              const std::vector<std::string>& estimators,
              const std::vector<std::string>& trims,
              const std::vector<double>& betas,
              const std::vector<std::string>& pct_values,
              const std::vector<std::string>& feature_sets,
              const std::string& fusion_name, const std::string& out_prefix,
              const ConfigFlags& flags) {
  SweepGrid grid;
  grid.window_sizes = windows;
  for (const auto& band : bands) {
    grid.freq_bands.push_back(parse_pair(band, "--bands entry"));
  }
  try {
    for (const auto& m : measures) grid.measures.push_back(parse_measure(m));
    for (const auto& e : estimators) {
      grid.estimators.push_back(parse_estimator(e));
    }
    for (const auto& fs : feature_sets) {
      grid.feature_sets.push_back(parse_feature_set(fs));
    }
    for (const auto& p : pct_values) {
      grid.use_pct_values.push_back(parse_bool_value(p));
    }
  } catch (const DataError& e) {
    throw UsageError(e.what());
  }
  for (const auto& trim : trims) {
    const auto [low, high] = parse_pair(trim, "--trims entry");
    TrimSpec spec;
    spec.low_frac = low;
    spec.high_frac = high;
    try {
      spec.validate();
    } catch (const DataError& e) {
      throw UsageError("--trims entry '" + trim + "': " + e.what());
    }
    grid.trims.push_back(spec);
  }
  grid.betas = betas;

  if (grid.window_sizes.empty() && grid.freq_bands.empty() &&
      grid.measures.empty() && grid.estimators.empty() && grid.trims.empty() &&
      grid.betas.empty() && grid.use_pct_values.empty() &&
      grid.feature_sets.empty()) {
    throw UsageError(
        "sweep needs at least one grid axis (--windows, --bands, --measures, "
        "--estimators, --trims, --betas, --pct-values, --feature-sets); for a "
        "single configuration use evaluate");
  }

  const ClassifierConfig base = flags.build();
  const CorpusManifest manifest = load_manifest(manifest_path);
  const SplitSpec split{train_count, test_count};

  const SweepOutcome outcome = sweep(manifest, split, base, grid,
                                     wav_feature_provider(),
                                     parse_fusion_mode(fusion_name));

  write_text_file(out_prefix + ".csv", report_csv(outcome));
  const std::string table = report_table(outcome);
  write_text_file(out_prefix + ".txt", table);
  std::fputs(table.c_str(), stdout);
  std::printf("reports written to %s.csv and %s.txt\n", out_prefix.c_str(),
              out_prefix.c_str());
  return 0;
}

int cmd_raf_curves(const std::string& out_path, double start, double stop,
                   double step) {
  GridSpec grid;
  grid.start = start;
  grid.stop = stop;
  grid.step = step;
  std::vector<double> points;
  try {
    points = grid.points();
  } catch (const DataError& e) {
    throw UsageError(e.what());
  }
  write_text_file(out_path, raf_curve_csv(points));
  std::printf("wrote %zu rows to %s\n", points.size(), out_path.c_str());
  return 0;
}

int cmd_synth(const std::string& out_dir, int speakers, int utterances,
              int clean_utterances, double seconds, int rate,
              double contamination, std::uint64_t seed) {
  WavSynthSpec spec;
  spec.num_speakers = speakers;
  spec.utterances_per_speaker = utterances;
  spec.clean_utterances =
      clean_utterances >= 0
          ? clean_utterances
          : (contamination > 0.0 ? std::max(1, utterances / 2) : utterances);
  spec.utterance_seconds = seconds;
  spec.sample_rate = rate;
  spec.contamination_frac = contamination;
  spec.seed = seed;

  const CorpusManifest manifest = synth_wav_corpus(spec, out_dir);
  std::printf("wrote %zu wav files and manifest.tsv to %s\n",
              manifest.entries.size(), out_dir.c_str());
  return 0;
}

int cmd_inspect(const std::string& archive_path) {
  const ModelArchive archive = load_archive(archive_path);
  std::fputs(archive_to_text(archive).c_str(), stdout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Minimum-disparity speaker identification"};
  app.require_subcommand(1);

  // train
  std::string train_manifest, train_out;
  ConfigFlags train_flags;
  CLI::App* train = app.add_subcommand(
      "train", "fit one model per speaker and write a model archive");
  train->add_option("manifest", train_manifest, "corpus manifest (TSV)")
      ->required();
  train->add_option("output", train_out, "archive file to write")->required();
  train_flags.attach(train, /*with_pct=*/true);

  // identify
  std::string id_archive, id_wav;
  ConfigFlags id_flags;
  CLI::App* ident = app.add_subcommand(
      "identify", "rank the archived speakers for one utterance");
  ident->add_option("archive", id_archive, "model archive")->required();
  ident->add_option("wav", id_wav, "utterance to identify")->required();
  id_flags.attach(ident, /*with_pct=*/false);

  // evaluate
  std::string eval_manifest, eval_prefix = "evaluation";
  std::string eval_fusion = "standardized";
  int eval_train = 6, eval_test = 4;
  bool eval_combine = false;
  ConfigFlags eval_flags;
  CLI::App* eval = app.add_subcommand(
      "evaluate", "closed-set identification accuracy on a corpus");
  eval->add_option("manifest", eval_manifest, "corpus manifest (TSV)")
      ->required();
  eval->add_option("--train", eval_train, "training utterances per speaker")
      ->check(CLI::PositiveNumber);
  eval->add_option("--test", eval_test, "test utterances per speaker")
      ->check(CLI::PositiveNumber);
  eval->add_flag("--combine", eval_combine,
                 "also report the fused-ensemble decision");
  eval->add_option("--fusion", eval_fusion, "standardized or sum")
      ->check(CLI::IsMember({"standardized", "sum"}));
  eval->add_option("-o,--output", eval_prefix,
                   "output prefix (writes <prefix>.csv and <prefix>.txt)");
  eval_flags.attach(eval, /*with_pct=*/true);

  // sweep
  std::string sweep_manifest, sweep_prefix = "sweep";
  std::string sweep_fusion = "standardized";
  int sweep_train = 6, sweep_test = 4;
  std::vector<double> sweep_windows, sweep_betas;
  std::vector<std::string> sweep_bands, sweep_measures, sweep_estimators,
      sweep_trims, sweep_pcts, sweep_fsets;
  ConfigFlags sweep_flags;
  CLI::App* swp = app.add_subcommand(
      "sweep", "grid of classifiers plus combined-ensemble rows");
  swp->add_option("manifest", sweep_manifest, "corpus manifest (TSV)")
      ->required();
  swp->add_option("--train", sweep_train, "training utterances per speaker")
      ->check(CLI::PositiveNumber);
  swp->add_option("--test", sweep_test, "test utterances per speaker")
      ->check(CLI::PositiveNumber);
  swp->add_option("--windows", sweep_windows, "window sizes in seconds")
      ->delimiter(',');
  swp->add_option("--bands", sweep_bands,
                  "frequency bands min:max in Hz (max 0 = Nyquist)")
      ->delimiter(',');
  swp->add_option("--measures", sweep_measures, "subset of ld,hd,pcs")
      ->delimiter(',');
  swp->add_option("--estimators", sweep_estimators, "subset of 1,2")
      ->delimiter(',');
  swp->add_option("--trims", sweep_trims, "trim pairs low:high")
      ->delimiter(',');
  swp->add_option("--betas", sweep_betas, "rescaling exponents")
      ->delimiter(',');
  swp->add_option("--pct-values", sweep_pcts, "subset of 0,1 (wopct/wpct)")
      ->delimiter(',');
  swp->add_option("--feature-sets", sweep_fsets,
                  "subset of fs1,fs2 (fs1 = 20 MFCC + deltas, fs2 = 39 MFCC)")
      ->delimiter(',');
  swp->add_option("--fusion", sweep_fusion, "standardized or sum")
      ->check(CLI::IsMember({"standardized", "sum"}));
  swp->add_option("-o,--output", sweep_prefix,
                  "output prefix (writes <prefix>.csv and <prefix>.txt)");
  sweep_flags.attach(swp, /*with_pct=*/true);

  // raf-curves
  std::string raf_out = "raf_curves.csv";
  double raf_start = -0.99, raf_stop = 5.0, raf_step = 0.01;
  CLI::App* raf = app.add_subcommand(
      "raf-curves", "tabulate the residual adjustment functions as CSV");
  raf->add_option("-o,--output", raf_out, "output CSV path");
  raf->add_option("--start", raf_start, "first residual value");
  raf->add_option("--stop", raf_stop, "last residual value");
  raf->add_option("--step", raf_step, "grid step");

  // synth
  std::string synth_dir;
  int synth_speakers = 4, synth_utts = 4, synth_clean = -1;
  int synth_rate = 16000;
  double synth_seconds = 1.0, synth_contamination = 0.0;
  std::uint64_t synth_seed = 1;
  CLI::App* synth = app.add_subcommand(
      "synth", "generate a synthetic WAV corpus with a manifest");
  synth->add_option("out_dir", synth_dir, "directory for wavs + manifest.tsv")
      ->required();
  synth->add_option("--speakers", synth_speakers, "number of speakers")
      ->check(CLI::PositiveNumber);
  synth->add_option("--utterances", synth_utts, "utterances per speaker")
      ->check(CLI::PositiveNumber);
  synth->add_option("--clean-utterances", synth_clean,
                    "utterance indices below this stay uncontaminated "
                    "(default: half when contaminating, else all)");
  synth->add_option("--seconds", synth_seconds, "utterance length in seconds")
      ->check(CLI::PositiveNumber);
  synth->add_option("--rate", synth_rate, "sample rate in Hz");
  synth->add_option("--contamination", synth_contamination,
                    "fraction of contaminated blocks in test utterances")
      ->check(CLI::Range(0.0, 0.9999));
  synth->add_option("--seed", synth_seed, "corpus seed");

  // inspect
  std::string inspect_archive;
  CLI::App* inspect = app.add_subcommand(
      "inspect", "print a lossless text rendering of a model archive");
  inspect->add_option("archive", inspect_archive, "model archive")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (train->parsed()) return cmd_train(train_manifest, train_out, train_flags);
    if (ident->parsed()) return cmd_identify(id_archive, id_wav, id_flags);
    if (eval->parsed()) {
      return cmd_evaluate(eval_manifest, eval_train, eval_test, eval_combine,
                          eval_fusion, eval_prefix, eval_flags);
    }
    if (swp->parsed()) {
      return cmd_sweep(sweep_manifest, sweep_train, sweep_test, sweep_windows,
                       sweep_bands, sweep_measures, sweep_estimators,
                       sweep_trims, sweep_betas, sweep_pcts, sweep_fsets,
                       sweep_fusion, sweep_prefix, sweep_flags);
    }
    if (raf->parsed()) return cmd_raf_curves(raf_out, raf_start, raf_stop, raf_step);
    if (synth->parsed()) {
      return cmd_synth(synth_dir, synth_speakers, synth_utts, synth_clean,
                       synth_seconds, synth_rate, synth_contamination,
                       synth_seed);
    }
    if (inspect->parsed()) return cmd_inspect(inspect_archive);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kExitUsage;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return kExitNumeric;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kExitData;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  }
  return 0;
}
