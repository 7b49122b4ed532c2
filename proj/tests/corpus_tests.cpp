#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "doctest.h"

#include "disparity/corpus.hpp"
#include "disparity/errors.hpp"
#include "disparity/gmm.hpp"
#include "disparity/identify.hpp"
#include "disparity/synth.hpp"

using namespace disparity;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("disparity_corpus_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  out << text;
}

// A small, easy synthetic corpus: well separated speakers, clean data.
SynthSpec easy_spec(int speakers, int utterances) {
  SynthSpec spec;
  spec.num_speakers = speakers;
  spec.utterances_per_speaker = utterances;
  spec.clean_utterances = utterances;
  spec.frames_per_utterance = 120;
  spec.dim = 4;
  spec.components = 2;
  spec.separation = 4.0;
  spec.seed = 2024;
  return spec;
}

// A light classifier so evaluation stays fast.
ClassifierConfig light_config() {
  ClassifierConfig config;
  config.em_speaker.num_components = 4;
  config.em_test.num_components = 2;
  config.em_speaker.seed = 1;
  config.em_test.seed = 1;
  return config;
}

}  // namespace

TEST_SUITE("manifest") {

TEST_CASE("loads rows, comments, and relative paths") {
  const fs::path dir = temp_dir("load");
  write_file(dir / "corpus.tsv",
             "# a speech corpus\n"
             "alice\t0\taudio/alice0.wav\n"
             "alice\t1\t/abs/alice1.wav   # inline note\n"
             "\n"
             "bob\t0\tbob0.wav\n"
             "bob\t2\tbob2.wav\r\n");
  const CorpusManifest manifest = load_manifest((dir / "corpus.tsv").string());
  REQUIRE(manifest.entries.size() == 4);
  CHECK(manifest.entries[0].speaker_id == "alice");
  CHECK(manifest.entries[0].utterance_index == 0);
  CHECK(manifest.entries[0].path == (dir / "audio/alice0.wav").string());
  CHECK(manifest.entries[1].path == "/abs/alice1.wav");  // absolute untouched
  CHECK(manifest.entries[3].speaker_id == "bob");
  CHECK(manifest.entries[3].utterance_index == 2);
  fs::remove_all(dir);
}

TEST_CASE("rejects malformed manifests") {
  const fs::path dir = temp_dir("bad");

  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_manifest((dir / "none.tsv").string()), DataError);
  }

  SUBCASE("wrong field count") {
    write_file(dir / "m.tsv", "alice\t0\n");
    CHECK_THROWS_AS(load_manifest((dir / "m.tsv").string()), DataError);
    write_file(dir / "m.tsv", "alice\t0\ta.wav\textra\n");
    CHECK_THROWS_AS(load_manifest((dir / "m.tsv").string()), DataError);
  }

  SUBCASE("bad utterance index") {
    write_file(dir / "m.tsv", "alice\tzero\ta.wav\nalice\t1\tb.wav\n");
    CHECK_THROWS_AS(load_manifest((dir / "m.tsv").string()), DataError);
    write_file(dir / "m.tsv", "alice\t-1\ta.wav\nalice\t1\tb.wav\n");
    CHECK_THROWS_AS(load_manifest((dir / "m.tsv").string()), DataError);
    write_file(dir / "m.tsv", "alice\t1x\ta.wav\nalice\t2\tb.wav\n");
    CHECK_THROWS_AS(load_manifest((dir / "m.tsv").string()), DataError);
  }

  SUBCASE("duplicate utterance names the line") {
    write_file(dir / "m.tsv",
               "alice\t0\ta.wav\nalice\t1\tb.wav\nalice\t0\tc.wav\n");
    try {
      load_manifest((dir / "m.tsv").string());
      FAIL("expected DataError");
    } catch (const DataError& e) {
      const std::string what = e.what();
      CHECK(what.find("alice") != std::string::npos);
      CHECK(what.find("3") != std::string::npos);
    }
  }

  SUBCASE("empty and single-utterance corpora") {
    write_file(dir / "m.tsv", "# only comments\n");
    CHECK_THROWS_AS(load_manifest((dir / "m.tsv").string()), DataError);
    write_file(dir / "m.tsv", "alice\t0\ta.wav\nbob\t0\tb.wav\nbob\t1\tc.wav\n");
    try {
      load_manifest((dir / "m.tsv").string());
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("alice") != std::string::npos);
    }
  }
  fs::remove_all(dir);
}

TEST_CASE("split orders by utterance index and checks counts") {
  CorpusManifest manifest;
  for (int idx : {3, 0, 2, 1}) {
    manifest.entries.push_back({"a", idx, "a" + std::to_string(idx)});
  }
  for (int idx : {1, 0, 2}) {
    manifest.entries.push_back({"b", idx, "b" + std::to_string(idx)});
  }

  SplitSpec spec;
  spec.train_count = 2;
  spec.test_count = 1;
  const CorpusSplit split = split_corpus(manifest, spec);
  REQUIRE(split.train.at("a").size() == 2);
  CHECK(split.train.at("a")[0].utterance_index == 0);
  CHECK(split.train.at("a")[1].utterance_index == 1);
  REQUIRE(split.test.at("a").size() == 1);
  CHECK(split.test.at("a")[0].utterance_index == 2);  // train and test disjoint
  CHECK(split.test.at("b")[0].utterance_index == 2);

  SplitSpec too_many;
  too_many.train_count = 3;
  too_many.test_count = 1;
  try {
    split_corpus(manifest, too_many);  // speaker b has only 3 utterances
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("b") != std::string::npos);
  }

  SplitSpec invalid;
  CHECK_THROWS_AS(invalid.validate(), DataError);  // zero counts
}

}  // TEST_SUITE

TEST_SUITE("evaluation") {

TEST_CASE("classifier labels are deterministic and complete") {
  ClassifierConfig config;
  CHECK(classifier_label(config) ==
        "ld-1 wpct mfcc13 win0.025 band0-nyq trim0/0 beta0.2");
  config.scoring.measure = Measure::kHD;
  config.scoring.estimator = Estimator::kTypeII;
  config.use_pct = false;
  config.features.num_ceps = 20;
  config.features.use_delta = true;
  config.features.window_size = 0.02;
  config.features.min_freq = 300.0;
  config.features.max_freq = 3400.0;
  config.scoring.trim.low_frac = 0.05;
  config.scoring.trim.high_frac = 0.25;
  config.scoring.beta = 0.5;
  CHECK(classifier_label(config) ==
        "hd-2 wopct mfcc20+d win0.02 band300-3400 trim0.05/0.25 beta0.5");
}

TEST_CASE("evaluate identifies well-separated synthetic speakers") {
  const SynthCorpus corpus = synth_corpus(easy_spec(4, 5));
  SplitSpec split;
  split.train_count = 3;
  split.test_count = 2;

  const EvaluationReport report = evaluate(
      corpus.manifest, split, {light_config()}, false, corpus.provider());
  REQUIRE(report.classifiers.size() == 1);
  CHECK_FALSE(report.combined.has_value());

  const ClassifierResult& result = report.classifiers[0];
  CHECK(result.accuracy == doctest::Approx(100.0));
  REQUIRE(result.trials.size() == 8);  // 4 speakers x 2 test utterances

  // Trials are ordered by (speaker, utterance index).
  for (size_t i = 1; i < result.trials.size(); ++i) {
    const auto& prev = result.trials[i - 1];
    const auto& cur = result.trials[i];
    CHECK((prev.true_speaker < cur.true_speaker ||
           (prev.true_speaker == cur.true_speaker &&
            prev.utterance_index < cur.utterance_index)));
  }

  // Confusion counts add up to the trial count, all on the diagonal here.
  int total = 0;
  for (const auto& [pair, count] : result.confusion) {
    total += count;
    CHECK(pair.first == pair.second);
  }
  CHECK(total == 8);

  // Every trial carries a full score map.
  for (const auto& trial : result.trials) {
    CHECK(trial.scores.size() == 4);
    CHECK(trial.predicted == best_speaker(trial.scores));
  }
}

TEST_CASE("evaluate is exactly reproducible") {
  const SynthCorpus corpus = synth_corpus(easy_spec(3, 4));
  SplitSpec split;
  split.train_count = 2;
  split.test_count = 2;
  const auto run = [&] {
    return evaluate(corpus.manifest, split, {light_config()}, false,
                    corpus.provider());
  };
  const EvaluationReport a = run();
  const EvaluationReport b = run();
  REQUIRE(a.classifiers[0].trials.size() == b.classifiers[0].trials.size());
  for (size_t i = 0; i < a.classifiers[0].trials.size(); ++i) {
    const auto& ta = a.classifiers[0].trials[i];
    const auto& tb = b.classifiers[0].trials[i];
    CHECK(ta.predicted == tb.predicted);
    for (const auto& [id, score] : ta.scores) {
      CHECK(score == tb.scores.at(id));  // bitwise: same seeds, same order
    }
  }
}

TEST_CASE("combining a classifier with itself changes nothing") {
  const SynthCorpus corpus = synth_corpus(easy_spec(3, 4));
  SplitSpec split;
  split.train_count = 2;
  split.test_count = 2;
  const std::vector<ClassifierConfig> configs = {light_config(), light_config()};
  const EvaluationReport report =
      evaluate(corpus.manifest, split, configs, true, corpus.provider());
  REQUIRE(report.combined.has_value());
  REQUIRE(report.classifiers.size() == 2);
  // Identical classifiers: the fused decisions match the individual ones.
  for (size_t i = 0; i < report.combined->trials.size(); ++i) {
    CHECK(report.combined->trials[i].predicted ==
          report.classifiers[0].trials[i].predicted);
  }
  CHECK(report.combined->accuracy ==
        doctest::Approx(report.classifiers[0].accuracy));
  CHECK(report.combined->label == "Combined");
}

TEST_CASE("evaluate validates inputs") {
  const SynthCorpus corpus = synth_corpus(easy_spec(3, 4));
  SplitSpec split;
  split.train_count = 2;
  split.test_count = 2;
  CHECK_THROWS_AS(
      evaluate(corpus.manifest, split, {}, false, corpus.provider()),
      DataError);

  SplitSpec hungry;
  hungry.train_count = 4;
  hungry.test_count = 2;
  CHECK_THROWS_AS(evaluate(corpus.manifest, hungry, {light_config()}, false,
                           corpus.provider()),
                  DataError);
}

TEST_CASE("provider failures name the utterance") {
  const SynthCorpus corpus = synth_corpus(easy_spec(3, 4));
  SplitSpec split;
  split.train_count = 2;
  split.test_count = 2;
  const FeatureProvider failing =
      [](const ManifestEntry& entry, const FeatureConfig&) -> FeatureMatrix {
    throw DataError("backing store offline");
  };
  try {
    evaluate(corpus.manifest, split, {light_config()}, false, failing);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    const std::string what = e.what();
    CHECK(what.find("backing store offline") != std::string::npos);
    CHECK(what.find("spk") != std::string::npos);  // which utterance failed
  }
}

}  // TEST_SUITE

TEST_SUITE("sweep") {

TEST_CASE("an all-empty grid reproduces a single evaluation") {
  const SynthCorpus corpus = synth_corpus(easy_spec(3, 4));
  SplitSpec split;
  split.train_count = 2;
  split.test_count = 2;
  const ClassifierConfig base = light_config();

  const SweepOutcome outcome =
      sweep(corpus.manifest, split, base, SweepGrid{}, corpus.provider());
  REQUIRE(outcome.report.classifiers.size() == 1);
  REQUIRE(outcome.combined.size() == 1);

  const EvaluationReport direct =
      evaluate(corpus.manifest, split, {base}, false, corpus.provider());
  CHECK(outcome.report.classifiers[0].accuracy ==
        doctest::Approx(direct.classifiers[0].accuracy));
  CHECK(outcome.report.classifiers[0].label == direct.classifiers[0].label);
  // A combined row over a single experiment repeats its decisions.
  CHECK(outcome.combined[0].accuracy ==
        doctest::Approx(outcome.report.classifiers[0].accuracy));
}

TEST_CASE("grid axes expand and group into column combinations") {
  const SynthCorpus corpus = synth_corpus(easy_spec(3, 4));
  SplitSpec split;
  split.train_count = 2;
  split.test_count = 2;

  SweepGrid grid;
  grid.measures = {Measure::kLD, Measure::kHD};
  grid.use_pct_values = {false, true};
  TrimSpec none;
  TrimSpec high;
  high.high_frac = 0.25;
  grid.trims = {none, high};

  const SweepOutcome outcome =
      sweep(corpus.manifest, split, light_config(), grid, corpus.provider());
  // 2 measures x 2 pct x 2 trims = 8 experiments...
  REQUIRE(outcome.report.classifiers.size() == 8);
  // ...in 4 column groups (measure x pct), each fusing its 2 trim rows.
  REQUIRE(outcome.combined.size() == 4);
  for (const CombinedRow& row : outcome.combined) {
    CHECK(row.trials.size() == 6);
    CHECK(row.label.rfind("Combined ", 0) == 0);
  }

  // Labels are unique across experiments.
  std::set<std::string> labels;
  for (const auto& c : outcome.report.classifiers) labels.insert(c.label);
  CHECK(labels.size() == 8);
}

TEST_CASE("degenerate axes produce identical accuracies") {
  // Beta never enters LD type I scoring, so sweeping it cannot change
  // anything.
  const SynthCorpus corpus = synth_corpus(easy_spec(3, 4));
  SplitSpec split;
  split.train_count = 2;
  split.test_count = 2;
  SweepGrid grid;
  grid.betas = {0.2, 0.5};
  const SweepOutcome outcome =
      sweep(corpus.manifest, split, light_config(), grid, corpus.provider());
  REQUIRE(outcome.report.classifiers.size() == 2);
  CHECK(outcome.report.classifiers[0].accuracy ==
        outcome.report.classifiers[1].accuracy);
  for (size_t i = 0; i < outcome.report.classifiers[0].trials.size(); ++i) {
    CHECK(outcome.report.classifiers[0].trials[i].predicted ==
          outcome.report.classifiers[1].trials[i].predicted);
  }
}

TEST_CASE("reports carry every row with the expected shape") {
  const SynthCorpus corpus = synth_corpus(easy_spec(3, 4));
  SplitSpec split;
  split.train_count = 2;
  split.test_count = 2;
  SweepGrid grid;
  grid.measures = {Measure::kLD, Measure::kHD};
  grid.use_pct_values = {false, true};
  const SweepOutcome outcome =
      sweep(corpus.manifest, split, light_config(), grid, corpus.provider());

  const std::string csv = report_csv(outcome);
  CHECK(csv.rfind("kind,label,window_size,min_freq,max_freq,features,measure,"
                  "estimator,use_pct,trim_low,trim_high,beta,accuracy\n",
                  0) == 0);
  // Header + 4 experiments + 4 combined rows.
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 9);
  CHECK(csv.find("\nindividual,") != std::string::npos);
  CHECK(csv.find("\ncombined,") != std::string::npos);

  const std::string table = report_table(outcome);
  CHECK(table.find("measure ld, type 1") != std::string::npos);
  CHECK(table.find("measure hd, type 1") != std::string::npos);
  CHECK(table.find("WOPCT") != std::string::npos);
  CHECK(table.find("WPCT") != std::string::npos);
  CHECK(table.find("Combined") != std::string::npos);

  // Single-configuration reports share the CSV shape.
  const EvaluationReport direct = evaluate(corpus.manifest, split,
                                           {light_config()}, false,
                                           corpus.provider());
  const std::string simple = report_csv(direct);
  CHECK(simple.rfind("kind,label,", 0) == 0);
  CHECK(std::count(simple.begin(), simple.end(), '\n') == 2);
}

TEST_CASE("write_text_file is atomic and readable back") {
  const fs::path dir = temp_dir("write");
  const fs::path path = dir / "report.txt";
  write_text_file(path.string(), "hello\n");
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "hello");
  CHECK_FALSE(fs::exists(path.string() + ".tmp"));
  CHECK_THROWS_AS(write_text_file((dir / "no_dir" / "x.txt").string(), "x"),
                  DataError);
  fs::remove_all(dir);
}

}  // TEST_SUITE

TEST_SUITE("synthesis") {

TEST_CASE("synthetic corpora are deterministic in the seed") {
  const SynthSpec spec = easy_spec(3, 4);
  const SynthCorpus a = synth_corpus(spec);
  const SynthCorpus b = synth_corpus(spec);
  REQUIRE(a.frames.size() == b.frames.size());
  for (const auto& [key, frames] : a.frames) {
    CHECK(frames == b.frames.at(key));
  }

  SynthSpec other = spec;
  other.seed = spec.seed + 1;
  const SynthCorpus c = synth_corpus(other);
  bool any_difference = false;
  for (const auto& [key, frames] : a.frames) {
    if (frames != c.frames.at(key)) any_difference = true;
  }
  CHECK(any_difference);
}

TEST_CASE("the manifest matches the stored frames") {
  const SynthCorpus corpus = synth_corpus(easy_spec(3, 4));
  REQUIRE(corpus.manifest.entries.size() == 12);
  for (const auto& entry : corpus.manifest.entries) {
    CHECK(corpus.frames.count({entry.speaker_id, entry.utterance_index}) == 1);
  }
  CHECK(corpus.truth.size() == 3);

  // The provider serves those frames and stamps the fingerprint.
  FeatureConfig features;
  const FeatureMatrix m =
      corpus.provider()(corpus.manifest.entries[0], features);
  CHECK(m.config_fingerprint == features.fingerprint());
  CHECK(m.values == corpus.frames.at({corpus.manifest.entries[0].speaker_id,
                                      corpus.manifest.entries[0].utterance_index}));
}

TEST_CASE("contamination replaces the documented fraction of frames") {
  SynthSpec spec = easy_spec(2, 4);
  spec.clean_utterances = 2;
  spec.contamination_frac = 0.3;
  const SynthCorpus corpus = synth_corpus(spec);

  SynthSpec clean_spec = spec;
  clean_spec.contamination_frac = 0.0;
  const SynthCorpus clean = synth_corpus(clean_spec);

  for (const auto& [key, frames] : corpus.frames) {
    const Eigen::MatrixXd& baseline = clean.frames.at(key);
    int changed = 0;
    for (int j = 0; j < frames.cols(); ++j) {
      if (frames.col(j) != baseline.col(j)) ++changed;
    }
    if (key.second < spec.clean_utterances) {
      CHECK(changed == 0);
    } else {
      CHECK(changed == static_cast<int>(0.3 * spec.frames_per_utterance));
      // Outliers sit far from the speaker's mass.
      CHECK((frames.rowwise().maxCoeff() - baseline.rowwise().maxCoeff())
                .maxCoeff() > 5.0);
    }
  }

  SynthSpec bad = spec;
  bad.contamination_frac = 1.0;
  CHECK_THROWS_AS(synth_corpus(bad), DataError);
  bad = spec;
  bad.num_speakers = 0;
  CHECK_THROWS_AS(synth_corpus(bad), DataError);
}

TEST_CASE("clean corpora separate perfectly at moderate size") {
  SynthSpec spec = easy_spec(2, 10);
  const SynthCorpus corpus = synth_corpus(spec);
  SplitSpec split;
  split.train_count = 5;
  split.test_count = 5;
  const EvaluationReport report = evaluate(
      corpus.manifest, split, {light_config()}, false, corpus.provider());
  CHECK(report.classifiers[0].accuracy == doctest::Approx(100.0));
  CHECK(report.classifiers[0].trials.size() == 10);
}

TEST_CASE("rendered WAV corpora load and evaluate end to end") {
  const fs::path dir = temp_dir("wav");
  WavSynthSpec spec;
  spec.num_speakers = 3;
  spec.utterances_per_speaker = 3;
  spec.clean_utterances = 3;
  spec.utterance_seconds = 0.6;
  spec.seed = 5;
  const CorpusManifest manifest = synth_wav_corpus(spec, dir.string());
  REQUIRE(manifest.entries.size() == 9);
  for (const auto& entry : manifest.entries) {
    CHECK(fs::exists(entry.path));
  }

  // Rendering twice produces byte-identical audio.
  const fs::path dir2 = temp_dir("wav2");
  synth_wav_corpus(spec, dir2.string());
  for (const auto& entry : manifest.entries) {
    const fs::path other = dir2 / fs::path(entry.path).filename();
    std::ifstream a(entry.path, std::ios::binary), b(other, std::ios::binary);
    const std::string bytes_a((std::istreambuf_iterator<char>(a)),
                              std::istreambuf_iterator<char>());
    const std::string bytes_b((std::istreambuf_iterator<char>(b)),
                              std::istreambuf_iterator<char>());
    CHECK(bytes_a == bytes_b);
  }

  // The manifest on disk loads and the corpus evaluates cleanly.
  const CorpusManifest loaded =
      load_manifest((dir / "manifest.tsv").string());
  REQUIRE(loaded.entries.size() == 9);
  SplitSpec split;
  split.train_count = 2;
  split.test_count = 1;
  ClassifierConfig config = light_config();
  const EvaluationReport report =
      evaluate(loaded, split, {config}, false, wav_feature_provider());
  REQUIRE(report.classifiers[0].trials.size() == 3);
  CHECK(report.classifiers[0].accuracy == doctest::Approx(100.0));
  fs::remove_all(dir);
  fs::remove_all(dir2);
}

}  // TEST_SUITE
