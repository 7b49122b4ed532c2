// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
// criterion fails.  Each criterion is self-contained and seeded, so the
// whole binary is deterministic.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "disparity/archive.hpp"
#include "disparity/corpus.hpp"
#include "disparity/divergence.hpp"
#include "disparity/errors.hpp"
#include "disparity/gmm.hpp"
#include "disparity/identify.hpp"
#include "disparity/pct.hpp"
#include "disparity/rng.hpp"
#include "disparity/synth.hpp"

using namespace disparity;

namespace {

struct Outcome {
  bool pass = false;
  std::string note;
};

std::string format_note(const char* fmt, ...) {
  char buf[256];
  va_list args;
  va_start(args, fmt);
  std::vsnprintf(buf, sizeof buf, fmt, args);
  va_end(args);
  return buf;
}

FeatureMatrix wrap(const Eigen::MatrixXd& values, std::uint64_t fingerprint) {
  FeatureMatrix out;
  out.values = values;
  out.config_fingerprint = fingerprint;
  return out;
}

// ---------------------------------------------------------------- criterion 1

Outcome mle_equivalence() {
  SynthSpec spec;
  spec.num_speakers = 10;
  spec.utterances_per_speaker = 14;
  spec.clean_utterances = 14;
  spec.frames_per_utterance = 12;
  spec.dim = 5;
  spec.components = 2;
  spec.separation = 0.3;  // heavy overlap: the oracles must agree on errors too
  spec.seed = 101;
  const SynthCorpus corpus = synth_corpus(spec);
  const std::uint64_t fp = FeatureConfig{}.fingerprint();

  std::map<std::string, SpeakerModel> speakers;
  for (const auto& [id, unused] : corpus.truth) {
    int cols = 0;
    for (int u = 0; u < 4; ++u) {
      cols += static_cast<int>(corpus.frames.at({id, u}).cols());
    }
    Eigen::MatrixXd all(spec.dim, cols);
    int at = 0;
    for (int u = 0; u < 4; ++u) {
      const Eigen::MatrixXd& part = corpus.frames.at({id, u});
      all.middleCols(at, part.cols()) = part;
      at += static_cast<int>(part.cols());
    }
    EmConfig em;
    em.num_components = 2;
    em.seed = derive_seed(11, "speaker:" + id);
    speakers.emplace(id, train_speaker(wrap(all, fp), em, false));
  }

  ScoringConfig ld1;  // LD Type I, zero trimming
  EmConfig test_em;
  test_em.num_components = 2;
  int total = 0;
  int identical = 0;
  int correct = 0;
  for (const auto& [key, frames] : corpus.frames) {
    if (key.second < 4) continue;
    const FeatureMatrix test = wrap(frames, fp);
    const IdentificationResult result = identify(speakers, test, test_em, ld1);

    // The oracle: plain maximum-likelihood GMM classification with the same
    // models and the same tie-break (strict >, ascending speaker ids).
    std::string ml;
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& [id, model] : speakers) {
      const double ll = model.gmm.log_density_frames(frames).sum();
      if (ll > best) {
        best = ll;
        ml = id;
      }
    }

    ++total;
    if (result.best_speaker == ml) ++identical;
    if (result.best_speaker == key.first) ++correct;
  }
  return {identical == total && total == 100,
          format_note("%d/%d decisions identical, accuracy %.1f%%", identical,
                      total, 100.0 * correct / total)};
}

// ---------------------------------------------------------------- criterion 2

Outcome raf_suite() {
  for (Measure m : kAllMeasures) {
    if (raf(m, 0.0) != 0.0) {
      return {false, "A(0) != 0 for measure " + measure_name(m)};
    }
    const double h = 1e-6;
    const double slope = (raf(m, h) - raf(m, -h)) / (2.0 * h);
    if (std::abs(slope - 1.0) > 1e-5) {
      return {false, format_note("A'(0) = %.8f for %s", slope,
                                 measure_name(m).c_str())};
    }
  }

  GridSpec grid;
  grid.start = -0.99;
  grid.stop = 10.0;
  grid.step = 1e-3;
  const std::vector<double> points = grid.points();
  for (Measure m : kAllMeasures) {
    for (size_t i = 1; i < points.size(); ++i) {
      if (!(raf(m, points[i]) > raf(m, points[i - 1]))) {
        return {false, format_note("A not increasing for %s at delta=%.4f",
                                   measure_name(m).c_str(), points[i])};
      }
    }
  }
  for (size_t i = 1; i + 1 < points.size(); ++i) {
    const auto second = [&](Measure m) {
      return raf(m, points[i + 1]) - 2.0 * raf(m, points[i]) +
             raf(m, points[i - 1]);
    };
    if (std::abs(second(Measure::kLD)) > 1e-12) {
      return {false, format_note("LD not linear at delta=%.4f", points[i])};
    }
    if (second(Measure::kHD) > 1e-12) {
      return {false, format_note("HD not concave at delta=%.4f", points[i])};
    }
    if (second(Measure::kPCS) < -1e-12) {
      return {false, format_note("PCS not convex at delta=%.4f", points[i])};
    }
  }
  return {true, format_note("%zu grid points checked for all 3 measures",
                            points.size())};
}

// ---------------------------------------------------------------- criterion 3

Outcome consistency_identity() {
  GridSpec grid;
  grid.start = -0.9;
  grid.stop = 10.0;
  grid.step = 0.01;
  const double h = 1e-6;
  double worst = 0.0;
  for (Measure m : kAllMeasures) {
    for (double d : grid.points()) {
      const double cp =
          (disparity_c(m, d + h) - disparity_c(m, d - h)) / (2.0 * h);
      const double expected = cp * (d + 1.0) - disparity_c(m, d);
      const double err = std::abs(raf(m, d) - expected);
      worst = std::max(worst, err);
      if (err > 1e-5) {
        return {false,
                format_note("mismatch %.2e for %s at delta=%.4f", err,
                            measure_name(m).c_str(), d)};
      }
    }
  }
  return {true, format_note("max |A - (C'(d)(d+1) - C(d))| = %.2e", worst)};
}

// ---------------------------------------------------------------- criterion 4

Outcome rescaling_neutrality() {
  Rng rng(4001);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int m = 1 + static_cast<int>(rng.uniform_below(50));
    std::vector<double> log_g(m), log_f(m);
    for (int i = 0; i < m; ++i) {
      log_g[i] = rng.uniform_range(-40.0, 5.0);
      log_f[i] = rng.uniform_range(-40.0, 5.0);
    }
    for (Measure measure : {Measure::kHD, Measure::kPCS}) {
      ScoringConfig config;
      config.measure = measure;
      config.estimator = Estimator::kTypeI;
      config.beta = 1.0;
      const double scored = utterance_score(log_g, log_f, config);

      double direct = 0.0;
      for (int i = 0; i < m; ++i) {
        const double shifted =
            std::max(pearson_residual(log_g[i], log_f[i]) + 1.0, 1e-12);
        direct += measure == Measure::kHD ? 1.0 / std::sqrt(shifted) : -shifted;
      }
      const double rel =
          std::abs(scored - direct) / std::max(1.0, std::abs(direct));
      worst = std::max(worst, rel);
      if (rel > 1e-12) {
        return {false, format_note("relative gap %.2e on trial %d", rel, trial)};
      }
    }
  }
  return {true, format_note("1000 residual sets, max relative gap %.2e", worst)};
}

// ---------------------------------------------------------------- criterion 5

Outcome trimming_correctness() {
  Rng rng(5001);
  int checked = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int m = 1 + static_cast<int>(rng.uniform_below(60));
    std::vector<double> values(m);
    for (double& v : values) {
      // Coarse quantization forces exact ties.
      v = std::floor(rng.uniform_range(-4.0, 4.0) * 4.0) / 4.0;
    }
    TrimSpec trim;
    trim.low_frac = rng.uniform_range(0.0, 0.49);
    trim.high_frac = rng.uniform_range(0.0, 0.49);
    const int n_low = static_cast<int>(std::floor(trim.low_frac * m));
    const int n_high = static_cast<int>(std::floor(trim.high_frac * m));
    if (n_low + n_high >= m) continue;

    // Brute-force oracle: stable sort by (value, position), chop the tails.
    std::vector<std::pair<double, int>> pairs;
    for (int i = 0; i < m; ++i) pairs.emplace_back(values[i], i);
    std::sort(pairs.begin(), pairs.end());
    std::vector<int> expected;
    for (int i = n_low; i < m - n_high; ++i) expected.push_back(pairs[i].second);
    std::sort(expected.begin(), expected.end());

    if (trimmed_indices(values, trim) != expected) {
      return {false, format_note("oracle mismatch on trial %d (m=%d)", trial, m)};
    }
    ++checked;
  }
  return {true, format_note("%d random vectors matched the sort oracle", checked)};
}

// ---------------------------------------------------------------- criterion 6

Outcome em_monotonicity() {
  Rng rng(6001);
  int curves = 0;
  for (int fit = 0; fit < 50; ++fit) {
    const int dim = 2 + static_cast<int>(rng.uniform_below(4));
    const int frames = 80 + static_cast<int>(rng.uniform_below(220));
    Eigen::MatrixXd data(dim, frames);
    for (int j = 0; j < frames; ++j) {
      for (int i = 0; i < dim; ++i) {
        data(i, j) = 2.0 * rng.gaussian() + (j % 2 == 0 ? 1.5 : -1.5);
      }
    }
    EmConfig config;
    config.num_components = 2 + static_cast<int>(rng.uniform_below(4));
    config.seed = 6100 + fit;
    config.num_restarts = 1 + static_cast<int>(rng.uniform_below(2));
    EmTrace trace;
    em_fit(wrap(data, 1), config, &trace);
    for (const auto& curve : trace.log_likelihood) {
      ++curves;
      for (size_t t = 1; t < curve.size(); ++t) {
        const double scale = std::max(1.0, std::abs(curve[t - 1]));
        if (curve[t] < curve[t - 1] - 1e-9 * scale) {
          return {false,
                  format_note("log-likelihood dropped %.3e at iteration %zu "
                              "of fit %d",
                              curve[t - 1] - curve[t], t, fit)};
        }
      }
    }
  }

  // Single-component fits land on the closed-form sample moments.
  for (int check = 0; check < 10; ++check) {
    const int dim = 2 + static_cast<int>(rng.uniform_below(3));
    const int frames = 50 + static_cast<int>(rng.uniform_below(200));
    Eigen::MatrixXd data(dim, frames);
    for (int j = 0; j < frames; ++j) {
      for (int i = 0; i < dim; ++i) data(i, j) = 3.0 * rng.gaussian() + i;
    }
    EmConfig config;
    config.num_components = 1;
    config.seed = 6200 + check;
    const GmmModel model = em_fit(wrap(data, 1), config);

    const Eigen::VectorXd mean = data.rowwise().mean();
    Eigen::VectorXd var = Eigen::VectorXd::Zero(dim);
    for (int j = 0; j < frames; ++j) {
      var += (data.col(j) - mean).array().square().matrix();
    }
    var /= static_cast<double>(frames);
    for (int i = 0; i < dim; ++i) {
      const double mean_err = std::abs(model.means()(i, 0) - mean(i));
      const double var_err = std::abs(model.variances()(i, 0) - var(i));
      if (mean_err > 1e-10 * std::max(1.0, std::abs(mean(i))) ||
          var_err > 1e-10 * std::max(1.0, var(i))) {
        return {false, format_note("moment mismatch on check %d (mean %.2e, "
                                   "var %.2e)",
                                   check, mean_err, var_err)};
      }
    }
  }
  return {true, format_note("%d likelihood curves monotone, 10 moment checks",
                            curves)};
}

// ---------------------------------------------------------------- criterion 7

Outcome pct_properties() {
  Rng rng(7001);
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 2 + static_cast<int>(rng.uniform_below(7));
    const int m = d + 2 + static_cast<int>(rng.uniform_below(80));
    Eigen::MatrixXd frames(d, m);
    for (int j = 0; j < m; ++j) {
      for (int i = 0; i < d; ++i) {
        frames(i, j) = (1.0 + i) * rng.gaussian();
      }
    }
    frames.row(0) += 0.7 * frames.row(d - 1);  // force correlations

    const PctTransform pct = pct_compute(frames);
    const Eigen::MatrixXd gram = pct.rotation * pct.rotation.transpose();
    const double ortho =
        (gram - Eigen::MatrixXd::Identity(d, d)).cwiseAbs().maxCoeff();
    if (ortho > 1e-10) {
      return {false, format_note("orthonormality defect %.2e on trial %d",
                                 ortho, trial)};
    }

    const Eigen::MatrixXd cov = sample_covariance(pct_apply(pct, frames));
    const double max_diag = cov.diagonal().maxCoeff();
    for (int a = 0; a < d; ++a) {
      for (int b = 0; b < d; ++b) {
        if (a != b && std::abs(cov(a, b)) > 1e-8 * max_diag) {
          return {false,
                  format_note("off-diagonal covariance %.2e on trial %d",
                              cov(a, b), trial)};
        }
      }
    }
  }

  // The 2x2 case with sample covariance [[2, 1], [1, 2]]: eigenvalues 3, 1
  // and rows (1,1)/sqrt(2), (1,-1)/sqrt(2) under the sign convention.
  Eigen::MatrixXd frames(2, 4);
  const double q = std::sqrt(0.75);
  frames << 1.5, -1.5, q, -q,
            1.5, -1.5, -q, q;
  const PctTransform pct = pct_compute(frames);
  const double r = 1.0 / std::sqrt(2.0);
  const double errs[] = {std::abs(pct.eigenvalues(0) - 3.0),
                         std::abs(pct.eigenvalues(1) - 1.0),
                         std::abs(pct.rotation(0, 0) - r),
                         std::abs(pct.rotation(0, 1) - r),
                         std::abs(pct.rotation(1, 0) - r),
                         std::abs(pct.rotation(1, 1) + r)};
  for (double err : errs) {
    if (err > 1e-10) {
      return {false, format_note("2x2 closed form off by %.2e", err)};
    }
  }
  return {true, "50 random matrices plus the closed-form 2x2 case"};
}

// ---------------------------------------------------------------- criterion 8

Outcome density_normalization() {
  Rng rng(8001);
  Eigen::MatrixXd data(1, 400);
  for (int j = 0; j < 400; ++j) {
    data(0, j) =
        j % 3 == 0 ? 4.0 + 0.6 * rng.gaussian() : -2.0 + 1.2 * rng.gaussian();
  }
  EmConfig config;
  config.num_components = 2;
  config.seed = 8002;
  const GmmModel model = em_fit(wrap(data, 1), config);

  const double step = 1e-3;
  const int n = static_cast<int>(std::llround(100.0 / step));
  double integral = 0.0;
  double prev = 0.0;
  Eigen::VectorXd x(1);
  for (int i = 0; i <= n; ++i) {
    x(0) = -50.0 + i * step;
    const double density = std::exp(model.log_density(x));
    if (i > 0) integral += 0.5 * (prev + density) * step;
    prev = density;
  }
  return {std::abs(integral - 1.0) <= 1e-6,
          format_note("integral over [-50, 50] = %.9f", integral)};
}

// ---------------------------------------------------------------- criterion 9

Outcome robustness_to_contamination() {
  int wins = 0;
  double mean_trimmed = 0.0;
  double mean_untrimmed = 0.0;
  for (int s = 0; s < 10; ++s) {
    SynthSpec spec;
    spec.num_speakers = 10;
    spec.utterances_per_speaker = 24;  // 4 clean for training, 20 for test
    spec.clean_utterances = 4;
    spec.frames_per_utterance = 200;
    spec.dim = 6;
    spec.components = 3;
    spec.separation = 3.0;
    spec.contamination_frac = 0.2;
    spec.seed = 9000 + s;
    const SynthCorpus corpus = synth_corpus(spec);

    SplitSpec split;
    split.train_count = 4;
    split.test_count = 20;

    ClassifierConfig untrimmed;
    untrimmed.use_pct = false;
    untrimmed.em_speaker.num_components = 8;
    untrimmed.em_speaker.seed = 90 + s;
    untrimmed.em_test.num_components = 2;
    untrimmed.em_test.seed = 90 + s;
    ClassifierConfig trimmed = untrimmed;  // same models, different scoring
    trimmed.scoring.trim.high_frac = 0.25;

    const EvaluationReport report =
        evaluate(corpus.manifest, split, {untrimmed, trimmed}, false,
                 corpus.provider());
    const double acc_untrimmed = report.classifiers[0].accuracy;
    const double acc_trimmed = report.classifiers[1].accuracy;
    if (acc_trimmed >= acc_untrimmed) ++wins;
    mean_untrimmed += acc_untrimmed / 10.0;
    mean_trimmed += acc_trimmed / 10.0;
  }
  return {wins >= 9,
          format_note("trimmed >= untrimmed in %d/10 seeds (mean %.1f%% vs "
                      "%.1f%% over 200 utterances each)",
                      wins, mean_trimmed, mean_untrimmed)};
}

// --------------------------------------------------------------- criterion 10

SynthSpec ordering_spec(int seed_offset) {
  SynthSpec spec;
  spec.num_speakers = 10;
  spec.utterances_per_speaker = 8;
  spec.clean_utterances = 8;
  spec.frames_per_utterance = 150;
  spec.dim = 6;
  spec.components = 3;
  spec.separation = 1.2;  // deliberately hard: accuracies stay off 100%
  spec.correlate = true;  // correlated observations, so the rotation matters
  spec.seed = 7000 + seed_offset;
  return spec;
}

std::vector<ClassifierConfig> ordering_configs(int s) {
  std::vector<ClassifierConfig> configs;
  for (Measure measure : kAllMeasures) {
    for (bool use_pct : {false, true}) {
      ClassifierConfig config;
      config.use_pct = use_pct;
      config.scoring.measure = measure;
      config.em_speaker.num_components = 4;
      config.em_speaker.seed = 70 + s;
      config.em_test.num_components = 2;
      config.em_test.seed = 70 + s;
      configs.push_back(config);
    }
  }
  return configs;
}

Outcome table_structure_and_orderings() {
  SplitSpec split;
  split.train_count = 4;
  split.test_count = 4;

  // Structural reproduction: the sweep report must carry one block per
  // measure with WOPCT/WPCT columns and a Combined row per column.
  const SynthCorpus first = synth_corpus(ordering_spec(0));
  SweepGrid grid;
  grid.measures = {Measure::kLD, Measure::kHD, Measure::kPCS};
  grid.use_pct_values = {false, true};
  ClassifierConfig base = ordering_configs(0)[0];
  const SweepOutcome outcome =
      sweep(first.manifest, split, base, grid, first.provider());
  const std::string table = report_table(outcome);
  const std::string csv = report_csv(outcome);
  for (const char* needle :
       {"measure ld, type 1", "measure hd, type 1", "measure pcs, type 1",
        "WOPCT", "WPCT", "Combined"}) {
    if (table.find(needle) == std::string::npos) {
      return {false, format_note("table lacks '%s'", needle)};
    }
  }
  if (outcome.report.classifiers.size() != 6 || outcome.combined.size() != 6 ||
      csv.find("\ncombined,") == std::string::npos) {
    return {false, "sweep did not produce 6 experiments + 6 combined rows"};
  }

  // Qualitative orderings across 10 seeds: (a) mean WPCT accuracy >= mean
  // WOPCT accuracy, (b) fused ensemble accuracy >= best individual.
  int pct_wins = 0;
  int fusion_wins = 0;
  for (int s = 0; s < 10; ++s) {
    const SynthCorpus corpus = synth_corpus(ordering_spec(s));
    const EvaluationReport report = evaluate(
        corpus.manifest, split, ordering_configs(s), true, corpus.provider());

    double wpct = 0.0;
    double wopct = 0.0;
    double best = 0.0;
    for (const ClassifierResult& result : report.classifiers) {
      (result.config.use_pct ? wpct : wopct) += result.accuracy / 3.0;
      best = std::max(best, result.accuracy);
    }
    if (wpct >= wopct) ++pct_wins;
    if (report.combined->accuracy >= best) ++fusion_wins;
  }
  return {pct_wins >= 8 && fusion_wins >= 8,
          format_note("WPCT >= WOPCT in %d/10 seeds, combined >= best "
                      "individual in %d/10 seeds",
                      pct_wins, fusion_wins)};
}

// --------------------------------------------------------------- criterion 11

Outcome archive_round_trip() {
  namespace fs = std::filesystem;
  const fs::path dir =
      fs::temp_directory_path() / "disparity_acceptance_archive";
  fs::remove_all(dir);
  fs::create_directories(dir);

  Rng rng(11001);
  for (int trial = 0; trial < 10; ++trial) {
    const bool use_pct = trial % 2 == 0;
    const int dim = 2 + static_cast<int>(rng.uniform_below(4));
    const int components = 1 + static_cast<int>(rng.uniform_below(4));

    ModelArchive archive;
    archive.feature_config.num_ceps = 10 + trial;
    archive.feature_config.num_filters = 26;
    archive.em_config.seed = rng.uniform_below(10000);
    archive.use_pct = use_pct;
    const int speakers = 1 + static_cast<int>(rng.uniform_below(5));
    for (int sp = 0; sp < speakers; ++sp) {
      Eigen::VectorXd weights(components);
      for (int k = 0; k < components; ++k) weights(k) = 0.1 + rng.uniform();
      weights /= weights.sum();
      Eigen::MatrixXd means(dim, components), variances(dim, components);
      for (int k = 0; k < components; ++k) {
        for (int i = 0; i < dim; ++i) {
          means(i, k) = 4.0 * rng.gaussian();
          variances(i, k) = 0.05 + rng.uniform();
        }
      }
      SpeakerModel model{GmmModel(weights, means, variances),
                         PctTransform{Eigen::MatrixXd::Identity(dim, dim),
                                      Eigen::VectorXd::Ones(dim)},
                         use_pct, archive.feature_config.fingerprint()};
      if (use_pct) {
        Eigen::MatrixXd raw(dim, dim);
        for (int i = 0; i < dim; ++i) {
          for (int j = 0; j < dim; ++j) raw(i, j) = rng.gaussian();
        }
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(raw);
        model.pct.rotation = qr.householderQ();
        for (int i = 0; i < dim; ++i) {
          model.pct.eigenvalues(i) = 2.0 + rng.uniform();
        }
      }
      archive.speakers.emplace("spk" + std::to_string(sp), std::move(model));
    }

    const fs::path first = dir / ("a" + std::to_string(trial) + ".bin");
    const fs::path second = dir / ("b" + std::to_string(trial) + ".bin");
    save_archive(archive, first.string());
    save_archive(load_archive(first.string()), second.string());

    std::ifstream in_a(first, std::ios::binary), in_b(second, std::ios::binary);
    const std::string bytes_a((std::istreambuf_iterator<char>(in_a)),
                              std::istreambuf_iterator<char>());
    const std::string bytes_b((std::istreambuf_iterator<char>(in_b)),
                              std::istreambuf_iterator<char>());
    if (bytes_a.empty() || bytes_a != bytes_b) {
      fs::remove_all(dir);
      return {false, format_note("byte mismatch on model set %d", trial)};
    }
  }
  fs::remove_all(dir);
  return {true, "10 random model sets round-tripped byte-identically"};
}

struct Criterion {
  int number;
  const char* description;
  std::function<Outcome()> fn;
  double time_limit_seconds;  // 0 = no limit
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1,
       "LD Type I with zero trimming matches direct maximum-likelihood "
       "decisions on 100 synthetic utterances",
       mle_equivalence, 60.0},
      {2,
       "residual adjustment functions: A(0)=0, A'(0)=1, strictly increasing, "
       "documented curvature",
       raf_suite, 0.0},
      {3, "A(d) = C'(d)(d+1) - C(d) holds by finite differences on [-0.9, 10]",
       consistency_identity, 0.0},
      {4, "beta=1 Type I HD/PCS scores equal unscaled scores (1e-12 relative)",
       rescaling_neutrality, 0.0},
      {5, "trimming removes exactly the documented order statistics",
       trimming_correctness, 0.0},
      {6,
       "EM log-likelihood is non-decreasing; single-component fits match "
       "sample moments",
       em_monotonicity, 0.0},
      {7,
       "principal rotations are orthonormal, decorrelate training data, and "
       "match the 2x2 closed form",
       pct_properties, 0.0},
      {8, "fitted 1-D mixture density integrates to 1 within 1e-6",
       density_normalization, 0.0},
      {9,
       "with 20% far-outlier contamination, trimmed LD accuracy >= untrimmed "
       "in >= 9/10 seeds",
       robustness_to_contamination, 300.0},
      {10,
       "report structure reproduced; WPCT >= WOPCT and combined >= best "
       "individual in >= 8/10 seeds",
       table_structure_and_orderings, 0.0},
      {11, "archives round-trip byte-identically on 10 random model sets",
       archive_round_trip, 0.0},
  };

  int failures = 0;
  for (const Criterion& criterion : criteria) {
    Outcome outcome;
    const auto start = std::chrono::steady_clock::now();
    try {
      outcome = criterion.fn();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    if (criterion.time_limit_seconds > 0.0 &&
        elapsed >= criterion.time_limit_seconds) {
      outcome.pass = false;
      outcome.note += format_note(" [over the %.0f s budget]",
                                  criterion.time_limit_seconds);
    }
    if (!outcome.pass) ++failures;
    std::printf("%s criterion %2d: %s -- %s (%.1f s)\n",
                outcome.pass ? "PASS" : "FAIL", criterion.number,
                criterion.description, outcome.note.c_str(), elapsed);
    std::fflush(stdout);
  }
  if (failures > 0) {
    std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  } else {
    std::printf("all %zu criteria passed\n", criteria.size());
  }
  return failures == 0 ? 0 : 1;
}
