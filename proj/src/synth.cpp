#include "disparity/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <numeric>
#include <vector>

#include <Eigen/QR>

#include "disparity/audio.hpp"
#include "disparity/errors.hpp"
#include "disparity/rng.hpp"

namespace disparity {
namespace {

std::string speaker_name(int index, int total) {
  int width = 2;
  for (int n = 100; n <= total && width < 9; n *= 10) ++width;
  char buf[32];
  std::snprintf(buf, sizeof buf, "spk%0*d", width, index);
  return buf;
}

// Haar-ish random rotation: QR of a Gaussian matrix with the R diagonal
// forced positive so the result is unique given the input.
Eigen::MatrixXd random_orthogonal(int dim, Rng& rng) {
  Eigen::MatrixXd a(dim, dim);
  for (int c = 0; c < dim; ++c) {
    for (int r = 0; r < dim; ++r) a(r, c) = rng.gaussian();
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < dim; ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

int pick_component(const Eigen::VectorXd& weights, Rng& rng) {
  const double u = rng.uniform();
  double cum = 0.0;
  for (int j = 0; j < weights.size(); ++j) {
    cum += weights[j];
    if (u < cum) return j;
  }
  return static_cast<int>(weights.size()) - 1;
}

}  // namespace

void SynthSpec::validate() const {
  if (num_speakers < 1 || utterances_per_speaker < 1 ||
      frames_per_utterance < 1 || dim < 1 || components < 1) {
    throw DataError("synthetic corpus counts must all be >= 1");
  }
  if (clean_utterances < 0 || clean_utterances > utterances_per_speaker) {
    throw DataError("clean_utterances must lie in [0, utterances_per_speaker]");
  }
  if (!(contamination_frac >= 0.0 && contamination_frac < 1.0)) {
    throw DataError("contamination fraction must lie in [0, 1)");
  }
  if (!(separation > 0.0)) {
    throw DataError("separation must be positive");
  }
}

SynthCorpus synth_corpus(const SynthSpec& spec) {
  spec.validate();
  SynthCorpus corpus;

  // Ground-truth generators.
  std::vector<std::string> ids;
  double mean_max = 0.0;
  double var_max = 0.0;
  for (int s = 0; s < spec.num_speakers; ++s) {
    const std::string id = speaker_name(s, spec.num_speakers);
    ids.push_back(id);
    Rng rng(derive_seed(spec.seed, "synth-speaker:" + id));

    Eigen::VectorXd base(spec.dim);
    for (int d = 0; d < spec.dim; ++d) {
      base[d] = spec.separation * rng.gaussian();
    }
    Eigen::VectorXd weights(spec.components);
    for (int j = 0; j < spec.components; ++j) weights[j] = 0.5 + rng.uniform();
    weights /= weights.sum();

    Eigen::MatrixXd means(spec.dim, spec.components);
    Eigen::MatrixXd variances(spec.dim, spec.components);
    for (int j = 0; j < spec.components; ++j) {
      for (int d = 0; d < spec.dim; ++d) {
        means(d, j) = base[d] + rng.gaussian();
        variances(d, j) = 0.1 + 1.9 * rng.uniform();
      }
    }
    mean_max = std::max(mean_max, means.maxCoeff());
    var_max = std::max(var_max, variances.maxCoeff());
    corpus.truth.emplace(id, GmmModel(weights, means, variances));

    Eigen::MatrixXd rotation = Eigen::MatrixXd::Identity(spec.dim, spec.dim);
    if (spec.correlate) rotation = random_orthogonal(spec.dim, rng);
    corpus.rotations.emplace(id, std::move(rotation));
  }

  // Contamination source: at least 10 standard deviations beyond every
  // speaker mean in every coordinate.
  corpus.outlier_mean =
      Eigen::VectorXd::Constant(spec.dim, mean_max + 10.0 * std::sqrt(var_max));

  // Utterances.
  for (const std::string& id : ids) {
    const GmmModel& truth = corpus.truth.at(id);
    const Eigen::MatrixXd& rotation = corpus.rotations.at(id);
    for (int u = 0; u < spec.utterances_per_speaker; ++u) {
      Rng rng(derive_seed(spec.seed,
                          "synth-utt:" + id + ":" + std::to_string(u)));
      Eigen::MatrixXd x(spec.dim, spec.frames_per_utterance);
      for (int m = 0; m < spec.frames_per_utterance; ++m) {
        const int j = pick_component(truth.weights(), rng);
        for (int d = 0; d < spec.dim; ++d) {
          x(d, m) = truth.means()(d, j) +
                    std::sqrt(truth.variances()(d, j)) * rng.gaussian();
        }
      }
      if (u >= spec.clean_utterances && spec.contamination_frac > 0.0) {
        const int m_total = spec.frames_per_utterance;
        const int m_bad =
            static_cast<int>(spec.contamination_frac * m_total);
        std::vector<int> order(m_total);
        std::iota(order.begin(), order.end(), 0);
        for (int i = 0; i < m_bad; ++i) {
          const int j =
              i + static_cast<int>(rng.uniform_below(
                      static_cast<std::uint64_t>(m_total - i)));
          std::swap(order[i], order[j]);
          for (int d = 0; d < spec.dim; ++d) {
            x(d, order[i]) = corpus.outlier_mean[d] + rng.gaussian();
          }
        }
      }
      if (spec.correlate) x = rotation * x;

      ManifestEntry entry;
      entry.speaker_id = id;
      entry.utterance_index = u;
      entry.path = "synth://" + id + "/" + std::to_string(u);
      corpus.manifest.entries.push_back(std::move(entry));
      corpus.frames.emplace(std::make_pair(id, u), std::move(x));
    }
  }
  return corpus;
}

FeatureProvider SynthCorpus::provider() const {
  auto table = std::make_shared<
      std::map<std::pair<std::string, int>, Eigen::MatrixXd>>(frames);
  return [table](const ManifestEntry& entry, const FeatureConfig& config) {
    const auto it =
        table->find(std::make_pair(entry.speaker_id, entry.utterance_index));
    if (it == table->end()) {
      throw DataError("no synthetic frames for speaker '" + entry.speaker_id +
                      "' utterance " + std::to_string(entry.utterance_index));
    }
    FeatureMatrix out;
    out.values = it->second;
    out.config_fingerprint = config.fingerprint();
    return out;
  };
}

void WavSynthSpec::validate() const {
  if (num_speakers < 1 || utterances_per_speaker < 1) {
    throw DataError("synthetic corpus counts must all be >= 1");
  }
  if (clean_utterances < 0 || clean_utterances > utterances_per_speaker) {
    throw DataError("clean_utterances must lie in [0, utterances_per_speaker]");
  }
  if (!(contamination_frac >= 0.0 && contamination_frac < 1.0)) {
    throw DataError("contamination fraction must lie in [0, 1)");
  }
  if (!(utterance_seconds > 0.0) || sample_rate < 1000) {
    throw DataError("need positive duration and sample rate >= 1000 Hz");
  }
}

CorpusManifest synth_wav_corpus(const WavSynthSpec& spec,
                                const std::string& out_dir) {
  spec.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw DataError("cannot create directory '" + out_dir + "'");

  constexpr int kFormants = 3;
  const int n = std::max(1, static_cast<int>(std::lround(
                                spec.utterance_seconds * spec.sample_rate)));
  const int block = std::max(1, spec.sample_rate / 50);  // 20 ms blocks

  CorpusManifest manifest;
  std::string manifest_text =
      "# speaker<TAB>utterance<TAB>path, generated corpus\n";

  for (int s = 0; s < spec.num_speakers; ++s) {
    const std::string id = speaker_name(s, spec.num_speakers);
    Rng speaker_rng(derive_seed(spec.seed, "wav-speaker:" + id));
    double freqs[kFormants];
    double amps[kFormants];
    const double nyquist_cap = std::min(3400.0, 0.45 * spec.sample_rate);
    for (int k = 0; k < kFormants; ++k) {
      freqs[k] = 300.0 + (nyquist_cap - 300.0) * speaker_rng.uniform();
      amps[k] = 0.12 + 0.12 * speaker_rng.uniform();
    }

    for (int u = 0; u < spec.utterances_per_speaker; ++u) {
      Rng rng(derive_seed(spec.seed, "wav-utt:" + id + ":" + std::to_string(u)));
      AudioSignal signal;
      signal.sample_rate = spec.sample_rate;
      signal.samples.resize(n);

      double phase[kFormants] = {0.0, 0.0, 0.0};
      double jitter[kFormants] = {1.0, 1.0, 1.0};
      const bool contaminate =
          u >= spec.clean_utterances && spec.contamination_frac > 0.0;
      bool in_burst = false;
      for (int i = 0; i < n; ++i) {
        if (i % block == 0) {
          for (int k = 0; k < kFormants; ++k) {
            jitter[k] = 1.0 + 0.02 * (2.0 * rng.uniform() - 1.0);
          }
          in_burst = contaminate && rng.uniform() < spec.contamination_frac;
        }
        double v = 0.0;
        if (in_burst) {
          v = 0.6 * (2.0 * rng.uniform() - 1.0);  // wideband noise block
        } else {
          for (int k = 0; k < kFormants; ++k) {
            phase[k] += 2.0 * M_PI * freqs[k] * jitter[k] / spec.sample_rate;
            v += amps[k] * std::sin(phase[k]);
          }
          v += 0.005 * rng.gaussian();
        }
        signal.samples[i] = v;
      }

      char name[64];
      std::snprintf(name, sizeof name, "%s_%02d.wav", id.c_str(), u);
      const std::string path =
          (std::filesystem::path(out_dir) / name).string();
      save_wav(path, signal);

      ManifestEntry entry;
      entry.speaker_id = id;
      entry.utterance_index = u;
      entry.path = path;
      manifest.entries.push_back(std::move(entry));
      manifest_text += id + "\t" + std::to_string(u) + "\t" + name + "\n";
    }
  }

  write_text_file((std::filesystem::path(out_dir) / "manifest.tsv").string(),
                  manifest_text);
  return manifest;
}

}  // namespace disparity
