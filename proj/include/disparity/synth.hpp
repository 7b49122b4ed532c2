#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "disparity/corpus.hpp"
#include "disparity/gmm.hpp"

namespace disparity {

// Synthetic corpora with known ground truth. Two depths are offered:
// feature injection (frames sampled straight from per-speaker mixtures,
// exercising the modelling and scoring layers in isolation) and WAV
// rendering (sums of sinusoids written to disk, exercising the full
// pipeline including feature extraction).

struct SynthSpec {
  int num_speakers = 10;
  int utterances_per_speaker = 10;
  // Utterance indices below this are never contaminated; a split whose
  // train_count does not exceed it therefore trains on clean data only.
  int clean_utterances = 6;
  int frames_per_utterance = 200;
  int dim = 6;
  int components = 3;  // mixture components per ground-truth speaker

  // Scale of the speaker-to-speaker mean offsets; larger separates the
  // speakers more and raises the attainable accuracy.
  double separation = 3.0;

  // Fraction of frames in each non-clean utterance replaced by samples
  // from a fixed outlier Gaussian far from every speaker mean. In [0, 1).
  double contamination_frac = 0.0;

  // Rotate each speaker's frames by a random orthogonal matrix, so the
  // observed coordinates are correlated and a per-speaker principal
  // rotation genuinely helps a diagonal-covariance model.
  bool correlate = false;

  std::uint64_t seed = 1;

  void validate() const;
};

struct SynthCorpus {
  CorpusManifest manifest;
  // Raw frames per (speaker id, utterance index), already rotated and
  // contaminated as requested.
  std::map<std::pair<std::string, int>, Eigen::MatrixXd> frames;
  // Ground-truth generators, in the unrotated (latent) coordinates.
  std::map<std::string, GmmModel> truth;
  // Per-speaker observation rotations (identity unless correlate).
  std::map<std::string, Eigen::MatrixXd> rotations;
  // Mean of the contamination source, in latent coordinates.
  Eigen::VectorXd outlier_mean;

  // Feature provider serving the stored frames, stamped with whatever
  // feature configuration the caller passes so fingerprint checks hold.
  FeatureProvider provider() const;
};

// Deterministic in `spec.seed`: the same spec always yields the same
// corpus, independent of evaluation order.
SynthCorpus synth_corpus(const SynthSpec& spec);

struct WavSynthSpec {
  int num_speakers = 4;
  int utterances_per_speaker = 4;
  int clean_utterances = 4;          // as in SynthSpec
  double utterance_seconds = 1.0;
  int sample_rate = 16000;
  double contamination_frac = 0.0;   // noise bursts replacing speech blocks
  std::uint64_t seed = 1;

  void validate() const;
};

// Renders each speaker as a characteristic chord of sinusoids (per-speaker
// formant frequencies, slight per-utterance jitter), writes
// `<out_dir>/<speaker>_<index>.wav` files plus `<out_dir>/manifest.tsv`,
// and returns the manifest with resolved paths.
CorpusManifest synth_wav_corpus(const WavSynthSpec& spec,
                                const std::string& out_dir);

}  // namespace disparity
