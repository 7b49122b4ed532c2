#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "disparity/audio.hpp"

namespace disparity {

enum class WindowFunction { kHamming, kRectangular };

std::string window_function_name(WindowFunction w);
WindowFunction parse_window_function(const std::string& name);

// Framing and filterbank parameters for MFCC extraction.
//
// max_freq == 0 means "use the Nyquist frequency of the signal"; it is
// resolved when a sample rate is known. Coefficient c0 is excluded by
// default, so num_ceps selects DCT coefficients 1..num_ceps and must stay
// below num_filters; with include_c0 the selection is 0..num_ceps-1.
struct FeatureConfig {
  double window_size = 0.025;   // seconds
  double window_shift = 0.010;  // seconds
  int num_filters = 26;
  int num_ceps = 13;
  double min_freq = 0.0;  // Hz
  double max_freq = 0.0;  // Hz, 0 = Nyquist
  bool use_delta = false;
  bool include_c0 = false;
  double pre_emphasis = 0.97;
  WindowFunction window_function = WindowFunction::kHamming;

  // Feature rows produced by build_features under this config.
  int feature_dim() const { return use_delta ? 2 * num_ceps : num_ceps; }

  // Checks the config against a concrete sample rate; throws DataError.
  void validate(int sample_rate) const;

  // Stable FNV-1a hash of every field; stamped onto extracted features and
  // trained models so mismatched pairings are caught.
  std::uint64_t fingerprint() const;
};

// Column-per-frame feature matrix: dim rows, num_frames columns.
struct FeatureMatrix {
  Eigen::MatrixXd values;
  std::uint64_t config_fingerprint = 0;

  int dim() const { return static_cast<int>(values.rows()); }
  int num_frames() const { return static_cast<int>(values.cols()); }
};

// Pre-emphasized, windowed frames of one signal (column per frame).
struct FrameSet {
  Eigen::MatrixXd frames;
  int sample_rate = 0;
};

// Cuts the signal into overlapping frames: pre-emphasis y[n] = x[n] - c*x[n-1]
// over the whole signal (y[0] = x[0]), then frames of window_size seconds
// every window_shift seconds, each multiplied by the window function.
// Frame count is floor((N - L)/S) + 1; a signal shorter than one window is
// an error.
FrameSet frame_signal(const AudioSignal& signal, const FeatureConfig& config);

// Per frame: zero-padded FFT (size = next power of two >= frame length),
// power spectrum, triangular mel filterbank on [min_freq, max_freq] with
// mel(f) = 2595*log10(1 + f/700), log energies floored at 1e-10, DCT-II.
FeatureMatrix mfcc(const FrameSet& frames, const FeatureConfig& config);

// First-order frame-to-frame differences; column 0 is zero so frame counts
// stay aligned. Requires at least two frames.
FeatureMatrix delta(const FeatureMatrix& features);

// Full pipeline: framing, MFCCs, optional delta rows stacked beneath the
// MFCC rows. Stamps the config fingerprint.
FeatureMatrix build_features(const AudioSignal& signal,
                             const FeatureConfig& config);

// Energy floor applied before the log in mfcc().
inline constexpr double kLogEnergyFloor = 1e-10;

namespace detail {
double hz_to_mel(double hz);
double mel_to_hz(double mel);
int next_pow2(int n);
// Filterbank weight matrix: num_filters x (nfft/2 + 1).
Eigen::MatrixXd mel_filterbank(const FeatureConfig& config, int nfft,
                               int sample_rate);
// Center frequencies (Hz) of the filters, for diagnostics and tests.
Eigen::VectorXd mel_filter_centers(const FeatureConfig& config,
                                   int sample_rate);
}  // namespace detail

}  // namespace disparity
