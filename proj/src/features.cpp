#include "disparity/features.hpp"

#include <fftw3.h>

#include <cctype>
#include <cmath>
#include <cstdio>
#include <mutex>

#include "disparity/errors.hpp"

namespace disparity {
namespace {

// FFTW planning is not thread-safe; execution on distinct plans is.
std::mutex& fftw_plan_mutex() {
  static std::mutex m;
  return m;
}

class RealFft {
 public:
  explicit RealFft(int n) : n_(n) {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex());
    in_ = fftw_alloc_real(n);
    out_ = fftw_alloc_complex(n / 2 + 1);
    plan_ = fftw_plan_dft_r2c_1d(n, in_, out_, FFTW_ESTIMATE);
    if (plan_ == nullptr) throw NumericError("FFTW plan creation failed");
  }

  ~RealFft() {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex());
    fftw_destroy_plan(plan_);
    fftw_free(in_);
    fftw_free(out_);
  }

  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  // Power spectrum |X_k|^2 for k = 0..n/2 of a zero-padded input column.
  Eigen::VectorXd power_spectrum(const Eigen::VectorXd& frame) {
    const int len = static_cast<int>(frame.size());
    for (int i = 0; i < len; ++i) in_[i] = frame[i];
    for (int i = len; i < n_; ++i) in_[i] = 0.0;
    fftw_execute(plan_);
    Eigen::VectorXd power(n_ / 2 + 1);
    for (int k = 0; k <= n_ / 2; ++k) {
      power[k] = out_[k][0] * out_[k][0] + out_[k][1] * out_[k][1];
    }
    return power;
  }

 private:
  int n_;
  double* in_;
  fftw_complex* out_;
  fftw_plan plan_;
};

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// DCT-II with orthonormal scaling, rows = the selected coefficients.
Eigen::MatrixXd dct_rows(int num_filters, int first_coeff, int num_coeffs) {
  Eigen::MatrixXd dct(num_coeffs, num_filters);
  for (int r = 0; r < num_coeffs; ++r) {
    const int k = first_coeff + r;
    const double scale =
        (k == 0) ? std::sqrt(1.0 / num_filters) : std::sqrt(2.0 / num_filters);
    for (int n = 0; n < num_filters; ++n) {
      dct(r, n) = scale * std::cos(M_PI * k * (2.0 * n + 1.0) / (2.0 * num_filters));
    }
  }
  return dct;
}

}  // namespace

std::string window_function_name(WindowFunction w) {
  switch (w) {
    case WindowFunction::kHamming:
      return "hamming";
    case WindowFunction::kRectangular:
      return "rectangular";
  }
  return "hamming";
}

WindowFunction parse_window_function(const std::string& name) {
  std::string s = name;
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (s == "hamming") return WindowFunction::kHamming;
  if (s == "rectangular" || s == "rect") return WindowFunction::kRectangular;
  throw DataError("unknown window function: " + name);
}

void FeatureConfig::validate(int sample_rate) const {
  if (sample_rate <= 0) throw DataError("sample rate must be positive");
  if (!(window_size > 0.0)) throw DataError("window_size must be positive");
  if (!(window_shift > 0.0) || window_shift > window_size) {
    throw DataError("window_shift must satisfy 0 < shift <= window_size");
  }
  if (num_filters < 1) throw DataError("num_filters must be >= 1");
  if (num_ceps < 1) throw DataError("num_ceps must be >= 1");
  const int max_ceps = include_c0 ? num_filters : num_filters - 1;
  if (num_ceps > max_ceps) {
    throw DataError("num_ceps (" + std::to_string(num_ceps) +
                    ") exceeds available DCT coefficients (" +
                    std::to_string(max_ceps) + " with " +
                    std::to_string(num_filters) + " filters)");
  }
  const double nyquist = sample_rate / 2.0;
  const double hi = max_freq == 0.0 ? nyquist : max_freq;
  if (min_freq < 0.0 || min_freq >= hi || hi > nyquist) {
    throw DataError("frequency band must satisfy 0 <= min_freq < max_freq <= "
                    "sample_rate/2");
  }
  if (pre_emphasis < 0.0 || pre_emphasis >= 1.0) {
    throw DataError("pre_emphasis must lie in [0, 1)");
  }
}

std::uint64_t FeatureConfig::fingerprint() const {
  std::string canon;
  canon += "ws=" + format_double(window_size);
  canon += ";sh=" + format_double(window_shift);
  canon += ";nf=" + std::to_string(num_filters);
  canon += ";nc=" + std::to_string(num_ceps);
  canon += ";lo=" + format_double(min_freq);
  canon += ";hi=" + format_double(max_freq);
  canon += ";dl=" + std::to_string(use_delta ? 1 : 0);
  canon += ";c0=" + std::to_string(include_c0 ? 1 : 0);
  canon += ";pe=" + format_double(pre_emphasis);
  canon += ";wf=" + window_function_name(window_function);
  return fnv1a(canon);
}

FrameSet frame_signal(const AudioSignal& signal, const FeatureConfig& config) {
  config.validate(signal.sample_rate);
  const int n = static_cast<int>(signal.samples.size());
  if (n == 0) throw DataError("empty signal");
  const int frame_len =
      static_cast<int>(std::lrint(config.window_size * signal.sample_rate));
  const int frame_shift =
      static_cast<int>(std::lrint(config.window_shift * signal.sample_rate));
  if (frame_len < 2) throw DataError("window shorter than two samples");
  if (frame_shift < 1) throw DataError("window shift shorter than one sample");
  if (n < frame_len) {
    throw DataError("signal shorter than one window (" + std::to_string(n) +
                    " < " + std::to_string(frame_len) + " samples)");
  }

  std::vector<double> emphasized(signal.samples);
  const double c = config.pre_emphasis;
  if (c > 0.0) {
    for (int i = n - 1; i >= 1; --i) {
      emphasized[i] -= c * emphasized[i - 1];
    }
  }

  Eigen::VectorXd window(frame_len);
  for (int i = 0; i < frame_len; ++i) {
    window[i] = config.window_function == WindowFunction::kHamming
                    ? 0.54 - 0.46 * std::cos(2.0 * M_PI * i / (frame_len - 1))
                    : 1.0;
  }

  const int num_frames = (n - frame_len) / frame_shift + 1;
  FrameSet out;
  out.sample_rate = signal.sample_rate;
  out.frames.resize(frame_len, num_frames);
  for (int f = 0; f < num_frames; ++f) {
    const int start = f * frame_shift;
    for (int i = 0; i < frame_len; ++i) {
      out.frames(i, f) = emphasized[start + i] * window[i];
    }
  }
  return out;
}

namespace detail {

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

int next_pow2(int n) {
  int p = 1;
  while (p < n) p *= 2;
  return p;
}

Eigen::MatrixXd mel_filterbank(const FeatureConfig& config, int nfft,
                               int sample_rate) {
  const int num_bins = nfft / 2 + 1;
  const double hi = config.max_freq == 0.0 ? sample_rate / 2.0 : config.max_freq;
  const double mel_lo = hz_to_mel(config.min_freq);
  const double mel_hi = hz_to_mel(hi);
  const int k = config.num_filters;

  // K + 2 equally spaced mel points; filter j spans points j-1 .. j+1 with
  // triangles linear in mel.
  Eigen::VectorXd mel_points(k + 2);
  for (int i = 0; i < k + 2; ++i) {
    mel_points[i] = mel_lo + (mel_hi - mel_lo) * i / (k + 1);
  }

  Eigen::MatrixXd fb = Eigen::MatrixXd::Zero(k, num_bins);
  for (int bin = 0; bin < num_bins; ++bin) {
    const double freq = static_cast<double>(bin) * sample_rate / nfft;
    const double mel = hz_to_mel(freq);
    for (int j = 0; j < k; ++j) {
      const double left = mel_points[j];
      const double center = mel_points[j + 1];
      const double right = mel_points[j + 2];
      if (mel <= left || mel >= right) continue;
      fb(j, bin) = mel < center ? (mel - left) / (center - left)
                                : (right - mel) / (right - center);
    }
  }
  return fb;
}

Eigen::VectorXd mel_filter_centers(const FeatureConfig& config,
                                   int sample_rate) {
  const double hi = config.max_freq == 0.0 ? sample_rate / 2.0 : config.max_freq;
  const double mel_lo = hz_to_mel(config.min_freq);
  const double mel_hi = hz_to_mel(hi);
  Eigen::VectorXd centers(config.num_filters);
  for (int j = 0; j < config.num_filters; ++j) {
    centers[j] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * (j + 1) / (config.num_filters + 1));
  }
  return centers;
}

}  // namespace detail

FeatureMatrix mfcc(const FrameSet& frames, const FeatureConfig& config) {
  const int num_frames = static_cast<int>(frames.frames.cols());
  if (num_frames == 0) throw DataError("no frames to extract MFCCs from");
  config.validate(frames.sample_rate);

  const int frame_len = static_cast<int>(frames.frames.rows());
  const int nfft = detail::next_pow2(frame_len);
  const Eigen::MatrixXd fb =
      detail::mel_filterbank(config, nfft, frames.sample_rate);
  const int first_coeff = config.include_c0 ? 0 : 1;
  const Eigen::MatrixXd dct = dct_rows(config.num_filters, first_coeff,
                                       config.num_ceps);

  RealFft fft(nfft);
  FeatureMatrix out;
  out.values.resize(config.num_ceps, num_frames);
  for (int f = 0; f < num_frames; ++f) {
    const Eigen::VectorXd power = fft.power_spectrum(frames.frames.col(f));
    Eigen::VectorXd energies = fb * power;
    for (int j = 0; j < energies.size(); ++j) {
      energies[j] = std::log(std::max(energies[j], kLogEnergyFloor));
    }
    out.values.col(f) = dct * energies;
  }
  out.config_fingerprint = config.fingerprint();
  return out;
}

FeatureMatrix delta(const FeatureMatrix& features) {
  if (features.num_frames() < 2) {
    throw DataError("delta requires at least two frames");
  }
  FeatureMatrix out;
  out.config_fingerprint = features.config_fingerprint;
  out.values.resize(features.dim(), features.num_frames());
  out.values.col(0).setZero();
  for (int t = 1; t < features.num_frames(); ++t) {
    out.values.col(t) = features.values.col(t) - features.values.col(t - 1);
  }
  return out;
}

FeatureMatrix build_features(const AudioSignal& signal,
                             const FeatureConfig& config) {
  const FrameSet frames = frame_signal(signal, config);
  FeatureMatrix ceps = mfcc(frames, config);
  if (!config.use_delta) return ceps;

  const FeatureMatrix deltas = delta(ceps);
  FeatureMatrix out;
  out.config_fingerprint = config.fingerprint();
  out.values.resize(2 * ceps.dim(), ceps.num_frames());
  out.values.topRows(ceps.dim()) = ceps.values;
  out.values.bottomRows(ceps.dim()) = deltas.values;
  return out;
}

}  // namespace disparity
