#include "disparity/divergence.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "disparity/errors.hpp"

namespace disparity {
namespace {

constexpr double kLogRatioClamp = 700.0;
constexpr double kMinShiftedResidual = 1e-12;

void check_domain(double delta) {
  if (std::isnan(delta) || delta < -1.0) {
    throw std::invalid_argument("residual must lie in [-1, inf), got " +
                                std::to_string(delta));
  }
}

std::string to_lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

}  // namespace

std::string measure_name(Measure measure) {
  switch (measure) {
    case Measure::kLD:
      return "ld";
    case Measure::kHD:
      return "hd";
    case Measure::kPCS:
      return "pcs";
  }
  throw std::invalid_argument("unknown measure");
}

Measure parse_measure(const std::string& name) {
  const std::string s = to_lower(name);
  if (s == "ld") return Measure::kLD;
  if (s == "hd") return Measure::kHD;
  if (s == "pcs") return Measure::kPCS;
  throw DataError("unknown measure '" + name + "' (expected ld, hd, or pcs)");
}

std::string estimator_name(Estimator estimator) {
  return estimator == Estimator::kTypeI ? "1" : "2";
}

Estimator parse_estimator(const std::string& name) {
  const std::string s = to_lower(name);
  if (s == "1" || s == "i" || s == "type1" || s == "typei") {
    return Estimator::kTypeI;
  }
  if (s == "2" || s == "ii" || s == "type2" || s == "typeii") {
    return Estimator::kTypeII;
  }
  throw DataError("unknown estimator '" + name + "' (expected 1 or 2)");
}

double disparity_c(Measure measure, double delta) {
  check_domain(delta);
  switch (measure) {
    case Measure::kLD: {
      const double s = delta + 1.0;
      if (s <= 0.0) return 1.0;  // limit of s log s - s + 1 as s -> 0+
      return s * std::log(s) - delta;
    }
    case Measure::kHD: {
      const double t = std::sqrt(delta + 1.0) - 1.0;
      return 2.0 * t * t;
    }
    case Measure::kPCS:
      return 0.5 * delta * delta;
  }
  throw std::invalid_argument("unknown measure");
}

double raf(Measure measure, double delta) {
  check_domain(delta);
  switch (measure) {
    case Measure::kLD:
      return delta;
    case Measure::kHD:
      return 2.0 * (std::sqrt(delta + 1.0) - 1.0);
    case Measure::kPCS:
      return delta + 0.5 * delta * delta;
  }
  throw std::invalid_argument("unknown measure");
}

double rescale_residual(double delta, double beta) {
  check_domain(delta);
  if (!(beta > 0.0)) {
    throw std::invalid_argument("rescaling exponent must be positive");
  }
  if (delta == 0.0) return 0.0;
  const double mag = std::pow(std::abs(delta), beta);
  return delta > 0.0 ? mag : -mag;
}

double pearson_residual(double log_g, double log_f) {
  const double diff = log_g - log_f;
  if (std::isnan(diff)) return 0.0;  // both densities vanish: no information
  return std::expm1(std::clamp(diff, -kLogRatioClamp, kLogRatioClamp));
}

void TrimSpec::validate() const {
  if (!(low_frac >= 0.0) || !(high_frac >= 0.0)) {
    throw DataError("trim fractions must be non-negative");
  }
  if (low_frac + high_frac >= 1.0) {
    throw DataError("trim fractions must leave at least one frame (sum " +
                    std::to_string(low_frac + high_frac) + " >= 1)");
  }
}

std::vector<int> trimmed_indices(const std::vector<double>& values,
                                 const TrimSpec& trim) {
  trim.validate();
  const int m = static_cast<int>(values.size());
  if (m == 0) throw DataError("cannot trim an empty value list");
  for (double v : values) {
    if (std::isnan(v)) throw NumericError("trimming input contains NaN");
  }

  const int n_low = static_cast<int>(std::floor(trim.low_frac * m));
  const int n_high = static_cast<int>(std::floor(trim.high_frac * m));
  if (n_low + n_high >= m) {
    throw DataError("trimming would remove every frame");
  }

  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (values[a] != values[b]) return values[a] < values[b];
    return a < b;  // ties broken by ascending frame position
  });

  std::vector<int> kept(order.begin() + n_low, order.end() - n_high);
  std::sort(kept.begin(), kept.end());
  return kept;
}

std::vector<double> GridSpec::points() const {
  if (!(step > 0.0)) throw DataError("grid step must be positive");
  if (stop < start) throw DataError("grid stop must not precede start");
  if (start < -1.0) throw DataError("residual grid cannot go below -1");
  const long long n =
      static_cast<long long>(std::floor((stop - start) / step + 1e-9)) + 1;

  // When start/step is (numerically) an integer, build points as exact
  // multiples of step so landmarks like delta = 0 are hit exactly instead
  // of accumulating rounding error.
  const double ratio = start / step;
  const long long m0 = std::llround(ratio);
  const bool aligned = std::abs(m0 - ratio) < 1e-9;

  std::vector<double> out;
  out.reserve(static_cast<size_t>(n));
  for (long long k = 0; k < n; ++k) {
    double p = aligned ? static_cast<double>(m0 + k) * step
                       : start + static_cast<double>(k) * step;
    if (p < -1.0 && p > -1.0 - 1e-9) p = -1.0;
    out.push_back(p);
  }
  return out;
}

std::string raf_curve_csv(const std::vector<double>& grid) {
  std::string out = "delta,A_LD,A_HD,A_PCS\n";
  char buf[128];
  for (double d : grid) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", d,
                  raf(Measure::kLD, d), raf(Measure::kHD, d),
                  raf(Measure::kPCS, d));
    out += buf;
  }
  return out;
}

void ScoringConfig::validate() const {
  if (!(beta > 0.0)) throw DataError("beta must be positive");
  trim.validate();
}

double score_term(const ScoringConfig& config, double log_g, double log_f) {
  if (config.measure == Measure::kLD && config.estimator == Estimator::kTypeI) {
    return log_f;
  }
  const double delta = pearson_residual(log_g, log_f);
  const double rescaled = rescale_residual(delta, config.beta);
  const double shifted = std::max(rescaled + 1.0, kMinShiftedResidual);
  if (config.estimator == Estimator::kTypeII) {
    return -disparity_c(config.measure, rescaled) / shifted;
  }
  switch (config.measure) {
    case Measure::kHD:
      return 1.0 / std::sqrt(shifted);
    case Measure::kPCS:
      return -shifted;
    default:
      throw std::invalid_argument("unknown measure/estimator combination");
  }
}

double utterance_score(const std::vector<double>& log_g,
                       const std::vector<double>& log_f,
                       const ScoringConfig& config) {
  config.validate();
  const int m = static_cast<int>(log_f.size());
  if (m == 0) throw DataError("cannot score an utterance with no frames");
  const bool needs_g = config.needs_test_density();
  if (needs_g && log_g.size() != log_f.size()) {
    throw DataError("log-density vectors disagree in length (" +
                    std::to_string(log_g.size()) + " vs " +
                    std::to_string(log_f.size()) + ")");
  }

  std::vector<int> kept;
  if (config.trim.active()) {
    // Order frames by residual.  Type I LD never evaluates g; because g is
    // the same density on every frame, the residual order coincides with the
    // order of -log_f, which serves as the trimming key.
    std::vector<double> keys(m);
    for (int i = 0; i < m; ++i) {
      keys[i] = needs_g ? pearson_residual(log_g[i], log_f[i]) : -log_f[i];
    }
    kept = trimmed_indices(keys, config.trim);
  } else {
    kept.resize(m);
    std::iota(kept.begin(), kept.end(), 0);
  }

  double total = 0.0;
  for (int i : kept) {
    total += score_term(config, needs_g ? log_g[i] : 0.0, log_f[i]);
  }
  return total;
}

}  // namespace disparity
