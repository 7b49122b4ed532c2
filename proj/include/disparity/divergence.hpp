#pragma once

#include <array>
#include <string>
#include <vector>

namespace disparity {

// Disparity family used to compare a test utterance against a speaker model.
//
// Every family is defined through a convex function C with C(0) = 0 applied
// to the Pearson residual delta = g/f - 1 between the data density g and the
// model density f.  kLD is the likelihood disparity (whose minimizer is the
// MLE), kHD the (twice, squared) Hellinger distance, and kPCS the Pearson
// chi-square divergence.
enum class Measure { kLD, kHD, kPCS };

// Two estimation flavours built on the same disparity families.
//
// Type I scores frames with objective functions whose maximizers coincide
// with the corresponding minimum-disparity estimators; Type II divides the
// disparity generator by (delta + 1), shifting weight toward frames the
// model explains well.
enum class Estimator { kTypeI = 1, kTypeII = 2 };

inline constexpr std::array<Measure, 3> kAllMeasures = {
    Measure::kLD, Measure::kHD, Measure::kPCS};
inline constexpr std::array<Estimator, 2> kAllEstimators = {
    Estimator::kTypeI, Estimator::kTypeII};

std::string measure_name(Measure measure);      // "ld", "hd", "pcs"
Measure parse_measure(const std::string& name);  // case-insensitive
std::string estimator_name(Estimator estimator);  // "1", "2"
Estimator parse_estimator(const std::string& name);

// Disparity generator C(delta) for delta in [-1, inf).
//
//   LD : (delta+1) log(delta+1) - delta   (limit value 1 at delta = -1)
//   HD : 2 (sqrt(delta+1) - 1)^2
//   PCS: delta^2 / 2
//
// All satisfy C(0) = 0, C''(0) = 1, and convexity on the domain.
double disparity_c(Measure measure, double delta);

// Residual adjustment function A(delta) = C'(delta)(delta+1) - C(delta).
//
//   LD : delta                       (linear: classical MLE weighting)
//   HD : 2 (sqrt(delta+1) - 1)      (concave: shrinks large residuals)
//   PCS: delta + delta^2 / 2        (convex: amplifies large residuals)
//
// All satisfy A(0) = 0 and A'(0) = 1 and increase strictly on [-1, inf).
double raf(Measure measure, double delta);

// Power rescaling delta* = sign(delta) |delta|^beta with beta > 0.
//
// Monotone and sign-preserving, it compresses large residuals (beta < 1)
// while keeping delta* >= -1, so rescaled residuals stay in the C domain.
double rescale_residual(double delta, double beta);

// Pearson residual from log densities: exp(log_g - log_f) - 1.
//
// The log ratio is clamped to [-700, 700] before exponentiation so the
// result is always finite; if both logs are infinite with the same sign the
// ratio carries no information and the residual is defined as 0.
double pearson_residual(double log_g, double log_f);

// Fraction of frames discarded from each tail of the residual order
// statistics before scoring.  Each fraction lies in [0, 1) and together
// they must leave at least one frame.
struct TrimSpec {
  double low_frac = 0.0;   // Fraction of smallest values dropped.
  double high_frac = 0.0;  // Fraction of largest values dropped.

  bool active() const { return low_frac > 0.0 || high_frac > 0.0; }
  void validate() const;
};

// Indices kept after two-sided trimming of `values`.
//
// Exactly floor(low_frac * M) smallest and floor(high_frac * M) largest
// entries are removed; ties are broken by ascending position so the result
// is deterministic.  The survivors come back in ascending position order.
std::vector<int> trimmed_indices(const std::vector<double>& values,
                                 const TrimSpec& trim);

// Inclusive arithmetic grid over the residual domain, for tabulating RAFs.
struct GridSpec {
  double start = -0.99;
  double stop = 5.0;
  double step = 0.01;

  // The grid points. When start is an integer multiple of step the points
  // are generated as exact multiples, so landmarks like 0 appear exactly.
  // Throws DataError when the grid is empty, descending, or dips below -1.
  std::vector<double> points() const;
};

// CSV tabulation of all three adjustment functions over the grid: header
// `delta,A_LD,A_HD,A_PCS`, one row per point, full double precision.
std::string raf_curve_csv(const std::vector<double>& grid);

// How one utterance is scored against one speaker model.
struct ScoringConfig {
  Measure measure = Measure::kLD;
  Estimator estimator = Estimator::kTypeI;
  double beta = 0.2;  // Residual rescaling exponent (ignored by LD Type I).
  TrimSpec trim;

  // True when the configuration needs the test-utterance density g --
  // every combination except the likelihood disparity of Type I, which
  // reduces to the plain log likelihood of the speaker model.
  bool needs_test_density() const {
    return !(measure == Measure::kLD && estimator == Estimator::kTypeI);
  }
  void validate() const;
};

// Score contribution of a single frame (before any trimming).
//
//   Type I LD : log_f                      (g never enters)
//   Type I HD : 1 / sqrt(delta* + 1)
//   Type I PCS: -(delta* + 1)
//   Type II   : -C(delta*) / (delta* + 1)  (any measure)
//
// delta* is the rescaled residual; (delta* + 1) is clamped below at 1e-12
// before divisions and square roots.  Larger scores always mean a better
// match, so identification reduces to an argmax.
double score_term(const ScoringConfig& config, double log_g, double log_f);

// Total utterance score: frames are ordered by residual (Type I LD uses
// -log_f, which induces the same order), trimmed per `config.trim`, and the
// surviving frames' score terms are summed.
//
// `log_g` may be empty when the configuration does not need the test
// density; otherwise it must match `log_f` in size.
double utterance_score(const std::vector<double>& log_g,
                       const std::vector<double>& log_f,
                       const ScoringConfig& config);

}  // namespace disparity

