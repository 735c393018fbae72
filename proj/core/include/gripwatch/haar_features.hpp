#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gripwatch/tactile.hpp"

namespace gripwatch {

// How the window statistics are normalised. WindowLength divides sums over
// n_w/2 coefficients by n_w; CoefficientCount divides by n_w/2.
enum class DenominatorMode { WindowLength, CoefficientCount };

std::string_view to_string(DenominatorMode mode) noexcept;
DenominatorMode denominator_mode_from_string(std::string_view name);

inline constexpr std::size_t kDefaultWindow = 14;

struct DwtConfig {
  std::size_t n_w = kDefaultWindow;
  DenominatorMode denominator_mode = DenominatorMode::WindowLength;

  /// Throws InvalidConfig unless n_w is even and at least 2.
  void validate() const;
};

/// Single-level orthonormal Haar split of one window.
struct HaarDecomposition {
  std::vector<double> approximations;
  std::vector<double> details;
};

/// Pairs (x[2j], x[2j+1]) are taken from the oldest sample forward:
///   a[j] = (x[2j] + x[2j+1]) / sqrt(2),  d[j] = (x[2j] - x[2j+1]) / sqrt(2).
HaarDecomposition haar_decompose(std::span<const double> window, const DwtConfig& config);

/// Moving average of the approximation coefficients.
double compute_m(const HaarDecomposition& decomp, const DwtConfig& config);

/// Standard deviation of the detail coefficients around their mean.
double compute_sigma(const HaarDecomposition& decomp, const DwtConfig& config);

/// Sum of squared detail coefficients.
double detail_energy(const HaarDecomposition& decomp);

enum class Feature : std::size_t { Fa = 0, Fx, Fy, Fz, M, Sigma };
inline constexpr std::size_t kFeatureCount = 6;
inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "fa", "fx", "fy", "fz", "m", "sigma"};

/// Per-step feature vector [F_a, F_x, F_y, F_z, m, sigma]. `fx_detail_energy`
/// is carried alongside for the detail-energy threshold baseline and is not
/// part of the classifier input.
struct FeatureVector {
  double timestamp = 0.0;
  double f_a = 0.0;
  Vec3 f_tip = Vec3::Zero();
  double m = 0.0;
  double sigma = 0.0;
  double fx_detail_energy = 0.0;
  std::optional<int> label;  // 1 = stable, 0 = unstable

  std::array<double, kFeatureCount> values() const noexcept {
    return {f_a, f_tip.x(), f_tip.y(), f_tip.z(), m, sigma};
  }
};

/// Causal sliding-window extractor for one fingertip stream. Holds the last
/// n_w samples in a ring buffer; emits one feature vector per sample once
/// the window is full.
class FeatureExtractor {
 public:
  explicit FeatureExtractor(DwtConfig config = {});

  /// Throws OutOfOrderTimestamp when the stream goes backwards in time.
  std::optional<FeatureVector> push(const ForceSample& sample);

  /// Decomposition of the window behind the most recent emitted vector.
  const HaarDecomposition& last_decomposition() const noexcept { return decomp_; }

  bool warm() const noexcept { return count_ >= config_.n_w; }
  std::size_t samples_seen() const noexcept { return count_; }
  const DwtConfig& config() const noexcept { return config_; }
  void reset();

 private:
  DwtConfig config_;
  std::vector<double> amplitude_ring_;
  std::vector<double> fx_ring_;
  std::vector<double> window_;
  std::size_t head_ = 0;
  std::size_t count_ = 0;
  std::optional<double> last_timestamp_;
  HaarDecomposition decomp_;
  HaarDecomposition fx_decomp_;
};

/// Feature rows of one recorded or simulated episode.
struct EpisodeFeatures {
  std::string name;
  std::vector<FeatureVector> rows;
};

/// Runs a fresh extractor over a whole sample sequence.
std::vector<FeatureVector> extract_stream(std::span<const ForceSample> samples,
                                          const DwtConfig& config);

}  // namespace gripwatch
