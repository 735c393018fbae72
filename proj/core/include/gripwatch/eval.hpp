#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gripwatch/classify.hpp"
#include "gripwatch/episode_io.hpp"
#include "gripwatch/haar_features.hpp"
#include "gripwatch/tactile.hpp"

namespace gripwatch {

/// Positive class is 1 (stable): a false positive is an unstable sample
/// reported as stable.
struct ConfusionMatrix {
  std::uint64_t tp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const noexcept { return tp + tn + fp + fn; }
  void add(int truth, int predicted) noexcept;
  bool operator==(const ConfusionMatrix&) const = default;
};

/// Percentages; std::nullopt marks a rate whose denominator is zero.
struct EvalReport {
  ConfusionMatrix confusion;
  std::optional<double> acc;
  std::optional<double> fpr;
  std::optional<double> fnr;
  std::optional<double> fdr;
  bool degenerate = false;
};

EvalReport compute_metrics(const ConfusionMatrix& confusion);
std::optional<double> specificity(const ConfusionMatrix& confusion);
std::optional<double> recall(const ConfusionMatrix& confusion);

ConfusionMatrix evaluate(const LinearModel& model, std::span<const FeatureVector> features);

/// Aggregates every frame with `geometry`, runs one extractor per episode and
/// labels each feature vector with the label of the frame closing its window.
EpisodeFeatures extract_episode(const NamedEpisode& episode, const FingertipGeometry& geometry,
                                const DwtConfig& config);
std::vector<EpisodeFeatures> extract_features(std::span<const NamedEpisode> episodes,
                                              const FingertipGeometry& geometry, const DwtConfig& config);

std::vector<FeatureVector> pool(std::span<const EpisodeFeatures> episodes);

enum class SplitMode { SampleLevel, EpisodeLevel };

std::string_view to_string(SplitMode mode) noexcept;
SplitMode split_mode_from_string(std::string_view name);

/// Indices into the pooled (episode-major) row order.
struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

struct Split {
  std::vector<FeatureVector> train;
  std::vector<FeatureVector> test;
};

/// SampleLevel shuffles pooled rows; EpisodeLevel holds out whole episodes.
/// round(ratio * n) rows (or episodes) go to training. Throws InvalidConfig
/// or EmptyDataset.
SplitIndices split_indices(std::span<const EpisodeFeatures> episodes, double ratio, SplitMode mode,
                           std::uint64_t seed);
Split split_dataset(std::span<const EpisodeFeatures> episodes, double ratio, SplitMode mode,
                    std::uint64_t seed);

struct ExperimentConfig {
  TrainConfig train;
  DwtConfig dwt;
  double split_ratio = 0.8;
  SplitMode split_mode = SplitMode::SampleLevel;
  std::uint64_t split_seed = 42;
};

/// Train on the training split, report on the test split.
EvalReport train_and_evaluate(std::span<const EpisodeFeatures> episodes, const ExperimentConfig& config);

struct SweepRow {
  std::size_t n_w = 0;
  EvalReport report;
};

/// Re-extracts features for each window length and evaluates a LogReg model.
std::vector<SweepRow> window_sweep(std::span<const NamedEpisode> episodes, const FingertipGeometry& geometry,
                                   std::span<const std::size_t> n_w_values, const ExperimentConfig& config);

struct AblationRow {
  FeatureMask mask{};
  EvalReport report;
};

/// The 11 standard ablation masks over the groups F_a, F_tip, m, sigma.
std::vector<FeatureMask> standard_ablation_masks();

/// One LogReg per mask on identical splits. Throws InvalidConfig for a mask
/// that keeps no feature.
std::vector<AblationRow> ablation_study(std::span<const EpisodeFeatures> episodes,
                                        std::span<const FeatureMask> masks, const ExperimentConfig& config);

struct ThresholdFit {
  double threshold = 0.0;
  std::size_t correct = 0;
};

/// Best single threshold on detail energy: predict stable iff energy < threshold.
/// Candidates are midpoints of consecutive distinct sorted energies plus one
/// point below the minimum and one above the maximum; the first maximiser wins.
ThresholdFit fit_energy_threshold(std::span<const double> energies, std::span<const int> labels);

struct BaselineResult {
  double threshold = 0.0;
  double train_accuracy = 0.0;
  EvalReport report;
};

/// Detail-energy threshold on F_x alone, evaluated on the same split as the
/// main pipeline.
BaselineResult energy_threshold_baseline(std::span<const EpisodeFeatures> episodes,
                                         const ExperimentConfig& config);

// Reports: aligned text tables (one decimal) and JSON (full precision).
std::string format_percent(const std::optional<double>& value);
std::string report_to_json(const EvalReport& report);
std::string format_report_table(const EvalReport& report);
std::string sweep_to_json(std::span<const SweepRow> rows);
std::string format_sweep_table(std::span<const SweepRow> rows);
std::string ablation_to_json(std::span<const AblationRow> rows);
std::string format_ablation_table(std::span<const AblationRow> rows);
std::string baseline_to_json(const BaselineResult& result);

}  // namespace gripwatch
