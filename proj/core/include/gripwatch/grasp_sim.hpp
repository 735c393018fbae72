#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "gripwatch/tactile.hpp"

namespace gripwatch {

enum class DirectionMode { Random, Downward, Lateral };

std::string_view to_string(DirectionMode mode) noexcept;
DirectionMode direction_mode_from_string(std::string_view name);

struct PhaseDurations {
  double no_contact = 2.0;
  double ramp = 0.5;
  double locked = 5.0;
  // Plateau continues through this phase; disturbance intervals are placed
  // inside it. Samples outside those intervals stay stable.
  double disturbance = 10.0;
  double release = 0.5;

  double total() const noexcept { return no_contact + ramp + locked + disturbance + release; }
};

struct DisturbanceConfig {
  int count = 4;
  double magnitude = 2.5;
  double duration_s = 0.8;
  DirectionMode direction_mode = DirectionMode::Random;
  // Width of one half-sine lobe. The transient is a train of alternating
  // lobes; a lobe at least as long as duration_s gives one single half-sine.
  double lobe_s = 1.0 / 24.0;
};

struct EpisodeConfig {
  std::uint64_t seed = 7;
  double sample_rate_hz = 150.0;
  PhaseDurations phase_durations;
  Vec3 locked_force = Vec3(3.0, 1.5, -1.5);
  double noise_std = 0.01;
  DisturbanceConfig disturbance;
  int object_id = 1;
  std::string fingertip_id = "index";
  std::size_t n_s = kDefaultTaxelCount;
  std::size_t active_taxels = 6;

  /// Throws InvalidConfig.
  void validate() const;
};

/// Sample indices [begin, end) of one phase or disturbance interval.
struct SampleRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  bool contains(std::size_t k) const noexcept { return k >= begin && k < end; }
  std::size_t size() const noexcept { return end - begin; }
};

struct EpisodeLayout {
  SampleRange no_contact;
  SampleRange ramp;
  SampleRange locked;
  SampleRange disturbance;
  SampleRange release;
  std::vector<SampleRange> disturbances;
  std::size_t frame_count = 0;
};

struct LabeledEpisode {
  std::vector<TaxelFrame> frames;
  std::vector<int> labels;
  EpisodeConfig metadata;
};

/// ceil(duration * rate), robust to representation error in the product.
std::size_t samples_for(double duration_s, double sample_rate_hz);

/// Phase boundaries and disturbance placement for a config. Deterministic
/// given the seed.
EpisodeLayout episode_layout(const EpisodeConfig& config);

/// Piecewise force profile per taxel (no contact, linear ramp, plateau with
/// disturbance transients, linear release) plus white Gaussian noise on every
/// taxel component. Stable label exactly on plateau samples outside any
/// disturbance interval.
LabeledEpisode generate_episode(const EpisodeConfig& config);

/// Deterministic per-object variation of locked force, noise level and
/// disturbance magnitude. `object_index` is zero based.
EpisodeConfig object_config(const EpisodeConfig& base, int object_index);

std::uint64_t episode_seed(std::uint64_t base_seed, std::uint64_t episode_index) noexcept;

/// n_objects * episodes_per_object episodes, object-major order.
std::vector<LabeledEpisode> generate_dataset(int n_objects, int episodes_per_object,
                                             const EpisodeConfig& base);

}  // namespace gripwatch
