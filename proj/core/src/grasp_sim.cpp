#include "gripwatch/grasp_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "gripwatch/error.hpp"

namespace gripwatch {

namespace {

// Independent random streams derived from one seed.
enum class Stream : std::uint64_t { Layout = 1, Noise = 2, Object = 3 };

std::mt19937_64 make_rng(std::uint64_t seed, Stream stream, std::uint64_t extra = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(extra),
                    static_cast<std::uint32_t>(extra >> 32)};
  return std::mt19937_64(seq);
}

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::InvalidConfig, what);
}

Vec3 disturbance_direction(const EpisodeConfig& config, int index, std::mt19937_64& rng) {
  switch (config.disturbance.direction_mode) {
    case DirectionMode::Downward:
      return Vec3(0.0, 0.0, -1.0);
    case DirectionMode::Lateral:
      return Vec3(0.0, index % 2 == 0 ? 1.0 : -1.0, 0.0);
    case DirectionMode::Random: {
      std::normal_distribution<double> normal(0.0, 1.0);
      Vec3 v;
      do {
        v = Vec3(normal(rng), normal(rng), normal(rng));
      } while (v.norm() < 1e-6);
      return v.normalized();
    }
  }
  return Vec3::UnitX();
}

}  // namespace

std::string_view to_string(DirectionMode mode) noexcept {
  switch (mode) {
    case DirectionMode::Random: return "random";
    case DirectionMode::Downward: return "downward";
    case DirectionMode::Lateral: return "lateral";
  }
  return "random";
}

DirectionMode direction_mode_from_string(std::string_view name) {
  if (name == "random") return DirectionMode::Random;
  if (name == "downward") return DirectionMode::Downward;
  if (name == "lateral") return DirectionMode::Lateral;
  throw Error(ErrorCode::InvalidConfig, "unknown direction mode '" + std::string(name) + "'");
}

void EpisodeConfig::validate() const {
  const auto& p = phase_durations;
  require(std::isfinite(sample_rate_hz) && sample_rate_hz > 0, "sample_rate_hz must be > 0");
  require(p.no_contact >= 0 && p.ramp >= 0 && p.locked >= 0 && p.disturbance >= 0 &&
              p.release >= 0,
          "phase durations must be >= 0");
  require(std::isfinite(p.total()), "phase durations must be finite");
  require(std::isfinite(noise_std) && noise_std >= 0, "noise_std must be >= 0");
  require(locked_force.allFinite(), "locked_force must be finite");
  require(disturbance.count >= 0, "disturbance count must be >= 0");
  require(std::isfinite(disturbance.magnitude), "disturbance magnitude must be finite");
  require(disturbance.lobe_s > 0, "disturbance lobe_s must be > 0");
  require(n_s >= 1, "n_s must be >= 1");
  require(active_taxels >= 1 && active_taxels <= n_s, "active_taxels must be in [1, n_s]");
  if (disturbance.count > 0) {
    require(disturbance.duration_s > 0, "disturbance duration must be > 0");
    const std::size_t phase = samples_for(p.no_contact + p.ramp + p.locked + p.disturbance,
                                          sample_rate_hz) -
                              samples_for(p.no_contact + p.ramp + p.locked, sample_rate_hz);
    const std::size_t slot = phase / static_cast<std::size_t>(disturbance.count);
    require(samples_for(disturbance.duration_s, sample_rate_hz) <= slot,
            "disturbance intervals do not fit in the disturbance phase");
  }
}

std::size_t samples_for(double duration_s, double sample_rate_hz) {
  const double x = duration_s * sample_rate_hz;
  const double r = std::round(x);
  if (std::abs(x - r) <= 1e-9 * std::max(1.0, std::abs(x))) return static_cast<std::size_t>(r);
  return static_cast<std::size_t>(std::ceil(x));
}

EpisodeLayout episode_layout(const EpisodeConfig& config) {
  config.validate();
  const auto& p = config.phase_durations;
  const double rate = config.sample_rate_hz;

  const std::size_t b1 = samples_for(p.no_contact, rate);
  const std::size_t b2 = samples_for(p.no_contact + p.ramp, rate);
  const std::size_t b3 = samples_for(p.no_contact + p.ramp + p.locked, rate);
  const std::size_t b4 = samples_for(p.no_contact + p.ramp + p.locked + p.disturbance, rate);
  const std::size_t b5 = samples_for(p.total(), rate);

  EpisodeLayout layout;
  layout.no_contact = {0, b1};
  layout.ramp = {b1, b2};
  layout.locked = {b2, b3};
  layout.disturbance = {b3, b4};
  layout.release = {b4, b5};
  layout.frame_count = b5;

  const int count = config.disturbance.count;
  if (count > 0) {
    auto rng = make_rng(config.seed, Stream::Layout);
    const std::size_t width = samples_for(config.disturbance.duration_s, rate);
    const std::size_t slot = layout.disturbance.size() / static_cast<std::size_t>(count);
    for (int i = 0; i < count; ++i) {
      std::uniform_int_distribution<std::size_t> jitter(0, slot - width);
      const std::size_t begin = b3 + static_cast<std::size_t>(i) * slot + jitter(rng);
      layout.disturbances.push_back({begin, begin + width});
    }
  }
  return layout;
}

LabeledEpisode generate_episode(const EpisodeConfig& config) {
  const EpisodeLayout layout = episode_layout(config);
  const FingertipGeometry geometry = default_fingertip_geometry(config.n_s);
  const double rate = config.sample_rate_hz;
  const auto& dist = config.disturbance;

  auto layout_rng = make_rng(config.seed, Stream::Layout, 1);
  std::vector<Vec3> directions;
  for (int i = 0; i < dist.count; ++i) directions.push_back(disturbance_direction(config, i, layout_rng));

  // Contact patch: a contiguous run of taxels with a triangular load profile.
  const std::size_t patch = config.active_taxels;
  const std::size_t patch_start =
      std::uniform_int_distribution<std::size_t>(0, config.n_s - patch)(layout_rng);
  std::vector<double> weights(patch);
  double total_weight = 0.0;
  for (std::size_t j = 0; j < patch; ++j) {
    weights[j] = static_cast<double>(std::min(j + 1, patch - j));
    total_weight += weights[j];
  }
  for (double& w : weights) w /= total_weight;

  const double lobe = std::min(dist.lobe_s, dist.duration_s > 0 ? dist.duration_s : dist.lobe_s);

  auto noise_rng = make_rng(config.seed, Stream::Noise);
  std::normal_distribution<double> noise(0.0, 1.0);

  LabeledEpisode episode;
  episode.metadata = config;
  episode.frames.reserve(layout.frame_count);
  episode.labels.reserve(layout.frame_count);

  for (std::size_t k = 0; k < layout.frame_count; ++k) {
    Vec3 target = Vec3::Zero();
    int label = 0;
    if (layout.ramp.contains(k)) {
      target = config.locked_force * (static_cast<double>(k - layout.ramp.begin) /
                                      static_cast<double>(layout.ramp.size()));
    } else if (layout.locked.contains(k) || layout.disturbance.contains(k)) {
      target = config.locked_force;
      label = 1;
      for (std::size_t d = 0; d < layout.disturbances.size(); ++d) {
        const SampleRange& range = layout.disturbances[d];
        if (!range.contains(k)) continue;
        const double t = static_cast<double>(k - range.begin) / rate;
        target += directions[d] * (dist.magnitude * std::sin(std::numbers::pi * t / lobe));
        label = 0;
      }
    } else if (layout.release.contains(k)) {
      target = config.locked_force * (1.0 - static_cast<double>(k - layout.release.begin + 1) /
                                                static_cast<double>(layout.release.size()));
    }

    TaxelFrame frame;
    frame.timestamp = static_cast<double>(k) / rate;
    frame.fingertip_id = config.fingertip_id;
    frame.readings.resize(config.n_s);
    for (std::size_t j = 0; j < patch; ++j) {
      const std::size_t i = patch_start + j;
      frame.readings[i].force = geometry.rotation(i).transpose() * (target * weights[j]);
    }
    if (config.noise_std > 0) {
      for (auto& reading : frame.readings) {
        for (int c = 0; c < 3; ++c) reading.force[c] += config.noise_std * noise(noise_rng);
      }
    }
    episode.frames.push_back(std::move(frame));
    episode.labels.push_back(label);
  }
  return episode;
}

std::uint64_t episode_seed(std::uint64_t base_seed, std::uint64_t episode_index) noexcept {
  return base_seed * 1'000'003ULL + episode_index;
}

EpisodeConfig object_config(const EpisodeConfig& base, int object_index) {
  require(object_index >= 0, "object index must be >= 0");
  auto rng = make_rng(base.seed, Stream::Object, static_cast<std::uint64_t>(object_index));
  std::uniform_real_distribution<double> scale(0.6, 1.5);
  std::uniform_real_distribution<double> yaw(-0.3, 0.3);
  std::uniform_real_distribution<double> spread(0.7, 1.3);

  EpisodeConfig cfg = base;
  cfg.object_id = object_index + 1;
  cfg.locked_force = scale(rng) * (rotation_about_z(yaw(rng)) * base.locked_force);
  cfg.noise_std = base.noise_std * spread(rng);
  cfg.disturbance.magnitude = base.disturbance.magnitude * spread(rng);
  return cfg;
}

std::vector<LabeledEpisode> generate_dataset(int n_objects, int episodes_per_object,
                                             const EpisodeConfig& base) {
  require(n_objects >= 1, "n_objects must be >= 1");
  require(episodes_per_object >= 1, "episodes_per_object must be >= 1");
  base.validate();

  std::vector<LabeledEpisode> episodes;
  episodes.reserve(static_cast<std::size_t>(n_objects) * static_cast<std::size_t>(episodes_per_object));
  std::uint64_t index = 0;
  for (int o = 0; o < n_objects; ++o) {
    const EpisodeConfig object = object_config(base, o);
    for (int e = 0; e < episodes_per_object; ++e, ++index) {
      EpisodeConfig cfg = object;
      cfg.seed = episode_seed(base.seed, index);
      episodes.push_back(generate_episode(cfg));
    }
  }
  return episodes;
}

}  // namespace gripwatch
