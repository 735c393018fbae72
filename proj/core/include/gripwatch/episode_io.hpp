#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gripwatch/grasp_sim.hpp"
#include "gripwatch/haar_features.hpp"
#include "gripwatch/tactile.hpp"

namespace gripwatch {

inline constexpr std::string_view kEpisodeFormat = "gripwatch-episode";
inline constexpr std::string_view kFeatureFormat = "gripwatch-features";
inline constexpr int kFormatVersion = 1;

// Geometry file: {"n_s": int, "rotations": [[9 row-major reals] x n_s]}.
void save_geometry(const FingertipGeometry& geometry, const std::filesystem::path& path);

/// Throws ParseError on malformed JSON and InvariantViolation when a rotation
/// is outside SO(3) by more than `tolerance`.
FingertipGeometry load_geometry(const std::filesystem::path& path,
                                double tolerance = kFileRotationTolerance);

// Episode log: a header line then one JSON object per frame.
void write_episode_log(const LabeledEpisode& episode, std::ostream& out);
void save_episode_log(const LabeledEpisode& episode, const std::filesystem::path& path);

/// Throws ParseError (with line number) or InvariantViolation.
LabeledEpisode read_episode_log(std::istream& in);
LabeledEpisode load_episode_log(const std::filesystem::path& path);

struct NamedEpisode {
  std::string name;
  LabeledEpisode episode;
};

/// Every *.jsonl episode log in `dir`, ordered by file name.
std::vector<NamedEpisode> load_episode_dir(const std::filesystem::path& dir);

/// One line of a frame stream. Header lines only carry n_s.
struct StreamRecord {
  enum class Kind { Header, Frame };
  Kind kind = Kind::Frame;
  std::size_t n_s = 0;
  TaxelFrame frame;
  std::optional<int> label;
};

/// Parses a single JSONL line of an episode log or detector input stream.
/// Throws ParseError describing the problem (without a line number).
StreamRecord parse_stream_line(std::string_view line);

std::string frame_to_json_line(const TaxelFrame& frame, std::optional<int> label);

// Feature dump: header with the extraction config, then one row per line.
struct FeatureDump {
  DwtConfig config;
  std::vector<EpisodeFeatures> episodes;
};

void write_feature_dump(const FeatureDump& dump, std::ostream& out);
void save_feature_dump(const FeatureDump& dump, const std::filesystem::path& path);
FeatureDump read_feature_dump(std::istream& in);
FeatureDump load_feature_dump(const std::filesystem::path& path);

}  // namespace gripwatch
