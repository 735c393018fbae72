#include "gripwatch/episode_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gripwatch/error.hpp"

namespace gripwatch {

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

[[noreturn]] void parse_fail(const std::string& what) { throw Error(ErrorCode::ParseError, what); }

std::string at_line(std::size_t line, const std::string& what) {
  return "line " + std::to_string(line) + ": " + what;
}

double number_field(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) parse_fail(std::string("missing field '") + key + "'");
  if (!it->is_number()) parse_fail(std::string("field '") + key + "' is not a number");
  const double v = it->get<double>();
  if (!std::isfinite(v)) parse_fail(std::string("field '") + key + "' is not finite");
  return v;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  return out;
}

bool blank(std::string_view line) {
  return std::all_of(line.begin(), line.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
}

ordered_json config_to_json(const EpisodeConfig& c) {
  ordered_json j;
  j["seed"] = c.seed;
  j["sample_rate_hz"] = c.sample_rate_hz;
  j["phase_durations"] = {{"no_contact", c.phase_durations.no_contact},
                          {"ramp", c.phase_durations.ramp},
                          {"locked", c.phase_durations.locked},
                          {"disturbance", c.phase_durations.disturbance},
                          {"release", c.phase_durations.release}};
  j["locked_force"] = {c.locked_force.x(), c.locked_force.y(), c.locked_force.z()};
  j["noise_std"] = c.noise_std;
  j["disturbance"] = {{"count", c.disturbance.count},
                      {"magnitude", c.disturbance.magnitude},
                      {"duration_s", c.disturbance.duration_s},
                      {"direction_mode", std::string(to_string(c.disturbance.direction_mode))},
                      {"lobe_s", c.disturbance.lobe_s}};
  j["object_id"] = c.object_id;
  j["fingertip_id"] = c.fingertip_id;
  j["n_s"] = c.n_s;
  j["active_taxels"] = c.active_taxels;
  return j;
}

EpisodeConfig config_from_json(const json& j) {
  EpisodeConfig c;
  c.seed = j.at("seed").get<std::uint64_t>();
  c.sample_rate_hz = j.at("sample_rate_hz").get<double>();
  const auto& p = j.at("phase_durations");
  c.phase_durations.no_contact = p.at("no_contact").get<double>();
  c.phase_durations.ramp = p.at("ramp").get<double>();
  c.phase_durations.locked = p.at("locked").get<double>();
  c.phase_durations.disturbance = p.at("disturbance").get<double>();
  c.phase_durations.release = p.at("release").get<double>();
  const auto& f = j.at("locked_force");
  c.locked_force = Vec3(f.at(0).get<double>(), f.at(1).get<double>(), f.at(2).get<double>());
  c.noise_std = j.at("noise_std").get<double>();
  const auto& d = j.at("disturbance");
  c.disturbance.count = d.at("count").get<int>();
  c.disturbance.magnitude = d.at("magnitude").get<double>();
  c.disturbance.duration_s = d.at("duration_s").get<double>();
  c.disturbance.direction_mode = direction_mode_from_string(d.at("direction_mode").get<std::string>());
  c.disturbance.lobe_s = d.at("lobe_s").get<double>();
  c.object_id = j.at("object_id").get<int>();
  c.fingertip_id = j.at("fingertip_id").get<std::string>();
  c.n_s = j.at("n_s").get<std::size_t>();
  c.active_taxels = j.at("active_taxels").get<std::size_t>();
  return c;
}

void check_header(const json& j, std::string_view format) {
  if (j.value("format", std::string()) != format) {
    parse_fail("expected format '" + std::string(format) + "'");
  }
  auto v = j.find("version");
  if (v == j.end() || !v->is_number_integer()) parse_fail("header has no integer version");
  if (v->get<int>() != kFormatVersion) {
    throw Error(ErrorCode::VersionMismatch,
                "unsupported version " + std::to_string(v->get<int>()) + " of " + std::string(format));
  }
}

}  // namespace

void save_geometry(const FingertipGeometry& geometry, const std::filesystem::path& path) {
  ordered_json j;
  j["n_s"] = geometry.taxel_count();
  auto rotations = ordered_json::array();
  for (const Mat3& r : geometry.rotations()) {
    auto row = ordered_json::array();
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) row.push_back(r(a, b));
    rotations.push_back(std::move(row));
  }
  j["rotations"] = std::move(rotations);
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

FingertipGeometry load_geometry(const std::filesystem::path& path, double tolerance) {
  auto in = open_in(path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    parse_fail(path.string() + ": " + e.what());
  }
  std::vector<Mat3> rotations;
  try {
    const auto n_s = j.at("n_s").get<std::size_t>();
    const auto& list = j.at("rotations");
    if (!list.is_array() || list.size() != n_s) {
      parse_fail(path.string() + ": rotations count does not match n_s");
    }
    for (const auto& row : list) {
      if (!row.is_array() || row.size() != 9) parse_fail(path.string() + ": rotation needs 9 entries");
      Mat3 r;
      for (int k = 0; k < 9; ++k) r(k / 3, k % 3) = row.at(k).get<double>();
      rotations.push_back(r);
    }
  } catch (const json::exception& e) {
    parse_fail(path.string() + ": " + e.what());
  }
  FingertipGeometry geometry(std::move(rotations));
  const auto violations = validate_geometry(geometry, tolerance);
  if (!violations.empty()) {
    const auto& v = violations.front();
    std::ostringstream msg;
    msg << path.string() << ": rotation " << v.index << " is not in SO(3) (orthogonality residual "
        << v.orthogonality_residual << ", determinant " << v.determinant << ")";
    throw Error(ErrorCode::InvariantViolation, msg.str());
  }
  return geometry;
}

std::string frame_to_json_line(const TaxelFrame& frame, std::optional<int> label) {
  ordered_json j;
  j["t"] = frame.timestamp;
  j["fingertip"] = frame.fingertip_id;
  auto taxels = ordered_json::array();
  for (const auto& r : frame.readings) taxels.push_back({r.force.x(), r.force.y(), r.force.z()});
  j["taxels"] = std::move(taxels);
  if (label) j["label"] = *label;
  return j.dump();
}

void write_episode_log(const LabeledEpisode& episode, std::ostream& out) {
  ordered_json header;
  header["format"] = kEpisodeFormat;
  header["version"] = kFormatVersion;
  header["n_s"] = episode.metadata.n_s;
  header["metadata"] = config_to_json(episode.metadata);
  out << header.dump() << '\n';
  for (std::size_t k = 0; k < episode.frames.size(); ++k) {
    out << frame_to_json_line(episode.frames[k], episode.labels.at(k)) << '\n';
  }
}

void save_episode_log(const LabeledEpisode& episode, const std::filesystem::path& path) {
  auto out = open_out(path);
  write_episode_log(episode, out);
}

StreamRecord parse_stream_line(std::string_view line) {
  json j;
  try {
    j = json::parse(line.begin(), line.end());
  } catch (const json::exception&) {
    parse_fail("malformed JSON");
  }
  if (!j.is_object()) parse_fail("line is not a JSON object");

  StreamRecord rec;
  if (j.contains("format")) {
    check_header(j, kEpisodeFormat);
    auto n = j.find("n_s");
    if (n == j.end() || !n->is_number_integer() || n->get<long long>() < 1) {
      parse_fail("header needs a positive integer n_s");
    }
    rec.kind = StreamRecord::Kind::Header;
    rec.n_s = n->get<std::size_t>();
    return rec;
  }

  rec.frame.timestamp = number_field(j, "t");
  auto tip = j.find("fingertip");
  if (tip == j.end()) parse_fail("missing field 'fingertip'");
  if (tip->is_string()) {
    rec.frame.fingertip_id = tip->get<std::string>();
  } else if (tip->is_number_integer()) {
    rec.frame.fingertip_id = std::to_string(tip->get<long long>());
  } else {
    parse_fail("field 'fingertip' must be a string or integer");
  }

  auto taxels = j.find("taxels");
  if (taxels == j.end() || !taxels->is_array()) parse_fail("missing taxels array");
  rec.frame.readings.reserve(taxels->size());
  for (const auto& t : *taxels) {
    if (!t.is_array() || t.size() != 3) parse_fail("each taxel needs exactly 3 components");
    TaxelReading r;
    for (int c = 0; c < 3; ++c) {
      if (!t[c].is_number()) parse_fail("taxel component is not a number");
      r.force[c] = t[c].get<double>();
    }
    if (!r.force.allFinite()) parse_fail("taxel component is not finite");
    rec.frame.readings.push_back(r);
  }
  rec.n_s = rec.frame.readings.size();

  if (auto label = j.find("label"); label != j.end()) {
    if (!label->is_number_integer() || (label->get<long long>() != 0 && label->get<long long>() != 1)) {
      parse_fail("label must be 0 or 1");
    }
    rec.label = label->get<int>();
  }
  return rec;
}

LabeledEpisode read_episode_log(std::istream& in) {
  LabeledEpisode episode;
  std::string line;
  std::size_t line_no = 0;
  std::optional<std::size_t> n_s;
  bool have_metadata = false;

  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    StreamRecord rec;
    try {
      rec = parse_stream_line(line);
    } catch (const Error& e) {
      throw Error(e.code(), at_line(line_no, e.what()));
    }
    if (rec.kind == StreamRecord::Kind::Header) {
      if (n_s) parse_fail(at_line(line_no, "duplicate header"));
      n_s = rec.n_s;
      json j = json::parse(line);
      if (auto meta = j.find("metadata"); meta != j.end()) {
        try {
          episode.metadata = config_from_json(*meta);
        } catch (const std::exception& e) {
          parse_fail(at_line(line_no, std::string("bad metadata: ") + e.what()));
        }
        have_metadata = true;
      }
      episode.metadata.n_s = *n_s;
      continue;
    }
    if (!n_s) parse_fail(at_line(line_no, "frame before header"));
    if (rec.frame.readings.size() != *n_s) {
      parse_fail(at_line(line_no, "expected " + std::to_string(*n_s) + " taxels, got " +
                                      std::to_string(rec.frame.readings.size())));
    }
    if (!rec.label) parse_fail(at_line(line_no, "frame has no label"));
    if (!episode.frames.empty() && rec.frame.timestamp < episode.frames.back().timestamp) {
      throw Error(ErrorCode::InvariantViolation, at_line(line_no, "timestamp goes backwards"));
    }
    episode.frames.push_back(std::move(rec.frame));
    episode.labels.push_back(*rec.label);
  }
  if (episode.frames.empty()) parse_fail("no frames");
  if (!have_metadata) episode.metadata.fingertip_id = episode.frames.front().fingertip_id;
  return episode;
}

LabeledEpisode load_episode_log(const std::filesystem::path& path) {
  auto in = open_in(path);
  try {
    return read_episode_log(in);
  } catch (const Error& e) {
    throw Error(e.code(), path.filename().string() + ": " + e.what());
  }
}

std::vector<NamedEpisode> load_episode_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw Error(ErrorCode::IoError, dir.string() + " is not a directory");
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error(ErrorCode::EmptyDataset, "no episode logs in " + dir.string());

  std::vector<NamedEpisode> out;
  out.reserve(files.size());
  for (const auto& f : files) out.push_back({f.stem().string(), load_episode_log(f)});
  return out;
}

void write_feature_dump(const FeatureDump& dump, std::ostream& out) {
  ordered_json header;
  header["format"] = kFeatureFormat;
  header["version"] = kFormatVersion;
  header["n_w"] = dump.config.n_w;
  header["denominator_mode"] = std::string(to_string(dump.config.denominator_mode));
  out << header.dump() << '\n';
  for (const auto& ep : dump.episodes) {
    for (const auto& fv : ep.rows) {
      ordered_json j;
      j["episode"] = ep.name;
      j["t"] = fv.timestamp;
      j["fa"] = fv.f_a;
      j["fx"] = fv.f_tip.x();
      j["fy"] = fv.f_tip.y();
      j["fz"] = fv.f_tip.z();
      j["m"] = fv.m;
      j["sigma"] = fv.sigma;
      j["fx_energy"] = fv.fx_detail_energy;
      if (fv.label) j["label"] = *fv.label;
      out << j.dump() << '\n';
    }
  }
}

void save_feature_dump(const FeatureDump& dump, const std::filesystem::path& path) {
  auto out = open_out(path);
  write_feature_dump(dump, out);
}

FeatureDump read_feature_dump(std::istream& in) {
  FeatureDump dump;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception&) {
      parse_fail(at_line(line_no, "malformed JSON"));
    }
    if (!j.is_object()) parse_fail(at_line(line_no, "line is not a JSON object"));
    try {
      if (!have_header) {
        check_header(j, kFeatureFormat);
        dump.config.n_w = j.at("n_w").get<std::size_t>();
        dump.config.denominator_mode =
            denominator_mode_from_string(j.at("denominator_mode").get<std::string>());
        dump.config.validate();
        have_header = true;
        continue;
      }
      FeatureVector fv;
      fv.timestamp = number_field(j, "t");
      fv.f_a = number_field(j, "fa");
      fv.f_tip = Vec3(number_field(j, "fx"), number_field(j, "fy"), number_field(j, "fz"));
      fv.m = number_field(j, "m");
      fv.sigma = number_field(j, "sigma");
      fv.fx_detail_energy = j.contains("fx_energy") ? number_field(j, "fx_energy") : 0.0;
      if (auto label = j.find("label"); label != j.end()) {
        if (!label->is_number_integer() || (label->get<int>() != 0 && label->get<int>() != 1)) {
          parse_fail("label must be 0 or 1");
        }
        fv.label = label->get<int>();
      }
      const std::string name = j.value("episode", std::string());
      if (dump.episodes.empty() || dump.episodes.back().name != name) {
        dump.episodes.push_back({name, {}});
      }
      dump.episodes.back().rows.push_back(fv);
    } catch (const json::exception& e) {
      parse_fail(at_line(line_no, e.what()));
    } catch (const Error& e) {
      throw Error(e.code(), at_line(line_no, e.what()));
    }
  }
  if (!have_header) parse_fail("no header");
  return dump;
}

FeatureDump load_feature_dump(const std::filesystem::path& path) {
  auto in = open_in(path);
  try {
    return read_feature_dump(in);
  } catch (const Error& e) {
    throw Error(e.code(), path.filename().string() + ": " + e.what());
  }
}

}  // namespace gripwatch
