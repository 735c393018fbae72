#include <doctest.h>

#include <fstream>
#include <sstream>
#include <string>

#include "gripwatch/episode_io.hpp"
#include "gripwatch/error.hpp"
#include "gripwatch/eval.hpp"
#include "test_support.hpp"

using namespace gripwatch;
using gripwatch::testing::ScratchDir;

namespace {

EpisodeConfig short_config() {
  EpisodeConfig c;
  c.phase_durations = {0.2, 0.1, 0.5, 1.0, 0.1};
  c.disturbance.count = 1;
  c.disturbance.duration_s = 0.3;
  return c;
}

std::string read_all(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

template <class F>
void expect_error(ErrorCode code, F&& f, const std::string& fragment = {}) {
  try {
    f();
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == code);
    if (!fragment.empty()) CHECK_MESSAGE(std::string(e.what()).find(fragment) != std::string::npos, e.what());
  }
}

}  // namespace

TEST_CASE("episode log round trip is exact") {
  const auto ep = generate_episode(short_config());
  std::stringstream buf;
  write_episode_log(ep, buf);
  const auto back = read_episode_log(buf);

  REQUIRE(back.frames.size() == ep.frames.size());
  CHECK(back.labels == ep.labels);
  for (std::size_t k = 0; k < ep.frames.size(); ++k) {
    CHECK(back.frames[k].timestamp == ep.frames[k].timestamp);
    CHECK(back.frames[k].fingertip_id == ep.frames[k].fingertip_id);
    for (std::size_t i = 0; i < ep.frames[k].readings.size(); ++i) {
      CHECK(back.frames[k].readings[i].force == ep.frames[k].readings[i].force);
    }
  }
  CHECK(back.metadata.seed == ep.metadata.seed);
  CHECK(back.metadata.locked_force == ep.metadata.locked_force);
  CHECK(back.metadata.disturbance.lobe_s == ep.metadata.disturbance.lobe_s);

  // Writing again reproduces the bytes.
  std::stringstream again;
  write_episode_log(back, again);
  std::stringstream first;
  write_episode_log(ep, first);
  CHECK(again.str() == first.str());
}

TEST_CASE("episode log errors") {
  const std::string header = R"({"format":"gripwatch-episode","version":1,"n_s":3})";
  const std::string good = R"({"t":0.0,"fingertip":"index","taxels":[[0,0,0],[0,0,0],[0,0,0]],"label":0})";
  const std::string short_frame = R"({"t":0.1,"fingertip":"index","taxels":[[0,0,0],[0,0,0]],"label":0})";

  auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return read_episode_log(in);
  };

  CHECK(parse(header + "\n" + good + "\n").frames.size() == 1);
  expect_error(ErrorCode::ParseError, [&] { parse(header + "\n" + good + "\n" + short_frame + "\n"); },
               "line 3: expected 3 taxels, got 2");
  expect_error(ErrorCode::ParseError, [&] { parse(""); }, "no frames");
  expect_error(ErrorCode::ParseError, [&] { parse(header + "\n"); }, "no frames");
  expect_error(ErrorCode::ParseError, [&] { parse(header + "\n{not json\n"); }, "line 2");
  expect_error(ErrorCode::ParseError, [&] { parse(good + "\n"); }, "frame before header");
  expect_error(ErrorCode::VersionMismatch,
               [&] { parse(R"({"format":"gripwatch-episode","version":9,"n_s":3})" "\n" + good); });
  expect_error(ErrorCode::ParseError, [&] {
    parse(header + "\n" + R"({"t":0.0,"fingertip":"index","taxels":[[0,0,0],[0,0,0],[0,0,0]]})");
  }, "no label");
  expect_error(ErrorCode::InvariantViolation, [&] {
    parse(header + "\n" + R"({"t":1.0,"fingertip":"a","taxels":[[0,0,0],[0,0,0],[0,0,0]],"label":0})" "\n" +
          good);
  });
}

TEST_CASE("29 readings in a 30-taxel log names the line") {
  ScratchDir dir("io");
  auto ep = generate_episode(short_config());
  ep.frames[4].readings.pop_back();
  save_episode_log(ep, dir / "bad.jsonl");
  expect_error(ErrorCode::ParseError, [&] { load_episode_log(dir / "bad.jsonl"); },
               "line 6: expected 30 taxels, got 29");

  std::ofstream(dir / "empty.jsonl").close();
  expect_error(ErrorCode::ParseError, [&] { load_episode_log(dir / "empty.jsonl"); }, "no frames");
  expect_error(ErrorCode::IoError, [&] { load_episode_log(dir / "missing.jsonl"); });
}

TEST_CASE("episode directories load in name order") {
  ScratchDir dir("dir");
  auto c = short_config();
  c.seed = 2;
  save_episode_log(generate_episode(c), dir / "b.jsonl");
  c.seed = 1;
  save_episode_log(generate_episode(c), dir / "a.jsonl");
  std::ofstream(dir / "notes.txt") << "ignored\n";
  const auto eps = load_episode_dir(dir.path());
  REQUIRE(eps.size() == 2);
  CHECK(eps[0].name == "a");
  CHECK(eps[0].episode.metadata.seed == 1);
  CHECK(eps[1].name == "b");

  ScratchDir empty("none");
  expect_error(ErrorCode::EmptyDataset, [&] { load_episode_dir(empty.path()); });
}

TEST_CASE("stream line parsing") {
  auto rec = parse_stream_line(R"({"t":1.5,"fingertip":3,"taxels":[[1,2,3]]})");
  CHECK(rec.kind == StreamRecord::Kind::Frame);
  CHECK(rec.frame.fingertip_id == "3");
  CHECK(rec.frame.readings[0].force == Vec3(1, 2, 3));
  CHECK_FALSE(rec.label.has_value());
  CHECK(rec.n_s == 1);

  rec = parse_stream_line(R"({"format":"gripwatch-episode","version":1,"n_s":30})");
  CHECK(rec.kind == StreamRecord::Kind::Header);
  CHECK(rec.n_s == 30);

  for (const char* bad : {"", "[]", "null", R"({"t":"x","fingertip":"a","taxels":[]})",
                          R"({"t":1,"taxels":[]})", R"({"t":1,"fingertip":"a","taxels":[[1,2]]})",
                          R"({"t":1,"fingertip":"a","taxels":[[1,2,3]],"label":2})",
                          R"({"t":1,"fingertip":[1],"taxels":[]})"}) {
    CHECK_THROWS_AS(parse_stream_line(bad), Error);
  }

  TaxelFrame f;
  f.timestamp = 0.125;
  f.fingertip_id = "thumb";
  f.readings = {{Vec3(0.1, -2, 3)}};
  const auto line = frame_to_json_line(f, 1);
  const auto back = parse_stream_line(line);
  CHECK(back.frame.timestamp == 0.125);
  CHECK(back.frame.readings[0].force == f.readings[0].force);
  CHECK(*back.label == 1);
}

TEST_CASE("geometry files") {
  ScratchDir dir("geo");
  const auto geo = default_fingertip_geometry(30);
  save_geometry(geo, dir / "g.json");
  const auto back = load_geometry(dir / "g.json");
  REQUIRE(back.taxel_count() == 30);
  for (std::size_t i = 0; i < 30; ++i) CHECK(back.rotation(i) == geo.rotation(i));

  std::vector<Mat3> rs(3, Mat3::Identity());
  rs[1] *= 1.1;
  save_geometry(FingertipGeometry(rs), dir / "scaled.json");
  expect_error(ErrorCode::InvariantViolation, [&] { load_geometry(dir / "scaled.json"); }, "rotation 1");

  std::ofstream(dir / "broken.json") << R"({"n_s":2,"rotations":[[1,0,0,0,1,0,0,0,1]]})";
  expect_error(ErrorCode::ParseError, [&] { load_geometry(dir / "broken.json"); });
  std::ofstream(dir / "trunc.json") << R"({"n_s":1,"rotations":[[1,0,0)";
  expect_error(ErrorCode::ParseError, [&] { load_geometry(dir / "trunc.json"); });
}

TEST_CASE("feature dump round trip") {
  const auto ep = generate_episode(short_config());
  const NamedEpisode named{"ep0", ep};
  FeatureDump dump;
  dump.config = DwtConfig{6, DenominatorMode::CoefficientCount};
  dump.episodes.push_back(extract_episode(named, default_fingertip_geometry(30), dump.config));
  dump.episodes.push_back({"ep1", dump.episodes[0].rows});
  dump.episodes[1].rows[0].label.reset();

  std::stringstream buf;
  write_feature_dump(dump, buf);
  const std::string text = buf.str();
  const auto back = read_feature_dump(buf);
  CHECK(back.config.n_w == 6);
  CHECK(back.config.denominator_mode == DenominatorMode::CoefficientCount);
  REQUIRE(back.episodes.size() == 2);
  CHECK(back.episodes[1].name == "ep1");
  for (std::size_t e = 0; e < 2; ++e) {
    REQUIRE(back.episodes[e].rows.size() == dump.episodes[e].rows.size());
    for (std::size_t i = 0; i < dump.episodes[e].rows.size(); ++i) {
      const auto& a = dump.episodes[e].rows[i];
      const auto& b = back.episodes[e].rows[i];
      CHECK(a.values() == b.values());
      CHECK(a.timestamp == b.timestamp);
      CHECK(a.fx_detail_energy == b.fx_detail_energy);
      CHECK(a.label == b.label);
    }
  }

  std::stringstream again;
  write_feature_dump(back, again);
  CHECK(again.str() == text);

  std::istringstream wrong(R"({"format":"gripwatch-episode","version":1,"n_w":4,"denominator_mode":"window"})");
  CHECK_THROWS_AS(read_feature_dump(wrong), Error);
  std::istringstream none("");
  expect_error(ErrorCode::ParseError, [&] { read_feature_dump(none); }, "no header");
}
