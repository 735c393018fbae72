#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "gripwatch/error.hpp"
#include "gripwatch/eval.hpp"

using namespace gripwatch;

namespace {

EpisodeConfig small_config() {
  EpisodeConfig c;
  c.phase_durations = {0.5, 0.5, 1.0, 4.0, 0.5};
  c.disturbance.count = 3;
  c.disturbance.duration_s = 0.5;
  return c;
}

std::vector<NamedEpisode> small_dataset(int objects, int episodes, const EpisodeConfig& base) {
  std::vector<NamedEpisode> out;
  int i = 0;
  for (auto& ep : generate_dataset(objects, episodes, base)) {
    out.push_back({"ep" + std::to_string(i++), std::move(ep)});
  }
  return out;
}

// Episodes of synthetic rows with a known count each.
std::vector<EpisodeFeatures> counted_rows(std::size_t episodes, std::size_t rows_each) {
  std::vector<EpisodeFeatures> out;
  for (std::size_t e = 0; e < episodes; ++e) {
    EpisodeFeatures ef{"e" + std::to_string(e), {}};
    for (std::size_t r = 0; r < rows_each; ++r) {
      FeatureVector v;
      v.timestamp = static_cast<double>(r);
      v.f_a = static_cast<double>(e * 1000 + r);
      v.label = static_cast<int>(r % 2);
      ef.rows.push_back(v);
    }
    out.push_back(std::move(ef));
  }
  return out;
}

}  // namespace

TEST_CASE("metric arithmetic") {
  auto r = compute_metrics({955, 951, 49, 45});
  CHECK(*r.acc == doctest::Approx(95.3).epsilon(1e-12));
  CHECK(*r.fpr == doctest::Approx(4.9));
  CHECK(*r.fnr == doctest::Approx(4.5));
  CHECK(*r.fdr == doctest::Approx(100.0 * 49 / 1004));

  r = compute_metrics({40, 50, 5, 5});
  CHECK(*r.acc == doctest::Approx(90.0));
  CHECK(*r.fdr == doctest::Approx(100.0 * 5 / 45));
  CHECK(format_percent(r.fdr) == "11.1");

  r = compute_metrics({0, 10, 0, 3});
  CHECK_FALSE(r.fdr.has_value());
  CHECK_FALSE(recall({0, 10, 0, 0}).has_value());
  CHECK(format_percent(r.fdr) == "undef");
  CHECK(report_to_json(r).find("\"fdr\": null") != std::string::npos);
  CHECK_FALSE(compute_metrics({}).acc.has_value());

  ConfusionMatrix c;
  c.add(1, 1);
  c.add(1, 0);
  c.add(0, 1);
  c.add(0, 0);
  c.add(0, 0);
  CHECK(c == ConfusionMatrix{1, 2, 1, 1});
}

TEST_CASE("metric identities on random confusion matrices") {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> u(0, 500);
  for (int trial = 0; trial < 1000; ++trial) {
    const ConfusionMatrix c{static_cast<std::uint64_t>(u(rng)), static_cast<std::uint64_t>(u(rng)),
                            static_cast<std::uint64_t>(u(rng)), static_cast<std::uint64_t>(u(rng))};
    const auto r = compute_metrics(c);
    if (c.fp + c.tn > 0) CHECK(std::abs(*r.fpr + *specificity(c) - 100.0) < 1e-9);
    if (c.fn + c.tp > 0) CHECK(std::abs(*r.fnr + *recall(c) - 100.0) < 1e-9);
    if (c.fp + c.tn > 0 && c.fn + c.tp > 0) {
      const double from_rates =
          (*recall(c) * static_cast<double>(c.tp + c.fn) + *specificity(c) * static_cast<double>(c.tn + c.fp)) /
          static_cast<double>(c.total());
      CHECK(std::abs(from_rates - *r.acc) < 1e-9);
    }
  }
}

TEST_CASE("splits") {
  SUBCASE("sample level") {
    const auto eps = counted_rows(4, 25);
    const auto idx = split_indices(eps, 0.8, SplitMode::SampleLevel, 42);
    CHECK(idx.train.size() == 80);
    CHECK(idx.test.size() == 20);
    std::set<std::size_t> all(idx.train.begin(), idx.train.end());
    for (std::size_t i : idx.test) CHECK(all.insert(i).second);
    CHECK(all.size() == 100);
    CHECK(*all.rbegin() == 99);

    const auto again = split_indices(eps, 0.8, SplitMode::SampleLevel, 42);
    CHECK(again.train == idx.train);
    CHECK(again.test == idx.test);
    CHECK(split_indices(eps, 0.8, SplitMode::SampleLevel, 43).train != idx.train);

    const auto s = split_dataset(eps, 0.8, SplitMode::SampleLevel, 42);
    CHECK(s.train.size() == 80);
    CHECK(s.test[0].f_a == pool(eps)[idx.test[0]].f_a);
  }
  SUBCASE("episode level") {
    const auto eps = counted_rows(30, 7);
    const auto idx = split_indices(eps, 0.8, SplitMode::EpisodeLevel, 1);
    std::set<std::size_t> train_eps, test_eps;
    for (std::size_t i : idx.train) train_eps.insert(i / 7);
    for (std::size_t i : idx.test) test_eps.insert(i / 7);
    CHECK(train_eps.size() == 24);
    CHECK(test_eps.size() == 6);
    for (std::size_t e : test_eps) CHECK(train_eps.count(e) == 0);
    CHECK(idx.train.size() + idx.test.size() == 210);
  }
  SUBCASE("errors") {
    const auto eps = counted_rows(2, 5);
    CHECK_THROWS_AS(split_indices(eps, 0.0, SplitMode::SampleLevel, 0), Error);
    CHECK_THROWS_AS(split_indices(eps, 1.0, SplitMode::SampleLevel, 0), Error);
    try {
      split_indices(counted_rows(2, 0), 0.5, SplitMode::SampleLevel, 0);
      FAIL("expected EmptyDataset");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::EmptyDataset);
    }
    CHECK(split_mode_from_string("episode") == SplitMode::EpisodeLevel);
    CHECK_THROWS_AS(split_mode_from_string("random"), Error);
  }
}

TEST_CASE("feature rows take the label of the frame closing the window") {
  const auto eps = small_dataset(1, 1, small_config());
  const DwtConfig dwt;
  const auto f = extract_episode(eps[0], default_fingertip_geometry(30), dwt);
  const auto& labels = eps[0].episode.labels;
  REQUIRE(f.rows.size() == labels.size() - dwt.n_w + 1);
  for (std::size_t i = 0; i < f.rows.size(); ++i) CHECK(*f.rows[i].label == labels[i + dwt.n_w - 1]);
}

TEST_CASE("sweep and ablation tables") {
  const auto eps = small_dataset(2, 2, small_config());
  const auto geo = default_fingertip_geometry(30);
  ExperimentConfig cfg;

  const std::vector<std::size_t> widths{4, 6, 8, 10, 12, 14, 16, 18};
  const auto sweep = window_sweep(eps, geo, widths, cfg);
  REQUIRE(sweep.size() == 8);
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK(sweep[i].n_w == widths[i]);
    CHECK(sweep[i].report.acc.has_value());
  }
  const std::vector<std::size_t> one{14};
  const auto single = window_sweep(eps, geo, one, cfg);
  REQUIRE(single.size() == 1);
  CHECK(sweep_to_json(single) == sweep_to_json(window_sweep(eps, geo, one, cfg)));
  CHECK(sweep[5].report.confusion == single[0].report.confusion);
  const std::vector<std::size_t> odd{5};
  CHECK_THROWS_AS(window_sweep(eps, geo, odd, cfg), Error);

  const auto table = format_sweep_table(sweep);
  CHECK(table.find("N_w") == 0);
  CHECK(std::count(table.begin(), table.end(), '\n') == 5);

  const auto features = extract_features(eps, geo, cfg.dwt);
  const auto masks = standard_ablation_masks();
  REQUIRE(masks.size() == 11);
  CHECK(masks[0] == full_feature_mask());
  CHECK(std::set<FeatureMask>(masks.begin(), masks.end()).size() == 11);
  const auto rows = ablation_study(features, masks, cfg);
  REQUIRE(rows.size() == 11);
  CHECK(ablation_to_json(rows) == ablation_to_json(ablation_study(features, masks, cfg)));
  CHECK(format_ablation_table(rows).find("sigma") != std::string::npos);

  const std::vector<FeatureMask> empty{FeatureMask{}};
  try {
    ablation_study(features, empty, cfg);
    FAIL("expected InvalidConfig");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidConfig);
  }
}

TEST_CASE("energy threshold is the best candidate") {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> coarse(0, 12);
  std::bernoulli_distribution coin(0.6);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(trial % 40);
    std::vector<double> e(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      e[i] = coarse(rng) * 0.25;  // plenty of ties
      y[i] = coin(rng) ? 1 : 0;
    }
    const auto fit = fit_energy_threshold(e, y);

    auto score = [&](double thr) {
      std::size_t ok = 0;
      for (std::size_t i = 0; i < n; ++i) ok += ((e[i] < thr ? 1 : 0) == y[i]) ? 1 : 0;
      return ok;
    };
    CHECK(score(fit.threshold) == fit.correct);

    std::vector<double> sorted = e;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    std::vector<double> candidates{sorted.front() - 1.0, sorted.back() + 1.0};
    for (std::size_t i = 0; i + 1 < sorted.size(); ++i) candidates.push_back(0.5 * (sorted[i] + sorted[i + 1]));
    for (double c : candidates) CHECK(score(c) <= fit.correct);
  }
  CHECK_THROWS_AS(fit_energy_threshold(std::vector<double>{}, std::vector<int>{}), Error);
}

TEST_CASE("baseline is blind to disturbances off the x axis") {
  EpisodeConfig c = small_config();
  c.disturbance.direction_mode = DirectionMode::Lateral;
  const auto eps = small_dataset(2, 3, c);
  ExperimentConfig cfg;
  const auto features = extract_features(eps, default_fingertip_geometry(30), cfg.dwt);

  const auto base = energy_threshold_baseline(features, cfg);
  const auto full = train_and_evaluate(features, cfg);
  const auto& t = base.report.confusion;
  const double majority =
      100.0 * static_cast<double>(std::max(t.tp + t.fn, t.tn + t.fp)) / static_cast<double>(t.total());
  MESSAGE("baseline " << *base.report.acc << " majority " << majority << " full " << *full.acc);
  CHECK(*base.report.acc <= majority + 3.0);
  CHECK(*full.acc >= *base.report.acc + 10.0);
  CHECK(baseline_to_json(base).find("\"threshold\"") != std::string::npos);
}

TEST_CASE("baseline on an all-stable dataset is flagged degenerate") {
  std::vector<EpisodeFeatures> eps = counted_rows(3, 20);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& ep : eps) {
    for (auto& r : ep.rows) {
      r.label = 1;
      r.fx_detail_energy = u(rng);
    }
  }
  const auto res = energy_threshold_baseline(eps, ExperimentConfig{});
  CHECK(*res.report.acc == 100.0);
  CHECK(res.report.degenerate);
  CHECK(res.threshold > 1.0);
  CHECK(format_report_table(res.report).find("(degenerate)") != std::string::npos);
}
