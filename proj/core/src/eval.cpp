#include "gripwatch/eval.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "gripwatch/error.hpp"

namespace gripwatch {

namespace {

using ordered_json = nlohmann::ordered_json;

std::optional<double> percent(std::uint64_t num, std::uint64_t den) {
  if (den == 0) return std::nullopt;
  return 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

ordered_json rate_json(const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

void put_metrics(ordered_json& j, const EvalReport& r) {
  j["fpr"] = rate_json(r.fpr);
  j["fnr"] = rate_json(r.fnr);
  j["fdr"] = rate_json(r.fdr);
  j["acc"] = rate_json(r.acc);
  j["tp"] = r.confusion.tp;
  j["tn"] = r.confusion.tn;
  j["fp"] = r.confusion.fp;
  j["fn"] = r.confusion.fn;
}

std::vector<int> labels_of(std::span<const FeatureVector> rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (const auto& fv : rows) {
    if (!fv.label) throw Error(ErrorCode::InvariantViolation, "unlabeled features");
    out.push_back(*fv.label);
  }
  return out;
}

std::string mark(bool on) { return on ? "+" : "-"; }

}  // namespace

void ConfusionMatrix::add(int truth, int predicted) noexcept {
  if (truth == 1) {
    (predicted == 1 ? tp : fn) += 1;
  } else {
    (predicted == 1 ? fp : tn) += 1;
  }
}

EvalReport compute_metrics(const ConfusionMatrix& c) {
  EvalReport r;
  r.confusion = c;
  r.acc = percent(c.tp + c.tn, c.total());
  r.fpr = percent(c.fp, c.fp + c.tn);
  r.fnr = percent(c.fn, c.fn + c.tp);
  r.fdr = percent(c.fp, c.tp + c.fp);
  return r;
}

std::optional<double> specificity(const ConfusionMatrix& c) { return percent(c.tn, c.fp + c.tn); }

std::optional<double> recall(const ConfusionMatrix& c) { return percent(c.tp, c.fn + c.tp); }

ConfusionMatrix evaluate(const LinearModel& model, std::span<const FeatureVector> features) {
  ConfusionMatrix c;
  for (const auto& fv : features) {
    if (!fv.label) throw Error(ErrorCode::InvariantViolation, "unlabeled features");
    c.add(*fv.label, predict_label(model, fv));
  }
  return c;
}

EpisodeFeatures extract_episode(const NamedEpisode& named, const FingertipGeometry& geometry,
                                const DwtConfig& config) {
  const LabeledEpisode& ep = named.episode;
  if (ep.labels.size() != ep.frames.size()) {
    throw Error(ErrorCode::InvariantViolation, named.name + ": labels and frames differ in length");
  }
  FeatureExtractor extractor(config);
  EpisodeFeatures out{named.name, {}};
  if (ep.frames.size() >= config.n_w) out.rows.reserve(ep.frames.size() - config.n_w + 1);
  for (std::size_t k = 0; k < ep.frames.size(); ++k) {
    if (auto fv = extractor.push(aggregate_tip_force(ep.frames[k], geometry))) {
      fv->label = ep.labels[k];
      out.rows.push_back(*fv);
    }
  }
  return out;
}

std::vector<EpisodeFeatures> extract_features(std::span<const NamedEpisode> episodes,
                                              const FingertipGeometry& geometry, const DwtConfig& config) {
  std::vector<EpisodeFeatures> out;
  out.reserve(episodes.size());
  for (const auto& ep : episodes) out.push_back(extract_episode(ep, geometry, config));
  return out;
}

std::vector<FeatureVector> pool(std::span<const EpisodeFeatures> episodes) {
  std::vector<FeatureVector> rows;
  std::size_t n = 0;
  for (const auto& ep : episodes) n += ep.rows.size();
  rows.reserve(n);
  for (const auto& ep : episodes) rows.insert(rows.end(), ep.rows.begin(), ep.rows.end());
  return rows;
}

std::string_view to_string(SplitMode mode) noexcept {
  return mode == SplitMode::SampleLevel ? "sample" : "episode";
}

SplitMode split_mode_from_string(std::string_view name) {
  if (name == "sample") return SplitMode::SampleLevel;
  if (name == "episode") return SplitMode::EpisodeLevel;
  throw Error(ErrorCode::InvalidConfig, "unknown split mode '" + std::string(name) + "'");
}

SplitIndices split_indices(std::span<const EpisodeFeatures> episodes, double ratio, SplitMode mode,
                           std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw Error(ErrorCode::InvalidConfig, "split ratio must be in (0, 1)");
  std::vector<std::size_t> offsets;
  std::size_t total = 0;
  for (const auto& ep : episodes) {
    offsets.push_back(total);
    total += ep.rows.size();
  }
  if (total == 0) throw Error(ErrorCode::EmptyDataset, "no feature rows to split");

  std::mt19937_64 rng(seed);
  SplitIndices out;
  if (mode == SplitMode::SampleLevel) {
    std::vector<std::size_t> order(total);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    const auto n_train = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(total)));
    out.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  } else {
    std::vector<std::size_t> order(episodes.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    const auto n_train = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(episodes.size())));
    for (std::size_t e = 0; e < order.size(); ++e) {
      const std::size_t ep = order[e];
      auto& dst = e < n_train ? out.train : out.test;
      for (std::size_t r = 0; r < episodes[ep].rows.size(); ++r) dst.push_back(offsets[ep] + r);
    }
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

Split split_dataset(std::span<const EpisodeFeatures> episodes, double ratio, SplitMode mode,
                    std::uint64_t seed) {
  const SplitIndices idx = split_indices(episodes, ratio, mode, seed);
  const std::vector<FeatureVector> rows = pool(episodes);
  Split s;
  s.train.reserve(idx.train.size());
  s.test.reserve(idx.test.size());
  for (std::size_t i : idx.train) s.train.push_back(rows[i]);
  for (std::size_t i : idx.test) s.test.push_back(rows[i]);
  return s;
}

EvalReport train_and_evaluate(std::span<const EpisodeFeatures> episodes, const ExperimentConfig& config) {
  const Split split = split_dataset(episodes, config.split_ratio, config.split_mode, config.split_seed);
  const LinearModel model = train(split.train, config.train);
  return compute_metrics(evaluate(model, split.test));
}

std::vector<SweepRow> window_sweep(std::span<const NamedEpisode> episodes, const FingertipGeometry& geometry,
                                   std::span<const std::size_t> n_w_values, const ExperimentConfig& config) {
  for (std::size_t n_w : n_w_values) DwtConfig{n_w, config.dwt.denominator_mode}.validate();
  std::vector<SweepRow> rows;
  for (std::size_t n_w : n_w_values) {
    ExperimentConfig cfg = config;
    cfg.dwt.n_w = n_w;
    cfg.train.kind = ModelKind::LogReg;
    const auto features = extract_features(episodes, geometry, cfg.dwt);
    rows.push_back({n_w, train_and_evaluate(features, cfg)});
  }
  return rows;
}

std::vector<FeatureMask> standard_ablation_masks() {
  // Groups: F_a, F_tip, m, sigma. Full set first, then single and pairwise removals.
  constexpr bool kRows[11][4] = {
      {true, true, true, true},   {false, true, true, true},   {true, false, true, true},
      {true, true, false, true},  {true, true, true, false},   {false, false, true, true},
      {true, false, false, true}, {true, true, false, false},  {false, true, false, true},
      {false, true, true, false}, {true, false, true, false},
  };
  std::vector<FeatureMask> masks;
  for (const auto& r : kRows) masks.push_back({r[0], r[1], r[1], r[1], r[2], r[3]});
  return masks;
}

std::vector<AblationRow> ablation_study(std::span<const EpisodeFeatures> episodes,
                                        std::span<const FeatureMask> masks, const ExperimentConfig& config) {
  for (const auto& mask : masks) {
    if (active_feature_count(mask) == 0) throw Error(ErrorCode::InvalidConfig, "ablation mask keeps no feature");
  }
  const Split split = split_dataset(episodes, config.split_ratio, config.split_mode, config.split_seed);
  std::vector<AblationRow> rows;
  for (const auto& mask : masks) {
    TrainConfig tc = config.train;
    tc.kind = ModelKind::LogReg;
    tc.mask = mask;
    const LinearModel model = train(split.train, tc);
    rows.push_back({mask, compute_metrics(evaluate(model, split.test))});
  }
  return rows;
}

ThresholdFit fit_energy_threshold(std::span<const double> energies, std::span<const int> labels) {
  if (energies.size() != labels.size()) throw Error(ErrorCode::LengthMismatch, "energies and labels differ");
  if (energies.empty()) throw Error(ErrorCode::EmptyDataset, "no samples for threshold fit");

  std::vector<std::size_t> order(energies.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return energies[a] < energies[b]; });

  const double lo = energies[order.front()];
  const double hi = energies[order.back()];
  // Threshold below everything: all predicted unstable.
  std::size_t correct = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 0));
  ThresholdFit best{lo - (1.0 + std::abs(lo)), correct};

  std::size_t i = 0;
  while (i < order.size()) {
    const double e = energies[order[i]];
    // Move the whole group of equal energies below the threshold.
    while (i < order.size() && energies[order[i]] == e) {
      correct += labels[order[i]] == 1 ? 1 : 0;
      correct -= labels[order[i]] == 0 ? 1 : 0;
      ++i;
    }
    const double threshold = i < order.size() ? 0.5 * (e + energies[order[i]]) : hi + (1.0 + std::abs(hi));
    if (correct > best.correct) best = {threshold, correct};
  }
  return best;
}

BaselineResult energy_threshold_baseline(std::span<const EpisodeFeatures> episodes,
                                         const ExperimentConfig& config) {
  const Split split = split_dataset(episodes, config.split_ratio, config.split_mode, config.split_seed);
  if (split.train.empty() || split.test.empty()) throw Error(ErrorCode::EmptyDataset, "empty split");

  std::vector<double> energies;
  energies.reserve(split.train.size());
  for (const auto& fv : split.train) energies.push_back(fv.fx_detail_energy);
  const std::vector<int> labels = labels_of(split.train);
  const ThresholdFit fit = fit_energy_threshold(energies, labels);

  ConfusionMatrix c;
  bool any_stable = false;
  bool any_unstable = false;
  for (const auto& fv : split.test) {
    const int predicted = fv.fx_detail_energy < fit.threshold ? 1 : 0;
    (predicted == 1 ? any_stable : any_unstable) = true;
    c.add(*fv.label, predicted);
  }

  BaselineResult result;
  result.threshold = fit.threshold;
  result.train_accuracy = 100.0 * static_cast<double>(fit.correct) / static_cast<double>(split.train.size());
  result.report = compute_metrics(c);
  const bool single_class_truth = c.tp + c.fn == 0 || c.tn + c.fp == 0;
  result.report.degenerate = single_class_truth || !(any_stable && any_unstable);
  return result;
}

std::string format_percent(const std::optional<double>& value) {
  if (!value) return "undef";
  std::ostringstream os;
  os << std::fixed << std::setprecision(1) << *value;
  return os.str();
}

std::string report_to_json(const EvalReport& report) {
  ordered_json j;
  put_metrics(j, report);
  j["degenerate"] = report.degenerate;
  return j.dump(2);
}

std::string format_report_table(const EvalReport& r) {
  std::ostringstream os;
  os << "            pred 0    pred 1\n";
  os << "true 0  " << std::setw(10) << r.confusion.tn << std::setw(10) << r.confusion.fp << '\n';
  os << "true 1  " << std::setw(10) << r.confusion.fn << std::setw(10) << r.confusion.tp << '\n';
  os << "Acc " << format_percent(r.acc) << "  FPR " << format_percent(r.fpr) << "  FNR "
     << format_percent(r.fnr) << "  FDR " << format_percent(r.fdr);
  if (r.degenerate) os << "  (degenerate)";
  os << '\n';
  return os.str();
}

std::string sweep_to_json(std::span<const SweepRow> rows) {
  ordered_json j;
  auto arr = ordered_json::array();
  for (const auto& row : rows) {
    ordered_json o;
    o["n_w"] = row.n_w;
    put_metrics(o, row.report);
    arr.push_back(std::move(o));
  }
  j["rows"] = std::move(arr);
  return j.dump(2);
}

std::string format_sweep_table(std::span<const SweepRow> rows) {
  std::ostringstream os;
  os << std::left << std::setw(6) << "N_w" << std::right;
  for (const auto& row : rows) os << std::setw(7) << row.n_w;
  os << '\n';
  const auto line = [&](const char* name, auto pick) {
    os << std::left << std::setw(6) << name << std::right;
    for (const auto& row : rows) os << std::setw(7) << format_percent(pick(row.report));
    os << '\n';
  };
  line("FPR", [](const EvalReport& r) { return r.fpr; });
  line("FNR", [](const EvalReport& r) { return r.fnr; });
  line("FDR", [](const EvalReport& r) { return r.fdr; });
  line("Acc", [](const EvalReport& r) { return r.acc; });
  return os.str();
}

std::string ablation_to_json(std::span<const AblationRow> rows) {
  ordered_json j;
  auto arr = ordered_json::array();
  for (const auto& row : rows) {
    ordered_json o;
    o["mask"] = to_string(row.mask);
    put_metrics(o, row.report);
    arr.push_back(std::move(o));
  }
  j["rows"] = std::move(arr);
  return j.dump(2);
}

std::string format_ablation_table(std::span<const AblationRow> rows) {
  std::ostringstream os;
  os << "  Fa Ftip    m sigma |    FPR    FNR    FDR    Acc\n";
  for (const auto& row : rows) {
    const auto& m = row.mask;
    const bool tip = m[1] && m[2] && m[3];
    os << std::setw(4) << mark(m[0]) << std::setw(5) << mark(tip) << std::setw(5) << mark(m[4])
       << std::setw(6) << mark(m[5]) << " |";
    for (const auto& v : {row.report.fpr, row.report.fnr, row.report.fdr, row.report.acc}) {
      os << std::setw(7) << format_percent(v);
    }
    os << '\n';
  }
  return os.str();
}

std::string baseline_to_json(const BaselineResult& result) {
  ordered_json j;
  j["feature"] = "fx_detail_energy";
  j["threshold"] = result.threshold;
  j["train_acc"] = result.train_accuracy;
  put_metrics(j, result.report);
  j["degenerate"] = result.report.degenerate;
  return j.dump(2);
}

}  // namespace gripwatch
