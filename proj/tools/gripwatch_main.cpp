// gripwatch: simulate, extract, train, evaluate and run the online grasp
// stability detector from the command line.
//
// Exit codes: 0 success, 1 usage error, 2 data error. Errors are reported on
// stderr as a single line "gripwatch: error: <Code>: <message>".

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gripwatch/classify.hpp"
#include "gripwatch/detector.hpp"
#include "gripwatch/episode_io.hpp"
#include "gripwatch/error.hpp"
#include "gripwatch/eval.hpp"
#include "gripwatch/grasp_sim.hpp"
#include "gripwatch/haar_features.hpp"
#include "gripwatch/tactile.hpp"

namespace fs = std::filesystem;
using namespace gripwatch;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << text << '\n';
}

std::vector<std::string> split_list(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

FingertipGeometry geometry_or_default(const std::string& path, std::size_t n_s) {
  return path.empty() ? default_fingertip_geometry(n_s) : load_geometry(path);
}

std::size_t episode_taxels(const std::vector<NamedEpisode>& episodes) {
  return episodes.front().episode.metadata.n_s;
}

// Options shared by commands that start from a directory of episode logs.
struct DatasetOptions {
  std::string dataset;
  std::string geometry;
  std::size_t n_w = kDefaultWindow;
  std::string denominator = "window_length";
  double ratio = 0.8;
  std::string split_mode = "sample";
  std::uint64_t seed = 42;
  double lambda = 1e-4;
  int max_iters = 500;
  std::string report;

  void attach(CLI::App* cmd, bool with_window) {
    cmd->add_option("--dataset", dataset, "Directory of episode logs")->required();
    cmd->add_option("--geometry", geometry, "Fingertip geometry JSON (default: built-in layout)");
    if (with_window) cmd->add_option("--n-w", n_w, "Window length")->capture_default_str();
    cmd->add_option("--denominator", denominator, "window_length | coefficient_count")->capture_default_str();
    cmd->add_option("--ratio", ratio, "Training fraction")->capture_default_str();
    cmd->add_option("--split-mode", split_mode, "sample | episode")->capture_default_str();
    cmd->add_option("--seed", seed, "Split seed")->capture_default_str();
    cmd->add_option("--lambda", lambda, "L2 regularisation")->capture_default_str();
    cmd->add_option("--max-iters", max_iters, "Optimiser iterations")->capture_default_str();
    cmd->add_option("--report", report, "Write the JSON report here");
  }

  ExperimentConfig experiment() const {
    ExperimentConfig cfg;
    cfg.dwt = {n_w, denominator_mode_from_string(denominator)};
    cfg.split_ratio = ratio;
    cfg.split_mode = split_mode_from_string(split_mode);
    cfg.split_seed = seed;
    cfg.train.l2_lambda = lambda;
    cfg.train.max_iters = max_iters;
    cfg.train.seed = seed;
    return cfg;
  }
};

int run_simulate(int objects, int episodes, std::uint64_t seed, const std::string& out_dir,
                 const EpisodeConfig& base_in) {
  EpisodeConfig base = base_in;
  base.seed = seed;
  const auto dataset = generate_dataset(objects, episodes, base);
  fs::create_directories(out_dir);
  std::size_t i = 0;
  for (int o = 1; o <= objects; ++o) {
    for (int e = 1; e <= episodes; ++e, ++i) {
      char name[64];
      std::snprintf(name, sizeof(name), "episode_o%02d_e%02d.jsonl", o, e);
      save_episode_log(dataset[i], fs::path(out_dir) / name);
    }
  }
  std::cerr << "wrote " << dataset.size() << " episodes to " << out_dir << '\n';
  return 0;
}

int run_extract(const std::string& in_dir, std::size_t n_w, const std::string& denominator,
                const std::string& geometry_path, const std::string& out) {
  const auto episodes = load_episode_dir(in_dir);
  const auto geometry = geometry_or_default(geometry_path, episode_taxels(episodes));
  FeatureDump dump;
  dump.config = {n_w, denominator_mode_from_string(denominator)};
  dump.config.validate();
  dump.episodes = extract_features(episodes, geometry, dump.config);
  save_feature_dump(dump, out);
  std::size_t rows = 0;
  for (const auto& ep : dump.episodes) rows += ep.rows.size();
  std::cerr << "wrote " << rows << " feature vectors from " << episodes.size() << " episodes\n";
  return 0;
}

int run_split(const std::string& features, double ratio, const std::string& mode, std::uint64_t seed,
              const std::string& train_out, const std::string& test_out) {
  const FeatureDump dump = load_feature_dump(features);
  const SplitIndices idx = split_indices(dump.episodes, ratio, split_mode_from_string(mode), seed);

  // Keep episode grouping so each half stays a valid feature dump.
  FeatureDump train{dump.config, {}};
  FeatureDump test{dump.config, {}};
  std::size_t offset = 0;
  std::size_t ti = 0;
  for (const auto& ep : dump.episodes) {
    EpisodeFeatures tr{ep.name, {}};
    EpisodeFeatures te{ep.name, {}};
    for (std::size_t r = 0; r < ep.rows.size(); ++r) {
      const std::size_t global = offset + r;
      if (ti < idx.train.size() && idx.train[ti] == global) {
        tr.rows.push_back(ep.rows[r]);
        ++ti;
      } else {
        te.rows.push_back(ep.rows[r]);
      }
    }
    offset += ep.rows.size();
    if (!tr.rows.empty()) train.episodes.push_back(std::move(tr));
    if (!te.rows.empty()) test.episodes.push_back(std::move(te));
  }
  save_feature_dump(train, train_out);
  save_feature_dump(test, test_out);
  std::cerr << "train " << idx.train.size() << " rows, test " << idx.test.size() << " rows\n";
  return 0;
}

int run_train(const std::string& features, const TrainConfig& config, const std::string& out) {
  const FeatureDump dump = load_feature_dump(features);
  const auto rows = pool(dump.episodes);
  const LinearModel model = train(rows, config);
  for (const auto& w : model.standardizer.warnings) std::cerr << "gripwatch: warning: " << w << '\n';
  save_model(model, out);
  const EvalReport fit = compute_metrics(evaluate(model, rows));
  std::cerr << "trained " << to_string(model.kind) << " on " << rows.size() << " rows (lambda "
            << model.train_config.l2_lambda << "), training Acc " << format_percent(fit.acc) << "%\n";
  return 0;
}

int run_eval(const std::string& model_path, const std::string& features, const std::string& report) {
  const LinearModel model = load_model(model_path);
  const FeatureDump dump = load_feature_dump(features);
  const auto rows = pool(dump.episodes);
  const EvalReport r = compute_metrics(evaluate(model, rows));
  std::cout << format_report_table(r);
  if (!report.empty()) write_text(report, report_to_json(r));
  return 0;
}

int run_sweep(const DatasetOptions& opt, const std::string& n_w_list) {
  std::vector<std::size_t> windows;
  for (const auto& item : split_list(n_w_list, ',')) windows.push_back(std::stoul(item));
  if (windows.empty()) throw Error(ErrorCode::InvalidConfig, "no window sizes given");
  const auto episodes = load_episode_dir(opt.dataset);
  const auto geometry = geometry_or_default(opt.geometry, episode_taxels(episodes));
  const auto rows = window_sweep(episodes, geometry, windows, opt.experiment());
  std::cout << format_sweep_table(rows);
  if (!opt.report.empty()) write_text(opt.report, sweep_to_json(rows));
  return 0;
}

int run_ablate(const DatasetOptions& opt, const std::string& masks_text) {
  std::vector<FeatureMask> masks;
  if (masks_text == "builtin" || masks_text == "builtin-table3") {
    masks = standard_ablation_masks();
  } else {
    for (const auto& m : split_list(masks_text, ';')) masks.push_back(parse_feature_mask(m));
  }
  const auto episodes = load_episode_dir(opt.dataset);
  const auto geometry = geometry_or_default(opt.geometry, episode_taxels(episodes));
  const ExperimentConfig cfg = opt.experiment();
  const auto features = extract_features(episodes, geometry, cfg.dwt);
  const auto rows = ablation_study(features, masks, cfg);
  std::cout << format_ablation_table(rows);
  if (!opt.report.empty()) write_text(opt.report, ablation_to_json(rows));
  return 0;
}

int run_baseline(const DatasetOptions& opt) {
  const auto episodes = load_episode_dir(opt.dataset);
  const auto geometry = geometry_or_default(opt.geometry, episode_taxels(episodes));
  const ExperimentConfig cfg = opt.experiment();
  const auto features = extract_features(episodes, geometry, cfg.dwt);
  const BaselineResult base = energy_threshold_baseline(features, cfg);
  const EvalReport full = train_and_evaluate(features, cfg);

  std::cout << "F_x detail-energy threshold " << base.threshold << " (train Acc "
            << format_percent(base.train_accuracy) << ")\n";
  std::cout << format_report_table(base.report);
  std::cout << "full LogReg pipeline: Acc " << format_percent(full.acc) << "  FDR " << format_percent(full.fdr)
            << '\n';
  if (!opt.report.empty()) write_text(opt.report, baseline_to_json(base));
  return 0;
}

struct DetectOptions {
  std::string model;
  std::vector<std::string> model_for;
  std::string geometry;
  std::optional<double> tau;
  std::string in;
  std::string out;
  std::size_t n_w = kDefaultWindow;
  std::string denominator = "window_length";
};

int run_detect(const DetectOptions& opt) {
  auto model = std::make_shared<const LinearModel>(load_model(opt.model));
  DetectorConfig config;
  config.dwt = {opt.n_w, denominator_mode_from_string(opt.denominator)};
  config.tau = opt.tau;

  std::ifstream file;
  std::istream* in = &std::cin;
  if (!opt.in.empty() && opt.in != "-") {
    file.open(opt.in);
    if (!file) throw Error(ErrorCode::IoError, "cannot open " + opt.in);
    in = &file;
  }
  std::ofstream out_file;
  std::ostream* out = &std::cout;
  if (!opt.out.empty() && opt.out != "-") {
    out_file.open(opt.out, std::ios::binary | std::ios::trunc);
    if (!out_file) throw Error(ErrorCode::IoError, "cannot write " + opt.out);
    out = &out_file;
  }

  std::optional<GraspDetector> detector;
  std::optional<std::size_t> header_n_s;
  std::string line;
  std::size_t line_no = 0;
  std::size_t frame_index = 0;
  std::size_t rejected = 0;
  while (std::getline(*in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const StreamRecord rec = parse_stream_line(line);
      if (rec.kind == StreamRecord::Kind::Header) {
        header_n_s = rec.n_s;
        continue;
      }
      const std::size_t this_frame = frame_index++;
      try {
        if (header_n_s && rec.frame.readings.size() != *header_n_s) {
          throw Error(ErrorCode::LengthMismatch, "expected " + std::to_string(*header_n_s) + " taxels, got " +
                                                     std::to_string(rec.frame.readings.size()));
        }
        if (!detector) {
          detector.emplace(geometry_or_default(opt.geometry, rec.frame.readings.size()), model, config);
          for (const auto& entry : opt.model_for) {
            const auto eq = entry.find('=');
            if (eq == std::string::npos) throw Error(ErrorCode::InvalidConfig, "--model-for expects TIP=PATH");
            detector->set_model(entry.substr(0, eq),
                                std::make_shared<const LinearModel>(load_model(entry.substr(eq + 1))));
          }
        }
        if (auto d = detector->process(rec.frame)) *out << decision_to_json(*d) << '\n';
      } catch (const Error& e) {
        if (e.code() == ErrorCode::InvalidConfig || e.code() == ErrorCode::IoError) throw;
        ++rejected;
        std::cerr << "gripwatch: error: " << to_string(e.code()) << ": line " << line_no << " (frame "
                  << this_frame << "): " << e.what() << '\n';
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ParseError && e.code() != ErrorCode::VersionMismatch) throw;
      ++rejected;
      std::cerr << "gripwatch: error: " << to_string(e.code()) << ": line " << line_no << ": " << e.what()
                << '\n';
    }
  }
  out->flush();
  return rejected == 0 ? 0 : kExitData;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gripwatch - per-fingertip grasp stability detection from 3-axis tactile data"};
  app.require_subcommand(1);

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Generate labeled synthetic grasp episodes");
  int sim_objects = 6;
  int sim_episodes = 5;
  std::uint64_t sim_seed = 7;
  std::string sim_out;
  std::string sim_direction = "random";
  EpisodeConfig sim_base;
  simulate->add_option("--objects", sim_objects, "Number of objects")->capture_default_str();
  simulate->add_option("--episodes", sim_episodes, "Episodes per object")->capture_default_str();
  simulate->add_option("--seed", sim_seed, "Base seed")->capture_default_str();
  simulate->add_option("--out", sim_out, "Output directory")->required();
  simulate->add_option("--n-s", sim_base.n_s, "Taxels per fingertip")->capture_default_str();
  simulate->add_option("--noise-std", sim_base.noise_std, "Per-taxel noise std")->capture_default_str();
  simulate->add_option("--disturbances", sim_base.disturbance.count, "Disturbances per episode")
      ->capture_default_str();
  simulate->add_option("--magnitude", sim_base.disturbance.magnitude, "Disturbance magnitude")
      ->capture_default_str();
  simulate->add_option("--direction", sim_direction, "random | downward | lateral")->capture_default_str();
  simulate->add_option("--fingertip", sim_base.fingertip_id, "Fingertip id")->capture_default_str();

  // geometry
  auto* geometry_cmd = app.add_subcommand("geometry", "Write the built-in fingertip geometry");
  std::size_t geo_n_s = kDefaultTaxelCount;
  std::string geo_out;
  geometry_cmd->add_option("--n-s", geo_n_s, "Taxels per fingertip")->capture_default_str();
  geometry_cmd->add_option("--out", geo_out, "Output file")->required();

  // extract
  auto* extract = app.add_subcommand("extract", "Aggregate episodes and dump feature vectors");
  std::string ex_in;
  std::string ex_out;
  std::string ex_geometry;
  std::size_t ex_n_w = kDefaultWindow;
  std::string ex_denominator = "window_length";
  extract->add_option("--in", ex_in, "Directory of episode logs")->required();
  extract->add_option("--out", ex_out, "Feature dump (JSONL)")->required();
  extract->add_option("--n-w", ex_n_w, "Window length")->capture_default_str();
  extract->add_option("--geometry", ex_geometry, "Fingertip geometry JSON");
  extract->add_option("--denominator", ex_denominator, "window_length | coefficient_count")->capture_default_str();

  // split
  auto* split = app.add_subcommand("split", "Split a feature dump into train and test dumps");
  std::string sp_features;
  double sp_ratio = 0.8;
  std::string sp_mode = "sample";
  std::uint64_t sp_seed = 42;
  std::string sp_train;
  std::string sp_test;
  split->add_option("--features", sp_features, "Feature dump")->required();
  split->add_option("--ratio", sp_ratio, "Training fraction")->capture_default_str();
  split->add_option("--mode", sp_mode, "sample | episode")->capture_default_str();
  split->add_option("--seed", sp_seed, "Shuffle seed")->capture_default_str();
  split->add_option("--train-out", sp_train, "Training dump")->required();
  split->add_option("--test-out", sp_test, "Test dump")->required();

  // train
  auto* train_cmd = app.add_subcommand("train", "Train a logreg or linear SVM model");
  std::string tr_features;
  std::string tr_kind = "logreg";
  std::string tr_mask = to_string(default_feature_mask());
  std::string tr_out;
  std::string tr_grid;
  TrainConfig tr_config;
  train_cmd->add_option("--features", tr_features, "Labeled feature dump")->required();
  train_cmd->add_option("--kind", tr_kind, "logreg | svm")->capture_default_str();
  train_cmd->add_option("--mask", tr_mask, "Features to use")->capture_default_str();
  train_cmd->add_option("--out", tr_out, "Model file")->required();
  train_cmd->add_option("--lambda", tr_config.l2_lambda, "L2 regularisation")->capture_default_str();
  train_cmd->add_option("--max-iters", tr_config.max_iters, "Optimiser iterations")->capture_default_str();
  train_cmd->add_option("--tolerance", tr_config.tolerance, "Gradient-norm tolerance")->capture_default_str();
  train_cmd->add_option("--seed", tr_config.seed, "Seed for CV folds")->capture_default_str();
  train_cmd->add_option("--grid", tr_grid, "Lambda grid for k-fold CV: comma list or 'default'");
  train_cmd->add_option("--folds", tr_config.cv_folds, "CV folds")->capture_default_str();

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a model on a labeled feature dump");
  std::string ev_model;
  std::string ev_features;
  std::string ev_report;
  eval_cmd->add_option("--model", ev_model, "Model file")->required();
  eval_cmd->add_option("--features", ev_features, "Labeled feature dump")->required();
  eval_cmd->add_option("--report", ev_report, "Write the JSON report here");

  // sweep / ablate / baseline
  auto* sweep = app.add_subcommand("sweep", "LogReg performance versus window length");
  DatasetOptions sw_opt;
  std::string sw_windows = "4,6,8,10,12,14,16,18";
  sw_opt.attach(sweep, false);
  sweep->add_option("--n-w", sw_windows, "Comma separated window lengths")->capture_default_str();

  auto* ablate = app.add_subcommand("ablate", "Feature ablation study");
  DatasetOptions ab_opt;
  std::string ab_masks = "builtin";
  ab_opt.attach(ablate, true);
  ablate->add_option("--masks", ab_masks, "builtin or masks separated by ';'")->capture_default_str();

  auto* baseline = app.add_subcommand("baseline", "F_x detail-energy threshold baseline");
  DatasetOptions bl_opt;
  bl_opt.attach(baseline, true);

  // detect
  auto* detect = app.add_subcommand("detect", "Run the online detector over a frame stream");
  DetectOptions dt;
  detect->add_option("--model", dt.model, "Default model file")->required();
  detect->add_option("--model-for", dt.model_for, "Per-fingertip model, TIP=PATH (repeatable)");
  detect->add_option("--geometry", dt.geometry, "Fingertip geometry JSON (default: built-in layout)");
  detect->add_option("--tau", dt.tau, "Contact threshold on |F_tip| (default: estimated from the first 50 frames)");
  detect->add_option("--in", dt.in, "Input stream (default: stdin)");
  detect->add_option("--out", dt.out, "Output JSONL (default: stdout)");
  detect->add_option("--n-w", dt.n_w, "Window length")->capture_default_str();
  detect->add_option("--denominator", dt.denominator, "window_length | coefficient_count")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "gripwatch: error: Usage: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (simulate->parsed()) {
      sim_base.disturbance.direction_mode = direction_mode_from_string(sim_direction);
      return run_simulate(sim_objects, sim_episodes, sim_seed, sim_out, sim_base);
    }
    if (geometry_cmd->parsed()) {
      save_geometry(default_fingertip_geometry(geo_n_s), geo_out);
      return 0;
    }
    if (extract->parsed()) return run_extract(ex_in, ex_n_w, ex_denominator, ex_geometry, ex_out);
    if (split->parsed()) return run_split(sp_features, sp_ratio, sp_mode, sp_seed, sp_train, sp_test);
    if (train_cmd->parsed()) {
      tr_config.kind = model_kind_from_string(tr_kind);
      tr_config.mask = parse_feature_mask(tr_mask);
      if (tr_grid == "default") {
        tr_config.hyper_grid = default_lambda_grid();
      } else {
        for (const auto& v : split_list(tr_grid, ',')) tr_config.hyper_grid.push_back(std::stod(v));
      }
      return run_train(tr_features, tr_config, tr_out);
    }
    if (eval_cmd->parsed()) return run_eval(ev_model, ev_features, ev_report);
    if (sweep->parsed()) return run_sweep(sw_opt, sw_windows);
    if (ablate->parsed()) return run_ablate(ab_opt, ab_masks);
    if (baseline->parsed()) return run_baseline(bl_opt);
    if (detect->parsed()) return run_detect(dt);
  } catch (const Error& e) {
    const bool usage = e.code() == ErrorCode::InvalidConfig;
    std::cerr << "gripwatch: error: " << to_string(e.code()) << ": " << e.what() << '\n';
    return usage ? kExitUsage : kExitData;
  } catch (const std::logic_error& e) {
    // Numeric list parsing (stoul, stod) of a malformed option value.
    std::cerr << "gripwatch: error: Usage: bad option value (" << e.what() << ")\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "gripwatch: error: Internal: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
