// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gripwatch/classify.hpp"
#include "gripwatch/episode_io.hpp"
#include "gripwatch/eval.hpp"
#include "gripwatch/grasp_sim.hpp"
#include "gripwatch/haar_features.hpp"
#include "../test_support.hpp"

namespace fs = std::filesystem;
using namespace gripwatch;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
  std::cout << "criterion " << std::setw(2) << id << ": " << (pass ? "PASS" : "FAIL") << "  " << detail
            << std::endl;
  if (!pass) ++failures;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int precision = 3) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << v;
  return os.str();
}

std::string sci(double v) {
  std::ostringstream os;
  os << std::scientific << std::setprecision(2) << v;
  return os.str();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int shell(const std::string& args, const fs::path& out, const fs::path& err) {
  const std::string cmd = std::string("'") + GRIPWATCH_CLI + "' " + args + " </dev/null >'" + out.string() +
                          "' 2>'" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

// 1. Energy conservation and perfect reconstruction on random windows.
void criterion_dwt() {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  std::uniform_int_distribution<int> half(1, 9);
  const double root2 = std::sqrt(2.0);
  double worst = 0.0;

  const auto t0 = Clock::now();
  for (int w = 0; w < 10000; ++w) {
    const DwtConfig cfg{2 * static_cast<std::size_t>(half(rng))};
    std::vector<double> x(cfg.n_w);
    for (auto& v : x) v = u(rng);
    const auto d = haar_decompose(x, cfg);
    double ex = 0.0, ec = 0.0;
    for (double v : x) ex += v * v;
    for (std::size_t j = 0; j < cfg.n_w / 2; ++j) {
      ec += d.approximations[j] * d.approximations[j] + d.details[j] * d.details[j];
      worst = std::max(worst, std::abs((d.approximations[j] + d.details[j]) / root2 - x[2 * j]));
      worst = std::max(worst, std::abs((d.approximations[j] - d.details[j]) / root2 - x[2 * j + 1]));
    }
    worst = std::max(worst, std::abs(ex - ec));
  }
  const double elapsed = seconds_since(t0);
  report(1, worst <= 1e-9 && elapsed < 1.0,
         "10000 random windows, max residual " + sci(worst) + " (tol 1e-9), " + fmt(elapsed) + " s (< 1 s)");
}

// 2. Streaming m and sigma equal a brute-force recomputation at every step.
void criterion_oracle() {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<ForceSample> samples;
  for (std::size_t k = 0; k < 10000; ++k) {
    const Vec3 f(3.0 + g(rng), g(rng), g(rng));
    samples.push_back({k / 150.0, f, f.norm()});
  }
  double worst = 0.0;
  std::size_t steps = 0;
  for (auto mode : {DenominatorMode::WindowLength, DenominatorMode::CoefficientCount}) {
    const auto den = mode == DenominatorMode::WindowLength ? testing::Denominator::Full : testing::Denominator::Half;
    const DwtConfig cfg{kDefaultWindow, mode};
    const auto rows = extract_stream(samples, cfg);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      std::vector<double> win;
      for (std::size_t k = i; k < i + cfg.n_w; ++k) win.push_back(samples[k].f_a);
      worst = std::max(worst, std::abs(rows[i].m - testing::oracle_m(win, den)));
      worst = std::max(worst, std::abs(rows[i].sigma - testing::oracle_sigma(win, den)));
      ++steps;
    }
  }
  report(2, worst <= 1e-12 && steps == 2 * (10000 - kDefaultWindow + 1),
         std::to_string(steps) + " streaming steps, max |diff| " + sci(worst) + " (tol 1e-12)");
}

// 3. Metrics on balanced 1000-per-class confusion matrices with known accuracy.
void criterion_metrics() {
  const double logreg = *compute_metrics({955, 951, 49, 45}).acc;
  const double svm = *compute_metrics({965, 962, 38, 35}).acc;
  report(3, std::abs(logreg - 95.3) <= 0.05 && std::abs(svm - 96.35) <= 0.05,
         "LogReg Acc " + fmt(logreg, 2) + " (95.3 +- 0.05), SVM Acc " + fmt(svm, 2) + " (96.35 +- 0.05)");
}

// 4. LogReg gradient against central differences.
void criterion_gradient() {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<FeatureVector> rows;
  for (int i = 0; i < 200; ++i) {
    FeatureVector v;
    const int label = i % 2;
    const double s = label ? 1.0 : -1.0;
    v.f_a = 3.0 + s + g(rng);
    v.f_tip = Vec3(0.5 * s + g(rng), g(rng), g(rng));
    v.m = 5.0 + g(rng);
    v.sigma = 0.2 - 0.1 * s + 0.1 * g(rng);
    v.label = label;
    rows.push_back(v);
  }
  const auto mask = full_feature_mask();
  const auto st = fit_standardizer(rows, mask);
  const Eigen::MatrixXd x = design_matrix(rows, st, mask);
  Eigen::VectorXd y(200);
  for (int i = 0; i < 200; ++i) y[i] = *rows[static_cast<std::size_t>(i)].label;

  std::uniform_real_distribution<double> u(-2.0, 2.0);
  const double h = 1e-5;
  double worst = 0.0;
  for (int p = 0; p < 100; ++p) {
    Eigen::VectorXd params(x.cols() + 1);
    for (Eigen::Index j = 0; j < params.size(); ++j) params[j] = u(rng);
    const double lambda = 1e-3;
    const auto obj = logreg_objective(x, y, params, lambda);
    Eigen::VectorXd fd(params.size());
    for (Eigen::Index j = 0; j < params.size(); ++j) {
      Eigen::VectorXd hi = params, lo = params;
      hi[j] += h;
      lo[j] -= h;
      fd[j] = (logreg_objective(x, y, hi, lambda).value - logreg_objective(x, y, lo, lambda).value) / (2 * h);
    }
    worst = std::max(worst, (obj.gradient - fd).norm() / std::max(obj.gradient.norm(), fd.norm()));
  }
  report(4, worst < 1e-6, "100 random points, 200 samples, max relative error " + sci(worst) + " (< 1e-6)");
}

// 5. Linear SVM on antipodal points.
void criterion_svm() {
  FeatureVector neg, pos;
  neg.f_a = -1.0;
  neg.label = 0;
  pos.f_a = 1.0;
  pos.label = 1;
  TrainConfig cfg;
  cfg.kind = ModelKind::LinearSvm;
  cfg.mask = {true, false, false, false, false, false};
  cfg.l2_lambda = 1e-6;
  const std::vector<FeatureVector> rows{neg, pos};
  const auto m = train(rows, cfg);
  const double w = m.weights[0];
  report(5, std::abs(w - 1.0) < 0.1 && std::abs(m.bias) < 0.05,
         "w " + fmt(w, 4) + " (1 +- 0.1), b " + fmt(m.bias, 4) + " (0 +- 0.05)");
}

// 6-9 share the default synthetic dataset.
void criteria_synthetic() {
  const auto t0 = Clock::now();
  const EpisodeConfig base;
  std::vector<NamedEpisode> episodes;
  {
    auto generated = generate_dataset(6, 5, base);
    for (std::size_t i = 0; i < generated.size(); ++i) {
      char name[64];
      std::snprintf(name, sizeof(name), "episode_o%02zu_e%02zu", i / 5 + 1, i % 5 + 1);
      episodes.push_back({name, std::move(generated[i])});
    }
  }
  const auto geometry = default_fingertip_geometry(base.n_s);
  const ExperimentConfig cfg;
  const auto features = extract_features(episodes, geometry, cfg.dwt);
  const EvalReport full = train_and_evaluate(features, cfg);
  const double elapsed = seconds_since(t0);
  report(6, *full.acc >= 90.0 && full.fdr && *full.fdr <= 10.0 && elapsed < 60.0,
         "6x5 episodes, n_w 14, sample split 80/20: Acc " + fmt(*full.acc, 2) + " (>= 90), FDR " +
             (full.fdr ? fmt(*full.fdr, 2) : std::string("undef")) + " (<= 10), " + fmt(elapsed, 1) +
             " s (< 60 s)");

  const auto masks = standard_ablation_masks();
  const FeatureMask& all = masks[0];
  const FeatureMask no_tip{true, false, false, false, true, true};
  const FeatureMask no_sigma{true, true, true, true, true, false};
  const std::vector<FeatureMask> chosen{all, no_sigma, no_tip};
  const auto ab = ablation_study(features, chosen, cfg);
  const double a_all = *ab[0].report.acc, a_sigma = *ab[1].report.acc, a_tip = *ab[2].report.acc;
  report(7, a_all - a_sigma >= 5.0 && a_all - a_tip < a_all - a_sigma,
         "Acc all " + fmt(a_all, 2) + ", without sigma " + fmt(a_sigma, 2) + " (drop " + fmt(a_all - a_sigma, 2) +
             " >= 5), without F_tip " + fmt(a_tip, 2) + " (drop " + fmt(a_all - a_tip, 2) + " smaller)");

  const std::vector<std::size_t> widths{4, 14};
  const auto sweep = window_sweep(episodes, geometry, widths, cfg);
  const double acc4 = *sweep[0].report.acc, acc14 = *sweep[1].report.acc;
  report(8, acc14 >= acc4, "Acc(n_w=14) " + fmt(acc14, 2) + " >= Acc(n_w=4) " + fmt(acc4, 2));

  const auto baseline = energy_threshold_baseline(features, cfg);
  const double acc_base = *baseline.report.acc;
  report(9, acc_base < *full.acc,
         "F_x detail-energy baseline Acc " + fmt(acc_base, 2) + " < LogReg Acc " + fmt(*full.acc, 2));
}

// 10. detect throughput on a 4-fingertip, 60 s stream.
void criterion_throughput(const fs::path& work) {
  const char* tips[] = {"index", "middle", "ring", "thumb"};
  std::vector<LabeledEpisode> streams;
  for (int i = 0; i < 4; ++i) {
    EpisodeConfig c;
    c.seed = 100 + static_cast<std::uint64_t>(i);
    c.fingertip_id = tips[i];
    c.phase_durations = {2.0, 0.5, 10.0, 47.0, 0.5};
    streams.push_back(generate_episode(c));
  }
  std::size_t frames = 0;
  {
    std::ofstream out(work / "stream.jsonl", std::ios::binary);
    out << R"({"format":"gripwatch-episode","version":1,"n_s":30})" << '\n';
    for (std::size_t k = 0; k < streams[0].frames.size(); ++k) {
      for (const auto& s : streams) {
        out << frame_to_json_line(s.frames[k], std::nullopt) << '\n';
        ++frames;
      }
    }
  }

  // Model trained on a separate small dataset.
  std::vector<NamedEpisode> eps;
  int i = 0;
  for (auto& ep : generate_dataset(2, 2, EpisodeConfig{})) eps.push_back({"e" + std::to_string(i++), std::move(ep)});
  const auto rows = pool(extract_features(eps, default_fingertip_geometry(30), DwtConfig{}));
  save_model(train(rows, TrainConfig{}), work / "model.json");

  double worst = 0.0;
  bool ok = true;
  for (const char* run : {"1", "2"}) {
    const auto t0 = Clock::now();
    const int code = shell("detect --model " + q(work / "model.json") + " --in " + q(work / "stream.jsonl") +
                               " --out " + q(work / (std::string("detect") + run + ".jsonl")),
                           work / "detect.stdout", work / "detect.stderr");
    worst = std::max(worst, seconds_since(t0));
    ok = ok && code == 0;
  }
  const std::string a = slurp(work / "detect1.jsonl");
  const std::string b = slurp(work / "detect2.jsonl");
  const auto lines = static_cast<std::size_t>(std::count(a.begin(), a.end(), '\n'));
  report(10, ok && frames == 36000 && worst < 9.0 && a == b && lines == 36000 - 4 * (kDefaultWindow - 1),
         std::to_string(frames) + " frames, " + std::to_string(lines) + " decisions, slowest run " + fmt(worst, 2) +
             " s (< 9 s), outputs " + (a == b ? "identical" : "differ"));
}

// 11. Every command reruns byte-identically.
void criterion_determinism(const fs::path& work) {
  struct Step {
    std::string name;
    std::function<std::string(const fs::path&)> args;
    std::vector<std::string> outputs;
  };
  const std::vector<Step> steps = {
      {"simulate", [](const fs::path& d) { return "simulate --objects 2 --episodes 2 --seed 11 --out " + q(d / "data"); },
       {"data/episode_o01_e01.jsonl", "data/episode_o01_e02.jsonl", "data/episode_o02_e01.jsonl",
        "data/episode_o02_e02.jsonl"}},
      {"geometry", [](const fs::path& d) { return "geometry --out " + q(d / "geo.json"); }, {"geo.json"}},
      {"extract",
       [](const fs::path& d) {
         return "extract --in " + q(d / "data") + " --geometry " + q(d / "geo.json") + " --out " + q(d / "f.jsonl");
       },
       {"f.jsonl"}},
      {"split",
       [](const fs::path& d) {
         return "split --features " + q(d / "f.jsonl") + " --train-out " + q(d / "train.jsonl") + " --test-out " +
                q(d / "test.jsonl");
       },
       {"train.jsonl", "test.jsonl"}},
      {"train logreg",
       [](const fs::path& d) {
         return "train --features " + q(d / "train.jsonl") + " --grid default --out " + q(d / "logreg.json");
       },
       {"logreg.json"}},
      {"train svm",
       [](const fs::path& d) {
         return "train --kind svm --features " + q(d / "train.jsonl") + " --out " + q(d / "svm.json");
       },
       {"svm.json"}},
      {"eval",
       [](const fs::path& d) {
         return "eval --model " + q(d / "logreg.json") + " --features " + q(d / "test.jsonl") + " --report " +
                q(d / "eval.json");
       },
       {"eval.json"}},
      {"sweep",
       [](const fs::path& d) {
         return "sweep --dataset " + q(d / "data") + " --n-w 4,8,14 --report " + q(d / "sweep.json");
       },
       {"sweep.json"}},
      {"ablate",
       [](const fs::path& d) {
         return "ablate --dataset " + q(d / "data") + " --masks builtin --report " + q(d / "ablate.json");
       },
       {"ablate.json"}},
      {"baseline",
       [](const fs::path& d) { return "baseline --dataset " + q(d / "data") + " --report " + q(d / "baseline.json"); },
       {"baseline.json"}},
      {"detect",
       [](const fs::path& d) {
         return "detect --model " + q(d / "logreg.json") + " --in " + q(d / "data" / "episode_o01_e01.jsonl") +
                " --out " + q(d / "detect.jsonl");
       },
       {"detect.jsonl"}},
  };

  std::vector<std::string> mismatched;
  bool ran = true;
  for (const auto& step : steps) {
    std::string stdout_first;
    for (const char* run : {"a", "b"}) {
      const fs::path d = work / run;
      fs::create_directories(d);
      const int code = shell(step.args(d), d / "stdout.txt", d / "stderr.txt");
      ran = ran && code == 0;
      if (std::string(run) == "a") {
        stdout_first = slurp(d / "stdout.txt");
      } else if (slurp(d / "stdout.txt") != stdout_first) {
        mismatched.push_back(step.name + " stdout");
      }
    }
    for (const auto& f : step.outputs) {
      const std::string a = slurp(work / "a" / f);
      if (a.empty() || a != slurp(work / "b" / f)) mismatched.push_back(f);
    }
  }
  std::string detail = std::to_string(steps.size()) + " commands run twice, ";
  if (!ran) detail += "a command failed, ";
  detail += mismatched.empty() ? "all outputs byte-identical" : "differs: " + mismatched.front();
  report(11, ran && mismatched.empty(), detail);
}

}  // namespace

int main() {
  testing::ScratchDir work("acceptance");
  const auto t0 = Clock::now();

  criterion_dwt();
  criterion_oracle();
  criterion_metrics();
  criterion_gradient();
  criterion_svm();
  criteria_synthetic();
  fs::create_directories(work / "c10");
  criterion_throughput(work / "c10");
  fs::create_directories(work / "c11");
  criterion_determinism(work / "c11");

  std::cout << (failures == 0 ? "all 11 criteria pass" : std::to_string(failures) + " criteria fail") << " ("
            << fmt(seconds_since(t0), 1) << " s)" << std::endl;
  return failures == 0 ? 0 : 1;
}
