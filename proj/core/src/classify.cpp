#include "gripwatch/classify.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "gripwatch/error.hpp"

namespace gripwatch {

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

constexpr std::string_view kModelFormat = "gripwatch-model";
constexpr int kModelVersion = 1;

// Armijo sufficient-decrease constant and step bounds for the line search.
constexpr double kArmijo = 1e-4;
constexpr double kMaxStep = 1e4;
constexpr double kMinStep = 1e-14;
// Initial subgradient step for the hinge loss; decays as 1/sqrt(t).
constexpr double kSvmStep = 0.1;

double softplus(double s) noexcept { return std::max(s, 0.0) + std::log1p(std::exp(-std::abs(s))); }

Eigen::VectorXd label_vector(std::span<const FeatureVector> features) {
  Eigen::VectorXd y(static_cast<Eigen::Index>(features.size()));
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (!features[i].label) throw Error(ErrorCode::InvariantViolation, "unlabeled features");
    const int label = *features[i].label;
    if (label != 0 && label != 1) throw Error(ErrorCode::InvariantViolation, "labels must be 0 or 1");
    y[static_cast<Eigen::Index>(i)] = label;
  }
  return y;
}

void check_finite(std::span<const FeatureVector> features, const FeatureMask& mask) {
  for (const auto& fv : features) {
    const auto values = fv.values();
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      if (mask[f] && !std::isfinite(values[f])) {
        throw Error(ErrorCode::NonFiniteFeature, "non-finite value for feature " + std::string(kFeatureNames[f]));
      }
    }
  }
}

Eigen::VectorXd fit_logreg(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const TrainConfig& config) {
  const Eigen::Index d = x.cols();
  Eigen::VectorXd params = Eigen::VectorXd::Zero(d + 1);
  Objective current = logreg_objective(x, y, params, config.l2_lambda);
  double step = 1.0;
  for (int iter = 0; iter < config.max_iters; ++iter) {
    const double gnorm2 = current.gradient.squaredNorm();
    if (std::sqrt(gnorm2) <= config.tolerance) break;
    step = std::min(step * 2.0, kMaxStep);
    bool accepted = false;
    while (step >= kMinStep) {
      Eigen::VectorXd trial = params - step * current.gradient;
      Objective next = logreg_objective(x, y, trial, config.l2_lambda);
      if (next.value <= current.value - kArmijo * step * gnorm2) {
        params = std::move(trial);
        current = std::move(next);
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
  }
  return params;
}

Eigen::VectorXd fit_svm(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const TrainConfig& config) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  const Eigen::VectorXd ypm = 2.0 * y.array() - 1.0;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
  double b = 0.0;

  // Average of the iterates over the second half of the run.
  Eigen::VectorXd w_avg = Eigen::VectorXd::Zero(d);
  double b_avg = 0.0;
  int averaged = 0;
  const int average_from = config.max_iters / 2;

  Eigen::VectorXd coeff(n);
  for (int t = 1; t <= config.max_iters; ++t) {
    const Eigen::VectorXd scores = (x * w).array() + b;
    const Eigen::VectorXd margins = ypm.cwiseProduct(scores);
    for (Eigen::Index i = 0; i < n; ++i) coeff[i] = margins[i] < 1.0 ? ypm[i] : 0.0;
    const Eigen::VectorXd gw = -(x.transpose() * coeff) / static_cast<double>(n) + config.l2_lambda * w;
    const double gb = -coeff.sum() / static_cast<double>(n);
    const double eta = kSvmStep / std::sqrt(static_cast<double>(t));
    w -= eta * gw;
    b -= eta * gb;
    if (t > average_from) {
      w_avg += w;
      b_avg += b;
      ++averaged;
    }
  }
  Eigen::VectorXd params(d + 1);
  params.head(d) = w_avg / static_cast<double>(averaged);
  params[d] = b_avg / static_cast<double>(averaged);
  return params;
}

LinearModel train_fixed(std::span<const FeatureVector> features, const TrainConfig& config) {
  if (features.empty()) throw Error(ErrorCode::EmptyDataset, "no training features");
  const Eigen::VectorXd y = label_vector(features);
  const double positives = y.sum();
  if (positives == 0.0 || positives == static_cast<double>(y.size())) {
    throw Error(ErrorCode::SingleClassDataset, "training data contains a single class");
  }
  check_finite(features, config.mask);

  LinearModel model;
  model.kind = config.kind;
  model.mask = config.mask;
  model.train_config = config;
  model.standardizer = fit_standardizer(features, config.mask);
  const Eigen::MatrixXd x = design_matrix(features, model.standardizer, config.mask);

  const Eigen::VectorXd params =
      config.kind == ModelKind::LogReg ? fit_logreg(x, y, config) : fit_svm(x, y, config);
  model.weights.assign(params.data(), params.data() + x.cols());
  model.bias = params[x.cols()];
  return model;
}

std::vector<double> standardized(const LinearModel& model, const FeatureVector& phi) {
  const auto values = phi.values();
  std::vector<double> z;
  z.reserve(model.weights.size());
  std::size_t j = 0;
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    if (!model.mask[f]) continue;
    if (!std::isfinite(values[f])) {
      throw Error(ErrorCode::NonFiniteFeature, "non-finite value for feature " + std::string(kFeatureNames[f]));
    }
    z.push_back((values[f] - model.standardizer.means[j]) / model.standardizer.stds[j]);
    ++j;
  }
  return z;
}

void validate_model(const LinearModel& model) {
  const std::size_t active = active_feature_count(model.mask);
  if (active == 0) throw Error(ErrorCode::InvariantViolation, "model mask selects no features");
  if (model.weights.size() != active) {
    throw Error(ErrorCode::InvariantViolation, "weights length " + std::to_string(model.weights.size()) +
                                                   " does not match " + std::to_string(active) +
                                                   " unmasked features");
  }
  if (model.standardizer.means.size() != active || model.standardizer.stds.size() != active) {
    throw Error(ErrorCode::InvariantViolation, "standardizer length does not match mask");
  }
  for (double s : model.standardizer.stds) {
    if (!(s > 0)) throw Error(ErrorCode::InvariantViolation, "standardizer std must be positive");
  }
  for (double w : model.weights) {
    if (!std::isfinite(w)) throw Error(ErrorCode::InvariantViolation, "non-finite weight");
  }
  if (!std::isfinite(model.bias)) throw Error(ErrorCode::InvariantViolation, "non-finite bias");
}

}  // namespace

FeatureMask default_feature_mask() noexcept { return {true, true, true, true, false, true}; }

FeatureMask full_feature_mask() noexcept { return {true, true, true, true, true, true}; }

std::size_t active_feature_count(const FeatureMask& mask) noexcept {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
}

FeatureMask parse_feature_mask(std::string_view text) {
  FeatureMask mask{};
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    std::string_view name = text.substr(pos, comma - pos);
    while (!name.empty() && name.front() == ' ') name.remove_prefix(1);
    while (!name.empty() && name.back() == ' ') name.remove_suffix(1);
    if (!name.empty()) {
      if (name == "ftip") {
        mask[1] = mask[2] = mask[3] = true;
      } else {
        auto it = std::find(kFeatureNames.begin(), kFeatureNames.end(), name);
        if (it == kFeatureNames.end()) {
          throw Error(ErrorCode::InvalidConfig, "unknown feature '" + std::string(name) + "'");
        }
        mask[static_cast<std::size_t>(it - kFeatureNames.begin())] = true;
      }
    }
    pos = comma + 1;
  }
  if (active_feature_count(mask) == 0) throw Error(ErrorCode::InvalidConfig, "feature mask selects nothing");
  return mask;
}

std::string to_string(const FeatureMask& mask) {
  std::string out;
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    if (!mask[f]) continue;
    if (!out.empty()) out += ',';
    out += kFeatureNames[f];
  }
  return out;
}

std::string_view to_string(ModelKind kind) noexcept { return kind == ModelKind::LogReg ? "logreg" : "svm"; }

ModelKind model_kind_from_string(std::string_view name) {
  if (name == "logreg") return ModelKind::LogReg;
  if (name == "svm") return ModelKind::LinearSvm;
  throw Error(ErrorCode::InvalidConfig, "unknown model kind '" + std::string(name) + "'");
}

Standardizer fit_standardizer(std::span<const FeatureVector> features, const FeatureMask& mask) {
  if (features.empty()) throw Error(ErrorCode::EmptyDataset, "cannot standardize an empty dataset");
  Standardizer s;
  const auto n = static_cast<double>(features.size());
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    if (!mask[f]) continue;
    double mean = 0.0;
    for (const auto& fv : features) mean += fv.values()[f];
    mean /= n;
    double ss = 0.0;
    for (const auto& fv : features) {
      const double dev = fv.values()[f] - mean;
      ss += dev * dev;
    }
    double std = std::sqrt(ss / n);
    if (!(std > 1e-12 * std::max(1.0, std::abs(mean)))) {
      s.warnings.push_back("feature " + std::string(kFeatureNames[f]) + " has zero variance; std clamped to 1");
      std = 1.0;
    }
    s.means.push_back(mean);
    s.stds.push_back(std);
  }
  return s;
}

void TrainConfig::validate() const {
  if (!(l2_lambda >= 0) || !std::isfinite(l2_lambda)) throw Error(ErrorCode::InvalidConfig, "l2_lambda must be >= 0");
  if (max_iters < 1) throw Error(ErrorCode::InvalidConfig, "max_iters must be >= 1");
  if (!(tolerance >= 0)) throw Error(ErrorCode::InvalidConfig, "tolerance must be >= 0");
  if (active_feature_count(mask) == 0) throw Error(ErrorCode::InvalidConfig, "feature mask selects nothing");
  for (double l : hyper_grid) {
    if (!(l >= 0) || !std::isfinite(l)) throw Error(ErrorCode::InvalidConfig, "grid lambda must be >= 0");
  }
  if (!hyper_grid.empty() && cv_folds < 2) throw Error(ErrorCode::InvalidConfig, "cv_folds must be >= 2");
}

std::vector<double> default_lambda_grid() { return {1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1}; }

Eigen::MatrixXd design_matrix(std::span<const FeatureVector> features, const Standardizer& standardizer,
                              const FeatureMask& mask) {
  const auto cols = static_cast<Eigen::Index>(active_feature_count(mask));
  Eigen::MatrixXd x(static_cast<Eigen::Index>(features.size()), cols);
  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto values = features[i].values();
    Eigen::Index j = 0;
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      if (!mask[f]) continue;
      const auto jj = static_cast<std::size_t>(j);
      x(static_cast<Eigen::Index>(i), j) = (values[f] - standardizer.means[jj]) / standardizer.stds[jj];
      ++j;
    }
  }
  return x;
}

Objective logreg_objective(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& params,
                           double lambda) {
  const Eigen::Index d = x.cols();
  const auto n = static_cast<double>(x.rows());
  const Eigen::VectorXd w = params.head(d);
  const double b = params[d];
  const Eigen::VectorXd scores = (x * w).array() + b;

  double loss = 0.0;
  Eigen::VectorXd residual(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    loss += softplus(scores[i]) - y[i] * scores[i];
    residual[i] = sigmoid(scores[i]) - y[i];
  }
  Objective out;
  out.value = loss / n + 0.5 * lambda * w.squaredNorm();
  out.gradient.resize(d + 1);
  out.gradient.head(d) = x.transpose() * residual / n + lambda * w;
  out.gradient[d] = residual.sum() / n;
  return out;
}

double svm_objective(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& params,
                     double lambda) {
  const Eigen::Index d = x.cols();
  const Eigen::VectorXd w = params.head(d);
  const Eigen::VectorXd scores = (x * w).array() + params[d];
  double loss = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    loss += std::max(0.0, 1.0 - (2.0 * y[i] - 1.0) * scores[i]);
  }
  return loss / static_cast<double>(x.rows()) + 0.5 * lambda * w.squaredNorm();
}

LambdaSelection select_lambda(std::span<const FeatureVector> features, const TrainConfig& config) {
  config.validate();
  if (config.hyper_grid.empty()) return {config.l2_lambda, {}};
  if (features.size() < static_cast<std::size_t>(config.cv_folds)) {
    throw Error(ErrorCode::EmptyDataset, "fewer samples than cross-validation folds");
  }

  std::vector<std::size_t> order(features.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(config.seed);
  std::shuffle(order.begin(), order.end(), rng);

  const auto k = static_cast<std::size_t>(config.cv_folds);
  LambdaSelection sel;
  double best = -1.0;
  for (double lambda : config.hyper_grid) {
    TrainConfig fold_config = config;
    fold_config.l2_lambda = lambda;
    fold_config.hyper_grid.clear();
    std::size_t correct = 0;
    for (std::size_t fold = 0; fold < k; ++fold) {
      std::vector<FeatureVector> train_rows;
      std::vector<const FeatureVector*> held_out;
      for (std::size_t i = 0; i < order.size(); ++i) {
        if (i % k == fold) {
          held_out.push_back(&features[order[i]]);
        } else {
          train_rows.push_back(features[order[i]]);
        }
      }
      const LinearModel model = train_fixed(train_rows, fold_config);
      for (const FeatureVector* fv : held_out) {
        if (predict_label(model, *fv) == *fv->label) ++correct;
      }
    }
    const double acc = 100.0 * static_cast<double>(correct) / static_cast<double>(features.size());
    sel.cv_accuracy.push_back(acc);
    if (acc > best) {
      best = acc;
      sel.lambda = lambda;
    }
  }
  return sel;
}

LinearModel train(std::span<const FeatureVector> features, const TrainConfig& config) {
  config.validate();
  if (config.hyper_grid.empty()) return train_fixed(features, config);
  const LambdaSelection sel = select_lambda(features, config);
  TrainConfig chosen = config;
  chosen.l2_lambda = sel.lambda;
  return train_fixed(features, chosen);
}

double sigmoid(double score) noexcept {
  if (score >= 0) return 1.0 / (1.0 + std::exp(-score));
  const double e = std::exp(score);
  return e / (1.0 + e);
}

double predict_score(const LinearModel& model, const FeatureVector& phi) {
  const std::vector<double> z = standardized(model, phi);
  double s = model.bias;
  for (std::size_t j = 0; j < z.size(); ++j) s += model.weights[j] * z[j];
  return s;
}

double predict_proba(const LinearModel& model, const FeatureVector& phi) {
  if (model.kind != ModelKind::LogReg) {
    throw Error(ErrorCode::WrongModelKind, "probabilities are only defined for logreg models");
  }
  return sigmoid(predict_score(model, phi));
}

int predict_label(const LinearModel& model, const FeatureVector& phi) {
  if (model.kind == ModelKind::LogReg) return predict_proba(model, phi) > 0.5 ? 1 : 0;
  return predict_score(model, phi) > 0.0 ? 1 : 0;
}

std::string model_to_json(const LinearModel& model) {
  ordered_json j;
  j["format"] = kModelFormat;
  j["version"] = kModelVersion;
  j["kind"] = std::string(to_string(model.kind));
  j["mask"] = model.mask;
  j["means"] = model.standardizer.means;
  j["stds"] = model.standardizer.stds;
  j["weights"] = model.weights;
  j["bias"] = model.bias;
  const TrainConfig& c = model.train_config;
  ordered_json tc;
  tc["kind"] = std::string(to_string(c.kind));
  tc["l2_lambda"] = c.l2_lambda;
  tc["max_iters"] = c.max_iters;
  tc["tolerance"] = c.tolerance;
  tc["seed"] = c.seed;
  tc["hyper_grid"] = c.hyper_grid;
  tc["cv_folds"] = c.cv_folds;
  j["train_config"] = std::move(tc);
  return j.dump(2);
}

LinearModel model_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("model: ") + e.what());
  }
  LinearModel model;
  try {
    if (j.at("format").get<std::string>() != kModelFormat) {
      throw Error(ErrorCode::ParseError, "model: not a gripwatch-model file");
    }
    if (j.at("version").get<int>() != kModelVersion) {
      throw Error(ErrorCode::VersionMismatch,
                  "model: unsupported version " + std::to_string(j.at("version").get<int>()));
    }
    model.kind = model_kind_from_string(j.at("kind").get<std::string>());
    const auto mask = j.at("mask").get<std::vector<bool>>();
    if (mask.size() != kFeatureCount) throw Error(ErrorCode::InvariantViolation, "model: mask needs 6 entries");
    std::copy(mask.begin(), mask.end(), model.mask.begin());
    model.standardizer.means = j.at("means").get<std::vector<double>>();
    model.standardizer.stds = j.at("stds").get<std::vector<double>>();
    model.weights = j.at("weights").get<std::vector<double>>();
    model.bias = j.at("bias").get<double>();
    const auto& tc = j.at("train_config");
    TrainConfig& c = model.train_config;
    c.kind = model_kind_from_string(tc.at("kind").get<std::string>());
    c.l2_lambda = tc.at("l2_lambda").get<double>();
    c.max_iters = tc.at("max_iters").get<int>();
    c.tolerance = tc.at("tolerance").get<double>();
    c.seed = tc.at("seed").get<std::uint64_t>();
    c.hyper_grid = tc.at("hyper_grid").get<std::vector<double>>();
    c.cv_folds = tc.at("cv_folds").get<int>();
    c.mask = model.mask;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("model: ") + e.what());
  }
  validate_model(model);
  return model;
}

void save_model(const LinearModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << model_to_json(model) << '\n';
}

LinearModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return model_from_json(buf.str());
}

}  // namespace gripwatch
