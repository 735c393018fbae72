#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "gripwatch/haar_features.hpp"

namespace gripwatch {

/// Which of [F_a, F_x, F_y, F_z, m, sigma] the classifier sees.
using FeatureMask = std::array<bool, kFeatureCount>;

/// Everything except m.
FeatureMask default_feature_mask() noexcept;
FeatureMask full_feature_mask() noexcept;
std::size_t active_feature_count(const FeatureMask& mask) noexcept;

/// Comma separated feature names: fa, fx, fy, fz, m, sigma, or ftip for all
/// three force components. Throws InvalidConfig.
FeatureMask parse_feature_mask(std::string_view text);
std::string to_string(const FeatureMask& mask);

enum class ModelKind { LogReg, LinearSvm };

std::string_view to_string(ModelKind kind) noexcept;
ModelKind model_kind_from_string(std::string_view name);

/// Per-feature mean and population std over the unmasked features.
struct Standardizer {
  std::vector<double> means;
  std::vector<double> stds;
  std::vector<std::string> warnings;
};

Standardizer fit_standardizer(std::span<const FeatureVector> features, const FeatureMask& mask);

struct TrainConfig {
  ModelKind kind = ModelKind::LogReg;
  double l2_lambda = 1e-4;
  int max_iters = 500;
  double tolerance = 1e-8;  // on the gradient norm
  std::uint64_t seed = 0;
  // When non-empty, l2_lambda is chosen from this grid by k-fold CV.
  std::vector<double> hyper_grid;
  int cv_folds = 5;
  FeatureMask mask = default_feature_mask();

  void validate() const;
};

std::vector<double> default_lambda_grid();

struct LinearModel {
  ModelKind kind = ModelKind::LogReg;
  std::vector<double> weights;
  double bias = 0.0;
  Standardizer standardizer;
  FeatureMask mask = default_feature_mask();
  TrainConfig train_config;
};

/// Standardized design matrix, one row per feature vector.
Eigen::MatrixXd design_matrix(std::span<const FeatureVector> features, const Standardizer& standardizer,
                              const FeatureMask& mask);

struct Objective {
  double value = 0.0;
  Eigen::VectorXd gradient;  // [d/dw..., d/db]
};

/// Mean negative log-likelihood + (lambda/2)|w|^2 at params = [w..., b].
/// Labels are 0/1.
Objective logreg_objective(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                           const Eigen::VectorXd& params, double lambda);

/// Mean hinge loss on labels mapped to -1/+1 + (lambda/2)|w|^2.
double svm_objective(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& params,
                     double lambda);

/// Fits the standardizer, then minimises the regularised loss for the
/// configured kind. Throws SingleClassDataset, NonFiniteFeature,
/// EmptyDataset or InvariantViolation (unlabeled rows).
LinearModel train(std::span<const FeatureVector> features, const TrainConfig& config);

struct LambdaSelection {
  double lambda = 0.0;
  std::vector<double> cv_accuracy;  // one per grid value, percent
};

/// k-fold cross-validated accuracy for every grid value.
LambdaSelection select_lambda(std::span<const FeatureVector> features, const TrainConfig& config);

/// w . standardize(mask(phi)) + b
double predict_score(const LinearModel& model, const FeatureVector& phi);

/// Logistic link of the score. Throws WrongModelKind for SVM models.
double predict_proba(const LinearModel& model, const FeatureVector& phi);

/// 1 (stable) or 0. An exact tie predicts 0.
int predict_label(const LinearModel& model, const FeatureVector& phi);

double sigmoid(double score) noexcept;

std::string model_to_json(const LinearModel& model);
LinearModel model_from_json(std::string_view text);
void save_model(const LinearModel& model, const std::filesystem::path& path);
LinearModel load_model(const std::filesystem::path& path);

}  // namespace gripwatch
