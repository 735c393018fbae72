#include "gripwatch/haar_features.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "gripwatch/error.hpp"

namespace gripwatch {

namespace {

constexpr double kInvSqrt2 = 1.0 / std::numbers::sqrt2;

void decompose_into(std::span<const double> window, HaarDecomposition& out) {
  const std::size_t half = window.size() / 2;
  out.approximations.resize(half);
  out.details.resize(half);
  for (std::size_t j = 0; j < half; ++j) {
    const double a = window[2 * j];
    const double b = window[2 * j + 1];
    out.approximations[j] = (a + b) * kInvSqrt2;
    out.details[j] = (a - b) * kInvSqrt2;
  }
}

double denominator(const DwtConfig& config) {
  const auto n_w = static_cast<double>(config.n_w);
  return config.denominator_mode == DenominatorMode::WindowLength ? n_w : n_w / 2.0;
}

}  // namespace

std::string_view to_string(DenominatorMode mode) noexcept {
  return mode == DenominatorMode::WindowLength ? "window_length" : "coefficient_count";
}

DenominatorMode denominator_mode_from_string(std::string_view name) {
  if (name == "window_length" || name == "window") return DenominatorMode::WindowLength;
  if (name == "coefficient_count" || name == "count") return DenominatorMode::CoefficientCount;
  throw Error(ErrorCode::InvalidConfig, "unknown denominator mode '" + std::string(name) + "'");
}

void DwtConfig::validate() const {
  if (n_w < 2 || n_w % 2 != 0) {
    throw Error(ErrorCode::InvalidConfig,
                "window length must be even and >= 2, got " + std::to_string(n_w));
  }
}

HaarDecomposition haar_decompose(std::span<const double> window, const DwtConfig& config) {
  config.validate();
  if (window.size() != config.n_w) {
    throw Error(ErrorCode::BadWindowLength, "window has " + std::to_string(window.size()) +
                                                " samples, expected " + std::to_string(config.n_w));
  }
  for (double x : window) {
    if (!std::isfinite(x)) throw Error(ErrorCode::NonFiniteInput, "non-finite window sample");
  }
  HaarDecomposition out;
  decompose_into(window, out);
  return out;
}

double compute_m(const HaarDecomposition& decomp, const DwtConfig& config) {
  double sum = 0.0;
  for (double a : decomp.approximations) sum += a;
  return sum / denominator(config);
}

double compute_sigma(const HaarDecomposition& decomp, const DwtConfig& config) {
  if (decomp.details.empty()) return 0.0;
  double mean = 0.0;
  for (double d : decomp.details) mean += d;
  mean /= static_cast<double>(decomp.details.size());
  double ss = 0.0;
  for (double d : decomp.details) ss += (d - mean) * (d - mean);
  return std::sqrt(ss / denominator(config));
}

double detail_energy(const HaarDecomposition& decomp) {
  double e = 0.0;
  for (double d : decomp.details) e += d * d;
  return e;
}

FeatureExtractor::FeatureExtractor(DwtConfig config) : config_(config) {
  config_.validate();
  amplitude_ring_.assign(config_.n_w, 0.0);
  fx_ring_.assign(config_.n_w, 0.0);
  window_.assign(config_.n_w, 0.0);
}

void FeatureExtractor::reset() {
  head_ = 0;
  count_ = 0;
  last_timestamp_.reset();
  decomp_ = {};
  fx_decomp_ = {};
}

std::optional<FeatureVector> FeatureExtractor::push(const ForceSample& sample) {
  if (last_timestamp_ && sample.timestamp < *last_timestamp_) {
    throw Error(ErrorCode::OutOfOrderTimestamp,
                "timestamp " + std::to_string(sample.timestamp) + " precedes " +
                    std::to_string(*last_timestamp_));
  }
  if (!std::isfinite(sample.f_a) || !sample.f_tip.allFinite()) {
    throw Error(ErrorCode::NonFiniteInput, "non-finite force sample");
  }
  last_timestamp_ = sample.timestamp;

  amplitude_ring_[head_] = sample.f_a;
  fx_ring_[head_] = sample.f_tip.x();
  head_ = (head_ + 1) % config_.n_w;
  ++count_;
  if (count_ < config_.n_w) return std::nullopt;

  // head_ now points at the oldest sample.
  const std::size_t n = config_.n_w;
  for (std::size_t i = 0; i < n; ++i) window_[i] = amplitude_ring_[(head_ + i) % n];
  decompose_into(window_, decomp_);
  for (std::size_t i = 0; i < n; ++i) window_[i] = fx_ring_[(head_ + i) % n];
  decompose_into(window_, fx_decomp_);

  FeatureVector fv;
  fv.timestamp = sample.timestamp;
  fv.f_a = sample.f_a;
  fv.f_tip = sample.f_tip;
  fv.m = compute_m(decomp_, config_);
  fv.sigma = compute_sigma(decomp_, config_);
  fv.fx_detail_energy = detail_energy(fx_decomp_);
  return fv;
}

std::vector<FeatureVector> extract_stream(std::span<const ForceSample> samples,
                                          const DwtConfig& config) {
  FeatureExtractor extractor(config);
  std::vector<FeatureVector> out;
  if (samples.size() >= config.n_w) out.reserve(samples.size() - config.n_w + 1);
  for (const auto& s : samples) {
    if (auto fv = extractor.push(s)) out.push_back(*fv);
  }
  return out;
}

}  // namespace gripwatch
