#include "gripwatch/detector.hpp"

#include <cmath>

#include <json.hpp>

#include "gripwatch/error.hpp"

namespace gripwatch {

std::string_view to_string(ContactState state) noexcept {
  switch (state) {
    case ContactState::NoContact: return "no_contact";
    case ContactState::Stable: return "stable";
    case ContactState::Unstable: return "unstable";
  }
  return "no_contact";
}

double estimate_contact_threshold(const std::vector<Vec3>& forces, double multiple) {
  if (forces.empty()) return 0.0;
  const auto n = static_cast<double>(forces.size());
  Vec3 mean = Vec3::Zero();
  for (const auto& f : forces) mean += f;
  mean /= n;
  double ss = 0.0;
  for (const auto& f : forces) ss += (f - mean).squaredNorm();
  return multiple * std::sqrt(ss / (3.0 * n));
}

GraspDetector::GraspDetector(FingertipGeometry geometry, std::shared_ptr<const LinearModel> model,
                             DetectorConfig config)
    : geometry_(std::move(geometry)), default_model_(std::move(model)), config_(config) {
  config_.dwt.validate();
  if (!default_model_) throw Error(ErrorCode::InvalidConfig, "detector needs a model");
  if (config_.tau && !(*config_.tau >= 0)) throw Error(ErrorCode::InvalidConfig, "tau must be >= 0");
}

void GraspDetector::set_model(const std::string& fingertip_id, std::shared_ptr<const LinearModel> model) {
  if (!model) throw Error(ErrorCode::InvalidConfig, "null model for " + fingertip_id);
  models_[fingertip_id] = std::move(model);
}

GraspDetector::Channel& GraspDetector::channel(const std::string& fingertip_id) {
  auto it = channels_.find(fingertip_id);
  if (it == channels_.end()) {
    it = channels_.emplace(fingertip_id, Channel(config_.dwt)).first;
    it->second.tau = config_.tau;
  }
  return it->second;
}

const LinearModel& GraspDetector::model_for(const std::string& fingertip_id) const {
  auto it = models_.find(fingertip_id);
  return it != models_.end() ? *it->second : *default_model_;
}

std::optional<double> GraspDetector::contact_threshold(const std::string& fingertip_id) const {
  auto it = channels_.find(fingertip_id);
  if (it == channels_.end()) return config_.tau;
  return it->second.tau;
}

std::optional<Decision> GraspDetector::process(const TaxelFrame& frame) {
  const ForceSample sample = aggregate_tip_force(frame, geometry_);
  Channel& ch = channel(frame.fingertip_id);
  const std::optional<FeatureVector> fv = ch.extractor.push(sample);

  const bool calibrating = !ch.tau.has_value();
  if (calibrating) {
    ch.calibration.push_back(sample.f_tip);
    if (ch.calibration.size() >= config_.calibration_frames) {
      ch.tau = estimate_contact_threshold(ch.calibration, config_.tau_noise_multiple);
      ch.calibration.clear();
      ch.calibration.shrink_to_fit();
    }
  }
  if (!fv) return std::nullopt;

  Decision d;
  d.timestamp = fv->timestamp;
  d.fingertip_id = frame.fingertip_id;
  d.sigma = fv->sigma;
  if (calibrating || fv->f_a <= *ch.tau) {
    d.state = ContactState::NoContact;
    return d;
  }
  const LinearModel& model = model_for(frame.fingertip_id);
  if (model.kind == ModelKind::LogReg) {
    const double p = predict_proba(model, *fv);
    d.p_stable = p;
    d.state = p > 0.5 ? ContactState::Stable : ContactState::Unstable;
  } else {
    d.state = predict_label(model, *fv) == 1 ? ContactState::Stable : ContactState::Unstable;
  }
  return d;
}

std::string decision_to_json(const Decision& d) {
  nlohmann::ordered_json j;
  j["t"] = d.timestamp;
  j["fingertip"] = d.fingertip_id;
  j["state"] = std::string(to_string(d.state));
  if (d.p_stable) j["p_stable"] = *d.p_stable;
  j["sigma"] = d.sigma;
  return j.dump();
}

}  // namespace gripwatch
