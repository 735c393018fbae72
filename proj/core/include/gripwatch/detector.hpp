#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gripwatch/classify.hpp"
#include "gripwatch/haar_features.hpp"
#include "gripwatch/tactile.hpp"

namespace gripwatch {

enum class ContactState { NoContact, Stable, Unstable };

std::string_view to_string(ContactState state) noexcept;

struct DetectorConfig {
  DwtConfig dwt;
  // Contact threshold: f_a <= tau reports no contact. When unset, each fingertip estimates its own
  // from the first `calibration_frames` frames, which are assumed contact-free.
  std::optional<double> tau;
  std::size_t calibration_frames = 50;
  double tau_noise_multiple = 3.0;
};

struct Decision {
  double timestamp = 0.0;
  std::string fingertip_id;
  ContactState state = ContactState::NoContact;
  std::optional<double> p_stable;  // logreg models, classified frames only
  double sigma = 0.0;
};

/// Noise-floor threshold: multiple * pooled per-axis std of f_tip.
double estimate_contact_threshold(const std::vector<Vec3>& no_contact_forces, double multiple);

/// Online per-fingertip stability detector. Each fingertip id gets its own
/// extractor and threshold; frames of one fingertip must arrive in time order.
class GraspDetector {
 public:
  GraspDetector(FingertipGeometry geometry, std::shared_ptr<const LinearModel> model, DetectorConfig config = {});

  /// Model used for one fingertip instead of the default.
  void set_model(const std::string& fingertip_id, std::shared_ptr<const LinearModel> model);

  /// Nothing during warm-up. Throws LengthMismatch, NonFiniteInput or
  /// OutOfOrderTimestamp without touching the fingertip's state.
  std::optional<Decision> process(const TaxelFrame& frame);

  std::optional<double> contact_threshold(const std::string& fingertip_id) const;

 private:
  struct Channel {
    explicit Channel(const DwtConfig& dwt) : extractor(dwt) {}
    FeatureExtractor extractor;
    std::optional<double> tau;
    std::vector<Vec3> calibration;
  };

  Channel& channel(const std::string& fingertip_id);
  const LinearModel& model_for(const std::string& fingertip_id) const;

  FingertipGeometry geometry_;
  std::shared_ptr<const LinearModel> default_model_;
  std::map<std::string, std::shared_ptr<const LinearModel>> models_;
  DetectorConfig config_;
  std::map<std::string, Channel> channels_;
};

std::string decision_to_json(const Decision& decision);

}  // namespace gripwatch
