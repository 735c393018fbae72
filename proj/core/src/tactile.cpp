#include "gripwatch/tactile.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/LU>

#include "gripwatch/error.hpp"

namespace gripwatch {

Mat3 rotation_about_x(double radians) {
  const double c = std::cos(radians);
  const double s = std::sin(radians);
  Mat3 r;
  r << 1, 0, 0,
       0, c, -s,
       0, s, c;
  return r;
}

Mat3 rotation_about_y(double radians) {
  const double c = std::cos(radians);
  const double s = std::sin(radians);
  Mat3 r;
  r << c, 0, s,
       0, 1, 0,
       -s, 0, c;
  return r;
}

Mat3 rotation_about_z(double radians) {
  const double c = std::cos(radians);
  const double s = std::sin(radians);
  Mat3 r;
  r << c, -s, 0,
       s, c, 0,
       0, 0, 1;
  return r;
}

FingertipGeometry FingertipGeometry::identity(std::size_t n_s) {
  return FingertipGeometry(std::vector<Mat3>(n_s, Mat3::Identity()));
}

FingertipGeometry default_fingertip_geometry(std::size_t n_s) {
  constexpr std::size_t kBand = 6;
  constexpr double kDeg = std::numbers::pi / 180.0;
  const std::size_t bands = (n_s + kBand - 1) / kBand;

  std::vector<Mat3> rotations;
  rotations.reserve(n_s);
  for (std::size_t i = 0; i < n_s; ++i) {
    const double col = static_cast<double>(i % kBand) - (kBand - 1) / 2.0;
    const double row = static_cast<double>(i / kBand) - (static_cast<double>(bands) - 1.0) / 2.0;
    // Sweep around the pad (about z) and along the finger axis (about y).
    rotations.push_back(rotation_about_z(col * 15.0 * kDeg) * rotation_about_y(row * 12.0 * kDeg));
  }
  return FingertipGeometry(std::move(rotations));
}

std::vector<GeometryViolation> validate_geometry(const FingertipGeometry& geometry,
                                                 double tolerance) {
  std::vector<GeometryViolation> violations;
  const auto& rotations = geometry.rotations();
  for (std::size_t i = 0; i < rotations.size(); ++i) {
    const Mat3& r = rotations[i];
    const double residual = (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
    const double det = r.determinant();
    const bool finite = r.allFinite();
    if (!finite || !(residual <= tolerance) || !(std::abs(det - 1.0) <= tolerance)) {
      violations.push_back({i, residual, det});
    }
  }
  return violations;
}

ForceSample aggregate_tip_force(const TaxelFrame& frame, const FingertipGeometry& geometry) {
  if (frame.readings.size() != geometry.taxel_count()) {
    throw Error(ErrorCode::LengthMismatch,
                "frame has " + std::to_string(frame.readings.size()) + " readings, geometry has " +
                    std::to_string(geometry.taxel_count()) + " rotations");
  }
  if (!std::isfinite(frame.timestamp)) {
    throw Error(ErrorCode::NonFiniteInput, "non-finite timestamp");
  }

  Vec3 sum = Vec3::Zero();
  const auto& rotations = geometry.rotations();
  for (std::size_t i = 0; i < frame.readings.size(); ++i) {
    const Vec3& f = frame.readings[i].force;
    if (!f.allFinite()) {
      throw Error(ErrorCode::NonFiniteInput, "taxel " + std::to_string(i) + " has a non-finite component");
    }
    sum.noalias() += rotations[i] * f;
  }
  return ForceSample{frame.timestamp, sum, sum.norm()};
}

}  // namespace gripwatch
