#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace gripwatch {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr std::size_t kDefaultTaxelCount = 30;

// Membership tolerance for rotations built in code versus rotations read back
// from a geometry file.
inline constexpr double kExactRotationTolerance = 1e-9;
inline constexpr double kFileRotationTolerance = 1e-6;

/// One 3-axis force reading in the taxel's own frame, raw sensor units.
struct TaxelReading {
  Vec3 force = Vec3::Zero();
};

/// All taxel readings of one fingertip at one instant.
struct TaxelFrame {
  double timestamp = 0.0;
  std::string fingertip_id;
  std::vector<TaxelReading> readings;
};

/// Fixed taxel-to-fingertip rotations. Construction does not check SO(3)
/// membership; use validate_geometry() or load_geometry() for that.
class FingertipGeometry {
 public:
  FingertipGeometry() = default;
  explicit FingertipGeometry(std::vector<Mat3> rotations)
      : rotations_(std::move(rotations)) {}

  static FingertipGeometry identity(std::size_t n_s);

  std::size_t taxel_count() const noexcept { return rotations_.size(); }
  const std::vector<Mat3>& rotations() const noexcept { return rotations_; }
  const Mat3& rotation(std::size_t i) const { return rotations_.at(i); }

 private:
  std::vector<Mat3> rotations_;
};

/// Taxels laid out on a curved fingertip pad in bands of six, each taxel
/// frame tilted to follow the local surface normal.
FingertipGeometry default_fingertip_geometry(std::size_t n_s = kDefaultTaxelCount);

struct GeometryViolation {
  std::size_t index = 0;
  double orthogonality_residual = 0.0;  // max |(R^T R - I)_jk|
  double determinant = 0.0;
};

std::vector<GeometryViolation> validate_geometry(
    const FingertipGeometry& geometry, double tolerance = kExactRotationTolerance);

/// Aggregated fingertip force at one instant.
struct ForceSample {
  double timestamp = 0.0;
  Vec3 f_tip = Vec3::Zero();
  double f_a = 0.0;
};

/// Sum of R_i f_i over all taxels, plus its Euclidean norm.
/// Throws LengthMismatch or NonFiniteInput.
ForceSample aggregate_tip_force(const TaxelFrame& frame, const FingertipGeometry& geometry);

Mat3 rotation_about_x(double radians);
Mat3 rotation_about_y(double radians);
Mat3 rotation_about_z(double radians);

}  // namespace gripwatch
