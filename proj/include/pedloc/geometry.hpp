#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <utility>

namespace pedloc {

inline constexpr int kNumJoints = 17;

// COCO 17-keypoint ordering. All keypoint containers in this library use it.
enum JointId : int {
  kNose = 0,
  kLeftEye = 1,
  kRightEye = 2,
  kLeftEar = 3,
  kRightEar = 4,
  kLeftShoulder = 5,
  kRightShoulder = 6,
  kLeftElbow = 7,
  kRightElbow = 8,
  kLeftWrist = 9,
  kRightWrist = 10,
  kLeftHip = 11,
  kRightHip = 12,
  kLeftKnee = 13,
  kRightKnee = 14,
  kLeftAnkle = 15,
  kRightAnkle = 16,
};

// Pinhole intrinsics. The implied 3x3 matrix is
//   [fx skew cx]
//   [ 0  fy  cy]
//   [ 0   0   1]
// Focal lengths must be positive so the matrix is invertible.
struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  double skew = 0.0;

  void validate() const;
  Eigen::Matrix3d matrix() const;
  // Closed-form inverse of the upper-triangular intrinsic matrix.
  Eigen::Matrix3d inverse() const;

  std::array<double, 9> to_row_major() const;
  static CameraIntrinsics from_row_major(const std::array<double, 9>& m);
};

struct Joint {
  double u = 0.0;  // px
  double v = 0.0;  // px
  double conf = 0.0;  // in [0,1]; conf == 0 means missing
};

struct BBox {
  double u_min = 0.0, v_min = 0.0, u_max = 0.0, v_max = 0.0;

  double width() const { return u_max - u_min; }
  double height() const { return v_max - v_min; }
  std::pair<double, double> center() const {
    return {0.5 * (u_min + u_max), 0.5 * (v_min + v_max)};
  }
};

// One detected person: 17 COCO joints plus the detection box.
struct Keypoints2D {
  std::array<Joint, kNumJoints> joints{};
  BBox bbox{};

  int count_confident() const;
  void validate() const;
};

// Point in the camera frame, meters, z forward.
struct Point3D {
  double x = 0.0, y = 0.0, z = 0.0;

  double norm() const;
};

// Network input: per-joint normalized image coordinates, zero-centered,
// interleaved as (x*_0, y*_0, x*_1, y*_1, ...); plus the unit ray through
// the reference pixel used to lift a predicted distance back to 3D.
struct NormalizedInput {
  std::array<double, 2 * kNumJoints> coords{};
  Eigen::Vector3d center_ray{0.0, 0.0, 1.0};
};

// Which pixel the 2D inputs are centered on. The ray origin for
// localization is always the bbox center, independent of this choice.
enum class CenterMode { kCentroid, kBBoxCenter };

// First two components of K^-1 * [u, v, 1]^T.
Eigen::Vector2d backproject(const CameraIntrinsics& K, double u, double v);

// Perspective division followed by the intrinsic map. Requires p.z > 0.
Eigen::Vector2d project(const CameraIntrinsics& K, const Point3D& p);

// Back-projects all 17 joints, centers them (centroid of confident joints by
// default), imputes missing joints at the center, and attaches the unit ray
// through the bbox center. Requires at least two confident joints.
NormalizedInput normalize_keypoints(const CameraIntrinsics& K, const Keypoints2D& kp,
                                    CenterMode mode = CenterMode::kCentroid);

// D = d * center_ray. Requires d > 0 and a unit ray.
Point3D localize(double distance_m, const Eigen::Vector3d& center_ray);

}  // namespace pedloc
