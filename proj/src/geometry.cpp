#include "pedloc/geometry.hpp"

#include <cmath>

#include "pedloc/errors.hpp"

namespace pedloc {

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy) ||
      !std::isfinite(cx) || !std::isfinite(cy) || !std::isfinite(skew)) {
    throw ValidationError("invalid intrinsics: focal lengths must be positive and finite");
  }
}

Eigen::Matrix3d CameraIntrinsics::matrix() const {
  Eigen::Matrix3d K;
  K << fx, skew, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return K;
}

Eigen::Matrix3d CameraIntrinsics::inverse() const {
  validate();
  // Exact inverse of the upper-triangular intrinsic matrix.
  Eigen::Matrix3d Kinv;
  Kinv << 1.0 / fx, -skew / (fx * fy), (skew * cy - cx * fy) / (fx * fy),
      0.0, 1.0 / fy, -cy / fy,
      0.0, 0.0, 1.0;
  return Kinv;
}

std::array<double, 9> CameraIntrinsics::to_row_major() const {
  return {fx, skew, cx, 0.0, fy, cy, 0.0, 0.0, 1.0};
}

CameraIntrinsics CameraIntrinsics::from_row_major(const std::array<double, 9>& m) {
  if (m[3] != 0.0 || m[6] != 0.0 || m[7] != 0.0 || m[8] != 1.0) {
    throw ValidationError("invalid intrinsics: matrix is not an upper-triangular K with K(2,2)=1");
  }
  CameraIntrinsics K;
  K.fx = m[0];
  K.skew = m[1];
  K.cx = m[2];
  K.fy = m[4];
  K.cy = m[5];
  K.validate();
  return K;
}

int Keypoints2D::count_confident() const {
  int n = 0;
  for (const auto& j : joints) {
    if (j.conf > 0.0) ++n;
  }
  return n;
}

void Keypoints2D::validate() const {
  if (!(bbox.width() > 0.0) || !(bbox.height() > 0.0)) {
    throw ValidationError("keypoints bbox must have positive width and height");
  }
  for (const auto& j : joints) {
    if (!std::isfinite(j.u) || !std::isfinite(j.v) || !std::isfinite(j.conf) ||
        j.conf < 0.0 || j.conf > 1.0) {
      throw ValidationError("joint coordinates must be finite with confidence in [0,1]");
    }
  }
}

double Point3D::norm() const { return std::sqrt(x * x + y * y + z * z); }

Eigen::Vector2d backproject(const CameraIntrinsics& K, double u, double v) {
  K.validate();
  const Eigen::Vector3d n = K.inverse() * Eigen::Vector3d(u, v, 1.0);
  return {n.x(), n.y()};
}

Eigen::Vector2d project(const CameraIntrinsics& K, const Point3D& p) {
  K.validate();
  if (!(p.z > 0.0)) {
    throw ValidationError("cannot project a point behind the camera (z <= 0)");
  }
  const double x = p.x / p.z;
  const double y = p.y / p.z;
  return {K.fx * x + K.skew * y + K.cx, K.fy * y + K.cy};
}

NormalizedInput normalize_keypoints(const CameraIntrinsics& K, const Keypoints2D& kp,
                                    CenterMode mode) {
  kp.validate();
  const int confident = kp.count_confident();
  if (confident < 2) {
    throw ValidationError("degenerate pose: need at least 2 confident joints, got " +
                          std::to_string(confident));
  }

  const Eigen::Matrix3d Kinv = K.inverse();
  std::array<Eigen::Vector2d, kNumJoints> normed;
  for (int i = 0; i < kNumJoints; ++i) {
    const Eigen::Vector3d n = Kinv * Eigen::Vector3d(kp.joints[i].u, kp.joints[i].v, 1.0);
    normed[i] = {n.x(), n.y()};
  }

  Eigen::Vector2d center{0.0, 0.0};
  if (mode == CenterMode::kCentroid) {
    for (int i = 0; i < kNumJoints; ++i) {
      if (kp.joints[i].conf > 0.0) center += normed[i];
    }
    center /= static_cast<double>(confident);
  } else {
    const auto [uc, vc] = kp.bbox.center();
    const Eigen::Vector3d n = Kinv * Eigen::Vector3d(uc, vc, 1.0);
    center = {n.x(), n.y()};
  }

  NormalizedInput out;
  for (int i = 0; i < kNumJoints; ++i) {
    // Missing joints sit at the centering reference, i.e. zero after centering.
    const Eigen::Vector2d c =
        (kp.joints[i].conf > 0.0) ? Eigen::Vector2d(normed[i] - center) : Eigen::Vector2d(0.0, 0.0);
    out.coords[2 * i] = c.x();
    out.coords[2 * i + 1] = c.y();
  }

  const auto [uc, vc] = kp.bbox.center();
  const Eigen::Vector3d ray = Kinv * Eigen::Vector3d(uc, vc, 1.0);
  out.center_ray = ray.normalized();
  return out;
}

Point3D localize(double distance_m, const Eigen::Vector3d& center_ray) {
  if (!(distance_m > 0.0) || !std::isfinite(distance_m)) {
    throw ValidationError("invalid distance: must be positive and finite");
  }
  if (std::abs(center_ray.norm() - 1.0) > 1e-6) {
    throw ValidationError("center ray must be a unit vector");
  }
  return {distance_m * center_ray.x(), distance_m * center_ray.y(), distance_m * center_ray.z()};
}

}  // namespace pedloc
