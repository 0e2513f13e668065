#include "pedloc/geo_baseline.hpp"

#include <cmath>
#include <optional>
#include <vector>

#include "pedloc/errors.hpp"

namespace pedloc {

namespace {

// Segment endpoints as keypoint rows; the head row is the single nose joint.
struct RowSpec {
  std::array<int, 2> joints;
  int count;
};

RowSpec row_for(SegmentId seg, bool top) {
  switch (seg) {
    case SegmentId::kHeadShoulder:
      return top ? RowSpec{{kNose, -1}, 1} : RowSpec{{kLeftShoulder, kRightShoulder}, 2};
    case SegmentId::kShoulderHip:
      return top ? RowSpec{{kLeftShoulder, kRightShoulder}, 2}
                 : RowSpec{{kLeftHip, kRightHip}, 2};
    case SegmentId::kHipAnkle:
      return top ? RowSpec{{kLeftHip, kRightHip}, 2} : RowSpec{{kLeftAnkle, kRightAnkle}, 2};
  }
  throw ValidationError("unknown segment");
}

// Confidence-gated pixel average of a keypoint row; empty when no joint of
// the row was detected.
std::optional<Eigen::Vector2d> row_pixel(const Keypoints2D& kp, const RowSpec& row) {
  Eigen::Vector2d acc{0.0, 0.0};
  int n = 0;
  for (int k = 0; k < row.count; ++k) {
    const Joint& j = kp.joints[row.joints[k]];
    if (j.conf > 0.0) {
      acc += Eigen::Vector2d{j.u, j.v};
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return acc / n;
}

}  // namespace

std::string segment_name(SegmentId id) {
  switch (id) {
    case SegmentId::kHeadShoulder: return "head_shoulder";
    case SegmentId::kShoulderHip: return "shoulder_hip";
    case SegmentId::kHipAnkle: return "hip_ankle";
  }
  return "unknown";
}

SegmentStats fit_segments(std::span<const LabeledPose> instances) {
  std::array<double, 3> sum{};
  std::array<double, 3> sumsq{};
  std::array<int64_t, 3> count{};

  for (const auto& inst : instances) {
    if (!(inst.gt_center.z > 0.0)) continue;
    const Eigen::Matrix3d Kinv = inst.K.inverse();
    const double z = inst.gt_center.z;
    for (int s = 0; s < 3; ++s) {
      const auto seg = static_cast<SegmentId>(s);
      const auto top = row_pixel(inst.kp, row_for(seg, true));
      const auto bottom = row_pixel(inst.kp, row_for(seg, false));
      if (!top || !bottom) continue;
      // All joints assumed at the instance depth; vertical extent in meters.
      const double y_top = (Kinv * Eigen::Vector3d(top->x(), top->y(), 1.0)).y();
      const double y_bottom = (Kinv * Eigen::Vector3d(bottom->x(), bottom->y(), 1.0)).y();
      const double len = std::abs(y_bottom - y_top) * z;
      sum[s] += len;
      sumsq[s] += len * len;
      count[s] += 1;
    }
  }

  SegmentStats stats;
  bool any = false;
  for (int s = 0; s < 3; ++s) {
    auto& row = stats.segments[s];
    row.count = count[s];
    if (count[s] > 0) {
      any = true;
      row.mean_m = sum[s] / count[s];
      if (count[s] > 1) {
        const double var =
            (sumsq[s] - sum[s] * sum[s] / count[s]) / static_cast<double>(count[s] - 1);
        row.std_m = std::sqrt(std::max(var, 0.0));
      }
    }
  }
  if (!any) {
    throw ValidationError("segment fitting: no instance provided a usable segment");
  }

  // Lowest std wins; ties resolved toward the lower segment index.
  int best = -1;
  for (int s = 0; s < 3; ++s) {
    if (count[s] == 0) continue;
    if (best < 0 || stats.segments[s].std_m < stats.segments[best].std_m) best = s;
  }
  stats.selected = static_cast<SegmentId>(best);
  return stats;
}

double estimate_distance(const Keypoints2D& kp, const CameraIntrinsics& K,
                         const SegmentStats& stats) {
  K.validate();
  const SegmentStats::Row& row = stats.segments[static_cast<int>(stats.selected)];
  if (!(row.mean_m > 0.0) || row.count < 1) {
    throw ValidationError("segment stats not fitted for the selected segment");
  }
  const auto top = row_pixel(kp, row_for(stats.selected, true));
  const auto bottom = row_pixel(kp, row_for(stats.selected, false));
  if (!top || !bottom) {
    throw ValidationError("selected segment's joints are missing from the pose");
  }
  const double u1 = top->x(), v1 = top->y();
  const double u2 = bottom->x(), v2 = bottom->y();
  if (v1 == v2) {
    throw ValidationError("unresolvable distance: segment has zero vertical pixel extent");
  }

  // Unknown endpoint (x, y, z) with the lower endpoint at y + dy, projecting
  // to the two observed rows: four linear constraints, solved in the
  // least-squares sense via the normal equations. Negating dy mirrors the
  // solution through the camera center, so the two specular solutions are
  // +-p and exactly one can have positive depth.
  const double dy = row.mean_m;
  Eigen::Matrix<double, 4, 3> A;
  Eigen::Vector4d rhs;
  A << K.fx, K.skew, K.cx - u1,
       K.fx, K.skew, K.cx - u2,
       0.0, K.fy, K.cy - v1,
       0.0, K.fy, K.cy - v2;
  rhs << 0.0, -K.skew * dy, 0.0, -K.fy * dy;

  const Eigen::Matrix3d AtA = A.transpose() * A;
  const Eigen::Vector3d Atb = A.transpose() * rhs;
  Eigen::Vector3d p = AtA.ldlt().solve(Atb);
  if (!p.allFinite()) {
    throw ValidationError("unresolvable distance: degenerate projection constraints");
  }
  if (p.z() < 0.0) p = -p;  // take the in-front-of-camera specular solution
  if (!(p.z() > 0.0)) {
    throw ValidationError("unresolvable distance: both solutions lie behind the camera");
  }

  const auto [uc, vc] = kp.bbox.center();
  const Eigen::Vector2d n = backproject(K, uc, vc);
  const Eigen::Vector3d D = p.z() * Eigen::Vector3d(n.x(), n.y(), 1.0);
  return D.norm();
}

}  // namespace pedloc
