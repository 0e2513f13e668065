#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>

#include "pedloc/geometry.hpp"

namespace pedloc {

// Body segments used by the deterministic distance baseline.
enum class SegmentId : int { kHeadShoulder = 0, kShoulderHip = 1, kHipAnkle = 2 };

std::string segment_name(SegmentId id);

// Metric length statistics of the three vertical body segments measured on
// a training set with ground-truth 3D locations. The most stable segment
// (lowest std) is the one used for distance recovery.
struct SegmentStats {
  struct Row {
    double mean_m = 0.0;
    double std_m = 0.0;
    int64_t count = 0;
  };
  std::array<Row, 3> segments{};
  SegmentId selected = SegmentId::kShoulderHip;
};

// A training instance carrying what segment fitting needs.
struct LabeledPose {
  Keypoints2D kp;
  Point3D gt_center;
  CameraIntrinsics K;
};

// Back-projects each keypoint to 3D at the instance's ground-truth depth,
// measures per-segment vertical heights (left/right keypoints averaged in
// pixel space), and records mean/std in meters over the set.
SegmentStats fit_segments(std::span<const LabeledPose> instances);

// Recovers the distance of one instance assuming the selected segment is
// vertical with the fitted metric length: least-squares solution of the
// four projection constraints, positive-depth solution retained, distance
// taken along the bbox-center ray at the recovered depth.
double estimate_distance(const Keypoints2D& kp, const CameraIntrinsics& K,
                         const SegmentStats& stats);

}  // namespace pedloc
