#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "pedloc/geometry.hpp"
#include "pedloc/height_model.hpp"

namespace pedloc {

// Planar (fronto-parallel) body layout: per-joint height above the ankle
// plane and signed lateral offset from the body axis, both as fractions of
// total stature. Shoulder row at 0.818 and hip row at 0.530 so the
// shoulder-hip segment is 0.288 of stature; the highest joint (nose row)
// sits at 0.936 since COCO has no head-top keypoint.
struct SkeletonTemplate {
  std::array<double, kNumJoints> vertical_frac{};
  std::array<double, kNumJoints> lateral_frac{};
  double head_top_frac = 1.0;  // top of head; not a joint

  static SkeletonTemplate coco_default();
  void validate() const;
};

enum class Gender { kMale, kFemale };
enum class PoseTag { kStanding, kLying };

struct SceneSample {
  Keypoints2D kp;        // with pixel noise / joint dropout applied
  Keypoints2D kp_clean;  // exact projection, before noise
  std::array<Point3D, kNumJoints> joints3d{};  // ground-truth skeleton
  Point3D center{};      // midpoint of the 3D joint bounding box
  double d_gt_m = 0.0;   // ||center||
  double h_gt_cm = 0.0;
  Gender gender = Gender::kMale;
  PoseTag pose_tag = PoseTag::kStanding;
  CameraIntrinsics K{};
};

struct SceneConfig {
  std::pair<double, double> d_range{5.0, 40.0};  // meters, must lie in (1, 100)
  double lateral_fov_fraction = 0.3;             // fraction of the half field of view used
  double pixel_noise_std = 2.0;                  // px, i.i.d. Gaussian on u and v
  double joint_dropout_prob = 0.0;               // probability a joint goes missing
  HeightMixture mix = HeightMixture::default_adult();
  CameraIntrinsics K{721.0, 721.0, 621.0, 187.0, 0.0};
  int image_width = 1242;
  int image_height = 375;
  double camera_height_m = 1.2;  // height of the optical center above ground
  SkeletonTemplate skeleton = SkeletonTemplate::coco_default();

  void validate() const;
};

// Draws one standing pedestrian: gendered height from the mixture, distance
// uniform over d_range, lateral placement uniform within the configured FOV
// band. Deterministic in the seed. Configurations that put the skeleton
// outside the image are resampled up to 100 times before failing.
SceneSample sample_scene(uint64_t seed, const SceneConfig& cfg);

// Rotates the skeleton 90 degrees about the camera x-axis at ankle height
// (head ends up toward the camera, body on the ground plane), re-projects,
// and recomputes the ground truth. The reprojection is exact (no new noise).
SceneSample make_lying_variant(const SceneSample& s);

struct SplitRatios {
  double train = 0.7;
  double val = 0.15;
  double test = 0.15;
};

// Writes train.jsonl / val.jsonl / test.jsonl under out_dir in the
// annotation format. Per-sample streams are derived from (seed, index), so
// the split files are disjoint in randomness and byte-stable across runs.
void generate_dataset(const std::string& out_dir, int n, const SplitRatios& ratios,
                      const SceneConfig& cfg, uint64_t seed);

}  // namespace pedloc
