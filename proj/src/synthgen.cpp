#include "pedloc/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <vector>

#include "pedloc/dataio.hpp"
#include "pedloc/errors.hpp"
#include "pedloc/rng.hpp"

namespace pedloc {

SkeletonTemplate SkeletonTemplate::coco_default() {
  SkeletonTemplate t;
  auto set = [&t](JointId left, JointId right, double v, double lat) {
    t.vertical_frac[left] = v;
    t.vertical_frac[right] = v;
    t.lateral_frac[left] = lat;
    t.lateral_frac[right] = -lat;
  };
  t.vertical_frac[kNose] = 0.936;
  t.lateral_frac[kNose] = 0.0;
  set(kLeftEye, kRightEye, 0.930, 0.020);
  set(kLeftEar, kRightEar, 0.920, 0.040);
  set(kLeftShoulder, kRightShoulder, 0.818, 0.129);
  set(kLeftElbow, kRightElbow, 0.630, 0.140);
  set(kLeftWrist, kRightWrist, 0.485, 0.145);
  set(kLeftHip, kRightHip, 0.530, 0.096);
  set(kLeftKnee, kRightKnee, 0.285, 0.080);
  set(kLeftAnkle, kRightAnkle, 0.000, 0.070);
  t.head_top_frac = 1.0;
  return t;
}

void SkeletonTemplate::validate() const {
  if (vertical_frac[kLeftAnkle] != 0.0 || vertical_frac[kRightAnkle] != 0.0) {
    throw ValidationError("skeleton template: ankle row must sit at fraction 0");
  }
  if (head_top_frac != 1.0) {
    throw ValidationError("skeleton template: head top must sit at fraction 1");
  }
  const std::array<std::pair<JointId, JointId>, 8> pairs = {{{kLeftEye, kRightEye},
                                                             {kLeftEar, kRightEar},
                                                             {kLeftShoulder, kRightShoulder},
                                                             {kLeftElbow, kRightElbow},
                                                             {kLeftWrist, kRightWrist},
                                                             {kLeftHip, kRightHip},
                                                             {kLeftKnee, kRightKnee},
                                                             {kLeftAnkle, kRightAnkle}}};
  for (const auto& [l, r] : pairs) {
    if (vertical_frac[l] != vertical_frac[r] || lateral_frac[l] != -lateral_frac[r]) {
      throw ValidationError("skeleton template: left/right joints must be mirror-symmetric");
    }
  }
  if (lateral_frac[kNose] != 0.0) {
    throw ValidationError("skeleton template: nose must sit on the body axis");
  }
}

void SceneConfig::validate() const {
  if (!(d_range.first > 1.0) || !(d_range.second < 100.0) || !(d_range.first <= d_range.second)) {
    throw ValidationError("distance range must lie within (1, 100) meters");
  }
  if (lateral_fov_fraction < 0.0 || lateral_fov_fraction > 1.0) {
    throw ValidationError("lateral_fov_fraction must be in [0, 1]");
  }
  if (pixel_noise_std < 0.0) throw ValidationError("pixel noise std must be non-negative");
  if (joint_dropout_prob < 0.0 || joint_dropout_prob >= 1.0) {
    throw ValidationError("joint dropout probability must be in [0, 1)");
  }
  if (image_width < 2 || image_height < 2) throw ValidationError("image size too small");
  mix.validate();
  K.validate();
  skeleton.validate();
}

namespace {

struct SkeletonPlacement {
  std::array<Point3D, kNumJoints> joints;
  Point3D center;
};

// Axis-aligned 3D bbox midpoint of the joints.
Point3D joint_bbox_center(const std::array<Point3D, kNumJoints>& joints) {
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = xmax, zmin = xmin, zmax = xmax;
  for (const auto& p : joints) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
    zmin = std::min(zmin, p.z);
    zmax = std::max(zmax, p.z);
  }
  return {0.5 * (xmin + xmax), 0.5 * (ymin + ymax), 0.5 * (zmin + zmax)};
}

SkeletonPlacement place_standing(const SkeletonTemplate& tpl, double h_m, double x_c, double z_c,
                                 double ground_y) {
  SkeletonPlacement out;
  for (int i = 0; i < kNumJoints; ++i) {
    out.joints[i].x = x_c + tpl.lateral_frac[i] * h_m;
    out.joints[i].y = ground_y - tpl.vertical_frac[i] * h_m;  // y points down
    out.joints[i].z = z_c;
  }
  out.center = joint_bbox_center(out.joints);
  return out;
}

BBox tight_bbox(const Keypoints2D& kp) {
  BBox box;
  box.u_min = std::numeric_limits<double>::infinity();
  box.v_min = box.u_min;
  box.u_max = -box.u_min;
  box.v_max = -box.u_min;
  for (const auto& j : kp.joints) {
    if (j.conf <= 0.0) continue;
    box.u_min = std::min(box.u_min, j.u);
    box.u_max = std::max(box.u_max, j.u);
    box.v_min = std::min(box.v_min, j.v);
    box.v_max = std::max(box.v_max, j.v);
  }
  return box;
}

}  // namespace

SceneSample sample_scene(uint64_t seed, const SceneConfig& cfg) {
  cfg.validate();
  Rng rng(seed);
  const double tan_half_fov = 0.5 * cfg.image_width / cfg.K.fx;

  for (int attempt = 0; attempt < 100; ++attempt) {
    // Component draw (categorical by weight), then height, distance, lateral offset.
    const double cu = rng.uniform();
    size_t ci = 0;
    double acc = 0.0;
    for (size_t k = 0; k < cfg.mix.components.size(); ++k) {
      acc += cfg.mix.components[k].weight;
      if (cu < acc) {
        ci = k;
        break;
      }
      ci = k;
    }
    const auto& comp = cfg.mix.components[ci];
    const double h_cm = rng.normal(comp.mean_cm, comp.std_cm);
    const double d = rng.uniform(cfg.d_range.first, cfg.d_range.second);
    const double r_lat = tan_half_fov * cfg.lateral_fov_fraction * rng.uniform(-1.0, 1.0);

    if (!(h_cm > 50.0)) continue;  // pathological tail draw; resample
    const double h_m = h_cm / 100.0;

    // Solve for depth so that the 3D joint-bbox midpoint has norm d.
    const double span = cfg.skeleton.vertical_frac[kNose];  // highest joint row
    const double y_mid = cfg.camera_height_m - 0.5 * span * h_m;
    const double under = d * d - y_mid * y_mid;
    if (!(under > 0.0)) continue;
    const double z_c = std::sqrt(under / (1.0 + r_lat * r_lat));
    const double x_c = r_lat * z_c;

    const SkeletonPlacement placed =
        place_standing(cfg.skeleton, h_m, x_c, z_c, cfg.camera_height_m);

    SceneSample s;
    s.joints3d = placed.joints;
    s.center = placed.center;
    s.d_gt_m = placed.center.norm();
    s.h_gt_cm = h_cm;
    s.gender = (comp.label == "female") ? Gender::kFemale : Gender::kMale;
    s.pose_tag = PoseTag::kStanding;
    s.K = cfg.K;

    bool inside = true;
    for (int i = 0; i < kNumJoints; ++i) {
      const Eigen::Vector2d px = project(cfg.K, placed.joints[i]);
      if (px.x() < 0.0 || px.x() >= cfg.image_width || px.y() < 0.0 ||
          px.y() >= cfg.image_height) {
        inside = false;
        break;
      }
      s.kp_clean.joints[i] = {px.x(), px.y(), 1.0};
    }
    if (!inside) continue;
    s.kp_clean.bbox = tight_bbox(s.kp_clean);

    s.kp = s.kp_clean;
    if (cfg.pixel_noise_std > 0.0) {
      for (int i = 0; i < kNumJoints; ++i) {
        s.kp.joints[i].u += cfg.pixel_noise_std * rng.normal();
        s.kp.joints[i].v += cfg.pixel_noise_std * rng.normal();
      }
    }
    if (cfg.joint_dropout_prob > 0.0) {
      for (int i = 0; i < kNumJoints; ++i) {
        if (rng.bernoulli(cfg.joint_dropout_prob)) s.kp.joints[i].conf = 0.0;
      }
      if (s.kp.count_confident() < 2) continue;
    }
    s.kp.bbox = tight_bbox(s.kp);
    return s;
  }
  throw ValidationError("scene sampling failed: skeleton left the image in 100 attempts");
}

SceneSample make_lying_variant(const SceneSample& s) {
  if (s.pose_tag != PoseTag::kStanding) {
    throw ValidationError("lying variant requires a standing sample");
  }
  const double y_pivot = std::max(s.joints3d[kLeftAnkle].y, s.joints3d[kRightAnkle].y);
  const double z_pivot = s.joints3d[kLeftAnkle].z;

  SceneSample out = s;
  out.pose_tag = PoseTag::kLying;
  // Rotate +90 deg about the x-axis through the ankle line: a point height
  // dy above the pivot ends up the same amount closer to the camera.
  for (int i = 0; i < kNumJoints; ++i) {
    const double dy = s.joints3d[i].y - y_pivot;
    const double dz = s.joints3d[i].z - z_pivot;
    out.joints3d[i].x = s.joints3d[i].x;
    out.joints3d[i].y = y_pivot - dz;
    out.joints3d[i].z = z_pivot + dy;
  }
  for (int i = 0; i < kNumJoints; ++i) {
    if (!(out.joints3d[i].z > 0.0)) {
      throw ValidationError("lying variant: rotated skeleton ended up behind the camera");
    }
    const Eigen::Vector2d px = project(s.K, out.joints3d[i]);
    out.kp_clean.joints[i] = {px.x(), px.y(), s.kp.joints[i].conf};
  }
  out.kp_clean.bbox = tight_bbox(out.kp_clean);
  out.kp = out.kp_clean;
  out.center = joint_bbox_center(out.joints3d);
  out.d_gt_m = out.center.norm();
  return out;
}

void generate_dataset(const std::string& out_dir, int n, const SplitRatios& ratios,
                      const SceneConfig& cfg, uint64_t seed) {
  if (n < 1) throw ValidationError("dataset size must be >= 1");
  if (ratios.train < 0.0 || ratios.val < 0.0 || ratios.test < 0.0 ||
      std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9) {
    throw ValidationError("split ratios must be non-negative and sum to 1");
  }
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);

  const int n_train = static_cast<int>(ratios.train * n);
  const int n_val = static_cast<int>(ratios.val * n);

  std::vector<AnnotationRecord> records;
  records.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const SceneSample s = sample_scene(split_seed(seed, static_cast<uint64_t>(i)), cfg);
    AnnotationRecord rec;
    rec.id = i;
    rec.image_id = i;
    rec.kp = s.kp;
    rec.K_row_major = s.K.to_row_major();
    GtInfo gt;
    gt.D = s.center;
    gt.h_gt_cm = s.h_gt_cm;
    gt.occlusion = 0;
    gt.truncation = 0.0;
    rec.gt = gt;
    records.push_back(std::move(rec));
  }

  const auto begin = records.begin();
  write_annotations(out_dir + "/train.jsonl", {begin, begin + n_train});
  write_annotations(out_dir + "/val.jsonl", {begin + n_train, begin + n_train + n_val});
  write_annotations(out_dir + "/test.jsonl", {begin + n_train + n_val, records.end()});
}

}  // namespace pedloc
