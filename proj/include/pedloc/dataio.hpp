#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pedloc/geo_baseline.hpp"
#include "pedloc/geometry.hpp"
#include "pedloc/net.hpp"
#include "pedloc/uncertainty.hpp"

namespace pedloc {

// Ground-truth block of an annotation record.
struct GtInfo {
  Point3D D{};          // 3D center, camera frame, meters
  double h_gt_cm = 0.0; // stature
  int occlusion = 0;    // -1 means unknown
  double truncation = 0.0;
};

// One pedestrian instance in the JSONL annotation format (docs/formats.md).
struct AnnotationRecord {
  int id = 0;
  int image_id = 0;
  Keypoints2D kp{};
  std::array<double, 9> K_row_major{};  // intrinsics, row-major 3x3
  std::optional<GtInfo> gt;

  CameraIntrinsics intrinsics() const { return CameraIntrinsics::from_row_major(K_row_major); }
};

std::vector<AnnotationRecord> read_annotations(const std::string& path);
void write_annotations(const std::string& path, std::span<const AnnotationRecord> records);

// Builds network inputs/targets from annotated records; every record must
// carry ground truth.
std::vector<TrainSample> to_train_samples(std::span<const AnnotationRecord> records,
                                          CenterMode mode = CenterMode::kCentroid);

// Segment-fitting view of annotated records (ground truth required).
std::vector<LabeledPose> to_labeled_poses(std::span<const AnnotationRecord> records);

// Extracts intrinsics from a KITTI-style calibration text: whitespace
// separated floats after a "P2:" key (12 values, 3x4 row-major); the
// translation column is ignored for monocular use.
CameraIntrinsics parse_kitti_calib(const std::string& text, const std::string& key = "P2");
CameraIntrinsics read_kitti_calib_file(const std::string& path, const std::string& key = "P2");
// Renders intrinsics back into a P2-style line; digits survive a round trip.
std::string format_kitti_calib(const CameraIntrinsics& K, const std::string& key = "P2");

// Self-contained model container: architecture, every trainable parameter,
// batch-norm running statistics, the training config that produced it, the
// geometric baseline's segment stats, and seed provenance.
struct Checkpoint {
  int format_version = 1;
  LocModel model;
  TrainConfig train_cfg{};
  std::optional<SegmentStats> segment_stats;
  uint64_t train_seed = 0;
  std::string data_source;  // free-form provenance note
};

Checkpoint read_checkpoint(const std::string& path);
void write_checkpoint(const std::string& path, const Checkpoint& ckpt);

// One line per instance in the predictions JSONL file.
struct PredictionRecord {
  int id = 0;
  BBox bbox{};
  DistanceEstimate est{};
};

std::vector<PredictionRecord> read_predictions(const std::string& path);
void write_predictions(const std::string& path, std::span<const PredictionRecord> records);

// Small CSV emitter: a "# pedloc <kind> v1" version line, a header row,
// then data rows. Numbers are shortest-round-trip formatted.
void write_csv(const std::string& path, const std::string& kind,
               std::span<const std::string> header,
               const std::vector<std::vector<std::string>>& rows);

// Shortest decimal representation that parses back to the same double.
std::string format_double(double value);

}  // namespace pedloc
