#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pedloc/dataio.hpp"
#include "pedloc/geometry.hpp"
#include "pedloc/net.hpp"

namespace pedloc {

double iou(const BBox& a, const BBox& b);

struct GtInstance {
  int id = 0;
  double d_gt = 0.0;
  BBox bbox{};
  int occlusion = 0;      // -1 when unknown
  double truncation = 0.0;
};

struct PredInstance {
  int id = 0;
  double d_pred = 0.0;
  BBox bbox{};
};

enum class Difficulty { kEasy, kModerate, kHard };
std::string difficulty_name(Difficulty d);

// KITTI-convention regimes: easy when the box is at least 40 px tall with no
// occlusion and truncation <= 0.15; moderate down to 25 px, occlusion <= 1,
// truncation <= 0.30; everything else (or unknown fields) is hard.
Difficulty difficulty_of(const GtInstance& gt);

struct MatchedPair {
  double d_pred = 0.0;
  double d_gt = 0.0;
  BBox gt_bbox{};
  Difficulty difficulty = Difficulty::kHard;
  int pred_id = 0;
  int gt_id = 0;
};

struct MatchResult {
  std::vector<MatchedPair> pairs;
  int unmatched_predictions = 0;
  int unmatched_ground_truths = 0;
};

// One-to-one greedy matching by descending IoU; candidates below the
// threshold stay unmatched. Ties break toward lower prediction id, then
// lower ground-truth id, so results are deterministic.
MatchResult match(std::span<const PredInstance> predictions,
                  std::span<const GtInstance> ground_truths, double iou_threshold = 0.3);

// Percentage of pairs with |d_pred - d_gt| < threshold; empty input has no
// defined value.
std::optional<double> alp(std::span<const MatchedPair> pairs, double threshold_m);

inline const std::vector<double> kDefaultAlpThresholds{0.5, 1.0, 2.0};
// Bin edges for distance-grouped ALE; the last bin is open-ended.
inline const std::vector<double> kDefaultBinEdges{0.0, 10.0, 20.0, 30.0};

double ale_overall(std::span<const MatchedPair> pairs);

struct AleRow {
  std::string group;
  int n = 0;
  double ale_m = 0.0;  // NaN for empty groups
};

std::vector<AleRow> ale_by_difficulty(std::span<const MatchedPair> pairs);
// edges define [e0,e1), [e1,e2), ..., [e_last, inf).
std::vector<AleRow> ale_by_distance(std::span<const MatchedPair> pairs,
                                    std::span<const double> edges);

// ---------------------------------------------------------------------------
// Loss-function ablation.

struct AblationConfig {
  std::vector<LossKind> losses{LossKind::kLaplace, LossKind::kGaussian, LossKind::kL1};
  std::vector<uint64_t> seeds{1, 2, 3};
  TrainConfig base{};  // loss and seed overridden per cell
  std::vector<double> bin_edges = kDefaultBinEdges;
  CenterMode center_mode = CenterMode::kCentroid;
};

struct AblationRow {
  std::string method;               // loss name or "geometric"
  std::vector<double> ale_mean;     // per distance bin, then overall
  std::vector<double> ale_std;      // across seeds (zero for geometric)
  std::vector<std::string> errors;  // per-seed failures, if any
};

struct AblationTable {
  std::vector<std::string> bin_labels;  // per distance bin, then "all"
  std::vector<AblationRow> rows;
};

// Trains one model per (loss, seed) on the annotated records, evaluates
// per-bin ALE on the test records, and appends the deterministic geometric
// baseline row. Training failures are recorded per cell, not propagated.
AblationTable run_ablation(std::span<const AnnotationRecord> train_records,
                           std::span<const AnnotationRecord> val_records,
                           std::span<const AnnotationRecord> test_records,
                           const AblationConfig& cfg);

void write_ablation_csv(const std::string& path, const AblationTable& table);

}  // namespace pedloc
