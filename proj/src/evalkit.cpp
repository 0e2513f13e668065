#include "pedloc/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pedloc/errors.hpp"
#include "pedloc/geo_baseline.hpp"

namespace pedloc {

double iou(const BBox& a, const BBox& b) {
  const double aw = a.width(), ah = a.height();
  const double bw = b.width(), bh = b.height();
  if (aw <= 0.0 || ah <= 0.0 || bw <= 0.0 || bh <= 0.0) return 0.0;
  const double iw = std::min(a.u_max, b.u_max) - std::max(a.u_min, b.u_min);
  const double ih = std::min(a.v_max, b.v_max) - std::max(a.v_min, b.v_min);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  return inter / (aw * ah + bw * bh - inter);
}

std::string difficulty_name(Difficulty d) {
  switch (d) {
    case Difficulty::kEasy: return "easy";
    case Difficulty::kModerate: return "moderate";
    case Difficulty::kHard: return "hard";
  }
  return "unknown";
}

Difficulty difficulty_of(const GtInstance& gt) {
  const double h = gt.bbox.height();
  if (gt.occlusion < 0) return Difficulty::kHard;  // unknown occlusion
  if (h >= 40.0 && gt.occlusion == 0 && gt.truncation <= 0.15) return Difficulty::kEasy;
  if (h >= 25.0 && gt.occlusion <= 1 && gt.truncation <= 0.30) return Difficulty::kModerate;
  return Difficulty::kHard;
}

MatchResult match(std::span<const PredInstance> predictions,
                  std::span<const GtInstance> ground_truths, double iou_threshold) {
  struct Candidate {
    double score;
    size_t pred;
    size_t gt;
  };
  std::vector<Candidate> candidates;
  for (size_t p = 0; p < predictions.size(); ++p) {
    for (size_t g = 0; g < ground_truths.size(); ++g) {
      const double score = iou(predictions[p].bbox, ground_truths[g].bbox);
      if (score >= iou_threshold) candidates.push_back({score, p, g});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [&](const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score > b.score;
    if (predictions[a.pred].id != predictions[b.pred].id) {
      return predictions[a.pred].id < predictions[b.pred].id;
    }
    return ground_truths[a.gt].id < ground_truths[b.gt].id;
  });

  std::vector<bool> pred_used(predictions.size(), false);
  std::vector<bool> gt_used(ground_truths.size(), false);
  MatchResult result;
  for (const auto& c : candidates) {
    if (pred_used[c.pred] || gt_used[c.gt]) continue;
    pred_used[c.pred] = true;
    gt_used[c.gt] = true;
    const GtInstance& gt = ground_truths[c.gt];
    result.pairs.push_back({predictions[c.pred].d_pred, gt.d_gt, gt.bbox, difficulty_of(gt),
                            predictions[c.pred].id, gt.id});
  }
  result.unmatched_predictions =
      static_cast<int>(std::count(pred_used.begin(), pred_used.end(), false));
  result.unmatched_ground_truths =
      static_cast<int>(std::count(gt_used.begin(), gt_used.end(), false));
  return result;
}

std::optional<double> alp(std::span<const MatchedPair> pairs, double threshold_m) {
  if (pairs.empty()) return std::nullopt;
  int hits = 0;
  for (const auto& p : pairs) {
    if (std::abs(p.d_pred - p.d_gt) < threshold_m) ++hits;
  }
  return 100.0 * hits / static_cast<double>(pairs.size());
}

double ale_overall(std::span<const MatchedPair> pairs) {
  if (pairs.empty()) return std::numeric_limits<double>::quiet_NaN();
  double sum = 0.0;
  for (const auto& p : pairs) sum += std::abs(p.d_pred - p.d_gt);
  return sum / static_cast<double>(pairs.size());
}

std::vector<AleRow> ale_by_difficulty(std::span<const MatchedPair> pairs) {
  std::array<double, 3> sum{};
  std::array<int, 3> n{};
  for (const auto& p : pairs) {
    const int k = static_cast<int>(p.difficulty);
    sum[k] += std::abs(p.d_pred - p.d_gt);
    n[k] += 1;
  }
  std::vector<AleRow> rows;
  for (int k = 0; k < 3; ++k) {
    AleRow row;
    row.group = difficulty_name(static_cast<Difficulty>(k));
    row.n = n[k];
    row.ale_m = n[k] > 0 ? sum[k] / n[k] : std::numeric_limits<double>::quiet_NaN();
    rows.push_back(row);
  }
  return rows;
}

std::vector<AleRow> ale_by_distance(std::span<const MatchedPair> pairs,
                                    std::span<const double> edges) {
  if (edges.size() < 1) throw ValidationError("need at least one bin edge");
  const size_t n_bins = edges.size();  // last bin open-ended
  std::vector<double> sum(n_bins, 0.0);
  std::vector<int> n(n_bins, 0);
  for (const auto& p : pairs) {
    size_t k = 0;
    while (k + 1 < n_bins && p.d_gt >= edges[k + 1]) ++k;
    if (p.d_gt < edges[0]) continue;  // below the first edge: not binned
    sum[k] += std::abs(p.d_pred - p.d_gt);
    n[k] += 1;
  }
  std::vector<AleRow> rows;
  for (size_t k = 0; k < n_bins; ++k) {
    AleRow row;
    if (k + 1 < n_bins) {
      row.group = format_double(edges[k]) + "-" + format_double(edges[k + 1]);
    } else {
      row.group = format_double(edges[k]) + "+";
    }
    row.n = n[k];
    row.ale_m = n[k] > 0 ? sum[k] / n[k] : std::numeric_limits<double>::quiet_NaN();
    rows.push_back(row);
  }
  return rows;
}

AblationTable run_ablation(std::span<const AnnotationRecord> train_records,
                           std::span<const AnnotationRecord> val_records,
                           std::span<const AnnotationRecord> test_records,
                           const AblationConfig& cfg) {
  const auto train_samples = to_train_samples(train_records, cfg.center_mode);
  const auto val_samples = to_train_samples(val_records, cfg.center_mode);
  const auto test_samples = to_train_samples(test_records, cfg.center_mode);

  AblationTable table;
  for (size_t k = 0; k < cfg.bin_edges.size(); ++k) {
    if (k + 1 < cfg.bin_edges.size()) {
      table.bin_labels.push_back(format_double(cfg.bin_edges[k]) + "-" +
                                 format_double(cfg.bin_edges[k + 1]));
    } else {
      table.bin_labels.push_back(format_double(cfg.bin_edges[k]) + "+");
    }
  }
  table.bin_labels.push_back("all");
  const size_t n_cols = table.bin_labels.size();

  // Per-bin ALE of a vector of predicted distances on the test set.
  auto bin_ales = [&](const std::vector<double>& d_pred) {
    std::vector<MatchedPair> pairs(test_samples.size());
    for (size_t i = 0; i < test_samples.size(); ++i) {
      pairs[i].d_pred = d_pred[i];
      pairs[i].d_gt = test_samples[i].target_d;
    }
    std::vector<double> cols;
    for (const auto& row : ale_by_distance(pairs, cfg.bin_edges)) cols.push_back(row.ale_m);
    cols.push_back(ale_overall(pairs));
    return cols;
  };

  for (LossKind loss : cfg.losses) {
    AblationRow row;
    row.method = loss_name(loss);
    std::vector<std::vector<double>> per_seed;
    for (uint64_t seed : cfg.seeds) {
      TrainConfig tc = cfg.base;
      tc.loss = loss;
      tc.seed = seed;
      try {
        const TrainResult res = train(train_samples, val_samples, tc);
        Eigen::MatrixXd X(res.model.cfg.input_dim,
                          static_cast<Eigen::Index>(test_samples.size()));
        for (size_t j = 0; j < test_samples.size(); ++j) {
          for (int i = 0; i < res.model.cfg.input_dim; ++i) {
            X(i, static_cast<Eigen::Index>(j)) = test_samples[j].input[i];
          }
        }
        const Eigen::MatrixXd out = forward_batch(res.model, X, ForwardMode::kEval, nullptr);
        std::vector<double> d_pred(test_samples.size());
        for (size_t j = 0; j < test_samples.size(); ++j) {
          d_pred[j] = out(0, static_cast<Eigen::Index>(j));
        }
        per_seed.push_back(bin_ales(d_pred));
      } catch (const Error& e) {
        row.errors.push_back("seed " + std::to_string(seed) + ": " + e.what());
      }
    }
    row.ale_mean.assign(n_cols, std::numeric_limits<double>::quiet_NaN());
    row.ale_std.assign(n_cols, std::numeric_limits<double>::quiet_NaN());
    if (!per_seed.empty()) {
      for (size_t c = 0; c < n_cols; ++c) {
        double sum = 0.0;
        for (const auto& v : per_seed) sum += v[c];
        const double mean = sum / per_seed.size();
        double sq = 0.0;
        for (const auto& v : per_seed) sq += (v[c] - mean) * (v[c] - mean);
        row.ale_mean[c] = mean;
        row.ale_std[c] = per_seed.size() > 1 ? std::sqrt(sq / (per_seed.size() - 1)) : 0.0;
      }
    }
    table.rows.push_back(std::move(row));
  }

  // Deterministic geometric baseline, identical for every seed.
  {
    AblationRow row;
    row.method = "geometric";
    try {
      const SegmentStats stats = fit_segments(to_labeled_poses(train_records));
      std::vector<double> d_pred(test_records.size());
      for (size_t i = 0; i < test_records.size(); ++i) {
        d_pred[i] = estimate_distance(test_records[i].kp, test_records[i].intrinsics(), stats);
      }
      row.ale_mean = bin_ales(d_pred);
      row.ale_std.assign(n_cols, 0.0);
    } catch (const Error& e) {
      row.errors.push_back(e.what());
      row.ale_mean.assign(n_cols, std::numeric_limits<double>::quiet_NaN());
      row.ale_std.assign(n_cols, std::numeric_limits<double>::quiet_NaN());
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

void write_ablation_csv(const std::string& path, const AblationTable& table) {
  std::vector<std::string> header{"method"};
  for (const auto& label : table.bin_labels) {
    header.push_back("ale_" + label);
    header.push_back("ale_" + label + "_std");
  }
  header.push_back("errors");
  std::vector<std::vector<std::string>> rows;
  for (const auto& row : table.rows) {
    std::vector<std::string> cells{row.method};
    for (size_t c = 0; c < table.bin_labels.size(); ++c) {
      cells.push_back(format_double(row.ale_mean[c]));
      cells.push_back(format_double(row.ale_std[c]));
    }
    std::string err;
    for (size_t i = 0; i < row.errors.size(); ++i) {
      if (i) err += " | ";
      err += row.errors[i];
    }
    cells.push_back(err);
    rows.push_back(std::move(cells));
  }
  write_csv(path, "ablation", header, rows);
}

}  // namespace pedloc
