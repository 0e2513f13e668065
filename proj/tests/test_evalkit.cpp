#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "pedloc/errors.hpp"
#include "pedloc/evalkit.hpp"
#include "pedloc/rng.hpp"

using namespace pedloc;

namespace {

MatchedPair pair_with(double d_pred, double d_gt) {
  MatchedPair p;
  p.d_pred = d_pred;
  p.d_gt = d_gt;
  return p;
}

}  // namespace

TEST_CASE("iou examples") {
  const BBox a{0, 0, 10, 10};
  CHECK(iou(a, a) == doctest::Approx(1.0));
  CHECK(iou(a, {20, 20, 30, 30}) == 0.0);
  CHECK(iou(a, {5, 0, 15, 10}) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(iou(a, {3, 3, 3, 9}) == 0.0);  // degenerate box
}

TEST_CASE("matching examples") {
  const std::vector<GtInstance> gt{{0, 12.0, {0, 0, 10, 50}, 0, 0.0}};

  std::vector<PredInstance> preds{{0, 11.0, {0, 0, 10, 25}}};  // IoU 0.5
  MatchResult res = match(preds, gt);
  CHECK(res.pairs.size() == 1);
  CHECK(res.unmatched_predictions == 0);
  CHECK(res.unmatched_ground_truths == 0);

  preds[0].bbox = {0, 0, 10, 10};  // IoU 0.2
  res = match(preds, gt);
  CHECK(res.pairs.empty());
  CHECK(res.unmatched_predictions == 1);
  CHECK(res.unmatched_ground_truths == 1);
}

TEST_CASE("one-to-one matching keeps the higher IoU") {
  const std::vector<GtInstance> gt{{7, 12.0, {0, 0, 10, 50}, 0, 0.0}};
  const std::vector<PredInstance> preds{
      {1, 11.0, {0, 0, 10, 40}},  // IoU 0.8
      {2, 14.0, {0, 0, 10, 25}},  // IoU 0.5
  };
  const MatchResult res = match(preds, gt);
  REQUIRE(res.pairs.size() == 1);
  CHECK(res.pairs[0].pred_id == 1);
  CHECK(res.pairs[0].gt_id == 7);
  CHECK(res.unmatched_predictions == 1);  // the other prediction is a false positive
}

TEST_CASE("matching ties break toward the lower instance id") {
  const std::vector<GtInstance> gt{{3, 10.0, {0, 0, 10, 50}, 0, 0.0}};
  const std::vector<PredInstance> preds{
      {9, 11.0, {0, 0, 10, 50}},
      {4, 12.0, {0, 0, 10, 50}},  // identical box, identical IoU
  };
  const MatchResult res = match(preds, gt);
  REQUIRE(res.pairs.size() == 1);
  CHECK(res.pairs[0].pred_id == 4);
}

TEST_CASE("alp examples") {
  std::vector<MatchedPair> pairs{pair_with(10.3, 10.0), pair_with(9.3, 10.0),
                                 pair_with(11.5, 10.0)};
  CHECK(*alp(pairs, 1.0) == doctest::Approx(100.0 * 2.0 / 3.0).epsilon(1e-12));
  CHECK(*alp(pairs, 0.2) == 0.0);
  CHECK(!alp({}, 1.0).has_value());
}

TEST_CASE("alp is monotone in the threshold") {
  Rng rng(31);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<MatchedPair> pairs;
    const int n = 1 + static_cast<int>(rng.below(20));
    for (int i = 0; i < n; ++i) {
      pairs.push_back(pair_with(rng.uniform(5.0, 40.0), rng.uniform(5.0, 40.0)));
    }
    const double t1 = rng.uniform(0.0, 5.0);
    const double t2 = t1 + rng.uniform(0.0, 5.0);
    CHECK(*alp(pairs, t1) <= *alp(pairs, t2));
  }
}

TEST_CASE("ale examples and permutation invariance") {
  std::vector<MatchedPair> pairs{pair_with(12.5, 10.0)};
  CHECK(ale_overall(pairs) == doctest::Approx(2.5));

  pairs = {pair_with(10.0, 10.0), pair_with(20.0, 20.0)};
  CHECK(ale_overall(pairs) == 0.0);

  Rng rng(37);
  pairs.clear();
  for (int i = 0; i < 50; ++i) {
    pairs.push_back(pair_with(rng.uniform(5.0, 40.0), rng.uniform(5.0, 40.0)));
  }
  const double base = ale_overall(pairs);
  std::reverse(pairs.begin(), pairs.end());
  CHECK(ale_overall(pairs) == doctest::Approx(base).epsilon(1e-12));

  // group-weighted mean identity over distance bins
  const auto rows = ale_by_distance(pairs, kDefaultBinEdges);
  double weighted = 0.0;
  int total = 0;
  for (const auto& row : rows) {
    if (row.n == 0) continue;
    weighted += row.ale_m * row.n;
    total += row.n;
  }
  CHECK(weighted / total == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("ale by difficulty groups") {
  std::vector<MatchedPair> pairs;
  MatchedPair p = pair_with(11.0, 10.0);
  p.difficulty = Difficulty::kEasy;
  pairs.push_back(p);
  p = pair_with(14.0, 10.0);
  p.difficulty = Difficulty::kHard;
  pairs.push_back(p);
  const auto rows = ale_by_difficulty(pairs);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].group == "easy");
  CHECK(rows[0].ale_m == doctest::Approx(1.0));
  CHECK(rows[1].n == 0);
  CHECK(std::isnan(rows[1].ale_m));
  CHECK(rows[2].ale_m == doctest::Approx(4.0));
}

TEST_CASE("difficulty regimes") {
  GtInstance gt;
  gt.bbox = {0, 0, 10, 50};
  gt.occlusion = 0;
  gt.truncation = 0.0;
  CHECK(difficulty_of(gt) == Difficulty::kEasy);

  gt.bbox = {0, 0, 10, 30};
  gt.occlusion = 1;
  CHECK(difficulty_of(gt) == Difficulty::kModerate);

  gt.bbox = {0, 0, 10, 20};
  gt.occlusion = 0;
  CHECK(difficulty_of(gt) == Difficulty::kHard);

  gt.bbox = {0, 0, 10, 50};
  gt.occlusion = -1;  // unknown
  CHECK(difficulty_of(gt) == Difficulty::kHard);
}

TEST_CASE("distance bin labels and routing") {
  std::vector<MatchedPair> pairs{pair_with(9.0, 8.0), pair_with(15.0, 15.5),
                                 pair_with(36.0, 35.0)};
  const auto rows = ale_by_distance(pairs, kDefaultBinEdges);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].group == "0-10");
  CHECK(rows[3].group == "30+");
  CHECK(rows[0].n == 1);
  CHECK(rows[1].n == 1);
  CHECK(rows[2].n == 0);
  CHECK(rows[3].n == 1);
  CHECK(rows[3].ale_m == doctest::Approx(1.0));
}
