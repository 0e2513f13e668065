#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "pedloc/dataio.hpp"
#include "pedloc/errors.hpp"
#include "pedloc/rng.hpp"

using namespace pedloc;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

AnnotationRecord random_record(Rng& rng, int id) {
  AnnotationRecord rec;
  rec.id = id;
  rec.image_id = id / 4;
  for (auto& j : rec.kp.joints) {
    j = {rng.uniform(0.0, 1240.0), rng.uniform(0.0, 370.0), rng.bernoulli(0.9) ? 1.0 : 0.0};
  }
  rec.kp.bbox = {rng.uniform(0.0, 100.0), rng.uniform(0.0, 100.0), rng.uniform(200.0, 1000.0),
                 rng.uniform(200.0, 370.0)};
  rec.K_row_major = {721.0, 0.0, 609.0, 0.0, 721.0, 172.0, 0.0, 0.0, 1.0};
  if (rng.bernoulli(0.8)) {
    GtInfo gt;
    gt.D = {rng.uniform(-10.0, 10.0), rng.uniform(-2.0, 2.0), rng.uniform(4.0, 50.0)};
    gt.h_gt_cm = rng.uniform(150.0, 200.0);
    gt.occlusion = static_cast<int>(rng.below(3));
    gt.truncation = rng.uniform(0.0, 0.4);
    rec.gt = gt;
  }
  return rec;
}

}  // namespace

TEST_CASE("kitti calibration parsing") {
  const CameraIntrinsics K =
      parse_kitti_calib("P2: 721 0 609 0 0 721 172 0 0 0 1 0");
  CHECK(K.fx == 721.0);
  CHECK(K.fy == 721.0);
  CHECK(K.cx == 609.0);
  CHECK(K.cy == 172.0);
  CHECK(K.skew == 0.0);
}

TEST_CASE("kitti parsing picks the requested row and reports errors") {
  const std::string text =
      "P0: 100 0 50 0 0 100 40 0 0 0 1 0\n"
      "P2: 721.5377 0 609.5593 44.857 0 721.5377 172.854 0.2163 0 0 1 0.00274\n";
  const CameraIntrinsics K = parse_kitti_calib(text);
  CHECK(K.fx == doctest::Approx(721.5377));
  CHECK(K.cx == doctest::Approx(609.5593));

  CHECK_THROWS_AS(parse_kitti_calib(""), ParseError);
  CHECK_THROWS_AS(parse_kitti_calib("P2: 1 2 3"), ParseError);
  CHECK_THROWS_AS(parse_kitti_calib(text, "P9"), ParseError);
  try {
    parse_kitti_calib("P3: 1 2 3 4\nP2: 1 2 3\n");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
}

TEST_CASE("kitti round trip preserves all digits") {
  CameraIntrinsics K{721.53770000000009, 720.99999999999977, 609.55930000000001,
                     172.85399999999998, 0.0};
  const std::string line = format_kitti_calib(K);
  const CameraIntrinsics back = parse_kitti_calib(line);
  CHECK(back.fx == K.fx);
  CHECK(back.fy == K.fy);
  CHECK(back.cx == K.cx);
  CHECK(back.cy == K.cy);
}

TEST_CASE("annotations round trip losslessly") {
  const std::string path = "/tmp/pedloc_test_ann.jsonl";
  Rng rng(7);
  std::vector<AnnotationRecord> records;
  for (int i = 0; i < 1000; ++i) records.push_back(random_record(rng, i));
  write_annotations(path, records);
  const auto back = read_annotations(path);
  REQUIRE(back.size() == records.size());
  for (size_t i = 0; i < records.size(); ++i) {
    CHECK(back[i].id == records[i].id);
    CHECK(back[i].image_id == records[i].image_id);
    for (int k = 0; k < kNumJoints; ++k) {
      CHECK(back[i].kp.joints[k].u == records[i].kp.joints[k].u);
      CHECK(back[i].kp.joints[k].v == records[i].kp.joints[k].v);
      CHECK(back[i].kp.joints[k].conf == records[i].kp.joints[k].conf);
    }
    CHECK(back[i].K_row_major == records[i].K_row_major);
    CHECK(back[i].gt.has_value() == records[i].gt.has_value());
    if (back[i].gt) {
      CHECK(back[i].gt->D.x == records[i].gt->D.x);
      CHECK(back[i].gt->h_gt_cm == records[i].gt->h_gt_cm);
      CHECK(back[i].gt->occlusion == records[i].gt->occlusion);
      CHECK(back[i].gt->truncation == records[i].gt->truncation);
    }
  }

  // canonical form reproduces byte-for-byte
  const std::string first = slurp(path);
  write_annotations(path, back);
  CHECK(slurp(path) == first);
}

TEST_CASE("truncated annotation files fail cleanly") {
  const std::string path = "/tmp/pedloc_test_trunc.jsonl";
  Rng rng(9);
  write_annotations(path, std::vector<AnnotationRecord>{random_record(rng, 0)});
  std::string text = slurp(path);
  spit(path, text.substr(0, text.size() / 2));
  CHECK_THROWS_AS(read_annotations(path), ParseError);
}

TEST_CASE("schema violations list every offending field") {
  const std::string path = "/tmp/pedloc_test_schema.jsonl";
  spit(path, R"({"v":1,"id":0,"image_id":0,"bbox":[1,2],"K":[1,2,3]})"
             "\n");
  try {
    read_annotations(path);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("joints") != std::string::npos);
    CHECK(msg.find("bbox") != std::string::npos);
    CHECK(msg.find("'K'") != std::string::npos);
    CHECK(e.line() == 1);
  }
}

TEST_CASE("missing files raise io errors") {
  CHECK_THROWS_AS(read_annotations("/tmp/definitely_missing_pedloc.jsonl"), IoError);
  CHECK_THROWS_AS(read_checkpoint("/tmp/definitely_missing_pedloc.ckpt"), IoError);
}

TEST_CASE("checkpoint round trip is byte-identical and reproduces outputs") {
  const std::string path = "/tmp/pedloc_test_ckpt.json";
  Checkpoint ckpt;
  ckpt.model = LocModel::init({34, 16, 2, 0.2}, 11);
  ckpt.model.trained = true;
  // make running stats non-trivial
  ckpt.model.input_bn.running_mean.setConstant(0.25);
  ckpt.model.input_bn.running_var.setConstant(1.75);
  ckpt.train_cfg.arch = ckpt.model.cfg;
  ckpt.train_cfg.seed = 42;
  SegmentStats stats;
  stats.segments[1] = {0.505, 0.013, 600};
  stats.selected = SegmentId::kShoulderHip;
  ckpt.segment_stats = stats;
  ckpt.train_seed = 42;
  ckpt.data_source = "unit-test";
  write_checkpoint(path, ckpt);

  const Checkpoint back = read_checkpoint(path);
  CHECK(back.model.cfg.hidden == 16);
  CHECK(back.model.trained);
  CHECK(back.segment_stats.has_value());
  CHECK(back.segment_stats->segments[1].mean_m == 0.505);
  CHECK(back.train_seed == 42);

  const std::string first = slurp(path);
  write_checkpoint(path, back);
  CHECK(slurp(path) == first);

  // bitwise identical eval outputs
  std::array<double, 34> input{};
  for (int i = 0; i < 34; ++i) input[i] = 0.01 * i;
  const PredictionHead a = forward_single(ckpt.model, input, ForwardMode::kEval, nullptr);
  const PredictionHead b = forward_single(back.model, input, ForwardMode::kEval, nullptr);
  CHECK(a.mu == b.mu);
  CHECK(a.s == b.s);
}

TEST_CASE("checkpoint version mismatch is rejected") {
  const std::string path = "/tmp/pedloc_test_ckpt_v2.json";
  Checkpoint ckpt;
  ckpt.model = LocModel::init({34, 8, 1, 0.0}, 1);
  ckpt.train_cfg.arch = ckpt.model.cfg;
  write_checkpoint(path, ckpt);
  std::string text = slurp(path);
  const auto pos = text.find("\"format_version\":1");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, 18, "\"format_version\":2");
  spit(path, text);
  CHECK_THROWS_AS(read_checkpoint(path), Error);
}

TEST_CASE("prediction records round trip") {
  const std::string path = "/tmp/pedloc_test_preds.jsonl";
  std::vector<PredictionRecord> preds;
  Rng rng(13);
  for (int i = 0; i < 100; ++i) {
    PredictionRecord p;
    p.id = i;
    p.bbox = {1.0 * i, 2.0, 1.0 * i + 40.0, 120.0};
    p.est.mu = rng.uniform(5.0, 40.0);
    p.est.b = rng.uniform(0.1, 2.0);
    p.est.sigma = p.est.b * 1.3;
    p.est.interval = {p.est.mu - p.est.sigma, p.est.mu + p.est.sigma};
    p.est.aleatoric_interval = {p.est.mu - p.est.b, p.est.mu + p.est.b};
    p.est.point = {0.1 * i, -0.5, p.est.mu};
    preds.push_back(p);
  }
  write_predictions(path, preds);
  const auto back = read_predictions(path);
  REQUIRE(back.size() == preds.size());
  for (size_t i = 0; i < preds.size(); ++i) {
    CHECK(back[i].id == preds[i].id);
    CHECK(back[i].est.mu == preds[i].est.mu);
    CHECK(back[i].est.sigma == preds[i].est.sigma);
    CHECK(back[i].est.interval == preds[i].est.interval);
    CHECK(back[i].est.point.z == preds[i].est.point.z);
  }
  const std::string first = slurp(path);
  write_predictions(path, back);
  CHECK(slurp(path) == first);
}

TEST_CASE("csv writer emits a version line and rows") {
  const std::string path = "/tmp/pedloc_test_csv.csv";
  const std::vector<std::string> header{"a", "b"};
  write_csv(path, "unit", header, {{"1", "2"}, {format_double(0.1), format_double(10.0)}});
  const std::string text = slurp(path);
  CHECK(text.find("# pedloc unit v1\n") == 0);
  CHECK(text.find("a,b\n") != std::string::npos);
  CHECK(text.find("0.1,10\n") != std::string::npos);
}

TEST_CASE("format_double survives a parse round trip") {
  Rng rng(17);
  for (int i = 0; i < 1000; ++i) {
    const double x = rng.normal() * std::pow(10.0, rng.uniform(-8.0, 8.0));
    CHECK(std::stod(format_double(x)) == x);
  }
}

TEST_CASE("unwritable paths raise io errors") {
  CHECK_THROWS_AS(write_annotations("/nonexistent_dir_pedloc/x.jsonl", {}), IoError);
}
