#include "pedloc/dataio.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "pedloc/errors.hpp"

namespace pedloc {

using nlohmann::json;

namespace {

// Writes the whole payload under an exclusive flock on the target path.
void write_locked(const std::string& path, const std::string& payload) {
  const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  if (fd < 0) throw IoError("cannot open '" + path + "' for writing");
  if (::flock(fd, LOCK_EX) != 0) {
    ::close(fd);
    throw IoError("cannot lock '" + path + "' for writing");
  }
  size_t off = 0;
  while (off < payload.size()) {
    const ssize_t n = ::write(fd, payload.data() + off, payload.size() - off);
    if (n < 0) {
      ::flock(fd, LOCK_UN);
      ::close(fd);
      throw IoError("write failed on '" + path + "'");
    }
    off += static_cast<size_t>(n);
  }
  ::flock(fd, LOCK_UN);
  ::close(fd);
}

std::string read_whole_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Collects all schema complaints for one record so the error names every
// offending field at once.
class FieldChecker {
 public:
  explicit FieldChecker(const json& j) : j_(j) {}

  const json* require(const std::string& key, const char* type_desc, bool (json::*is_type)() const) {
    if (!j_.contains(key)) {
      issues_.push_back("missing field '" + key + "'");
      return nullptr;
    }
    const json& v = j_.at(key);
    if (!(v.*is_type)()) {
      issues_.push_back("field '" + key + "' is not " + std::string(type_desc));
      return nullptr;
    }
    return &v;
  }

  void complain(const std::string& msg) { issues_.push_back(msg); }
  bool ok() const { return issues_.empty(); }
  std::string summary() const {
    std::string s;
    for (size_t i = 0; i < issues_.size(); ++i) {
      if (i) s += "; ";
      s += issues_[i];
    }
    return s;
  }

 private:
  const json& j_;
  std::vector<std::string> issues_;
};

json annotation_to_json(const AnnotationRecord& rec) {
  json j;
  j["v"] = 1;
  j["id"] = rec.id;
  j["image_id"] = rec.image_id;
  json joints = json::array();
  for (const auto& jt : rec.kp.joints) joints.push_back({jt.u, jt.v, jt.conf});
  j["joints"] = joints;
  j["bbox"] = {rec.kp.bbox.u_min, rec.kp.bbox.v_min, rec.kp.bbox.u_max, rec.kp.bbox.v_max};
  j["K"] = rec.K_row_major;
  if (rec.gt) {
    j["gt"] = {{"D", {rec.gt->D.x, rec.gt->D.y, rec.gt->D.z}},
               {"h_cm", rec.gt->h_gt_cm},
               {"occlusion", rec.gt->occlusion},
               {"truncation", rec.gt->truncation}};
  }
  return j;
}

AnnotationRecord annotation_from_json(const json& j, int line) {
  FieldChecker check(j);
  AnnotationRecord rec;

  if (const json* v = check.require("v", "an integer", &json::is_number_integer)) {
    if (v->get<int>() != 1) check.complain("unsupported record version " + v->dump());
  }
  if (const json* v = check.require("id", "an integer", &json::is_number_integer)) {
    rec.id = v->get<int>();
  }
  if (const json* v = check.require("image_id", "an integer", &json::is_number_integer)) {
    rec.image_id = v->get<int>();
  }
  if (const json* v = check.require("joints", "an array", &json::is_array)) {
    if (v->size() != kNumJoints) {
      check.complain("field 'joints' must hold exactly 17 entries, got " +
                     std::to_string(v->size()));
    } else {
      for (int i = 0; i < kNumJoints; ++i) {
        const json& e = (*v)[i];
        if (!e.is_array() || e.size() != 3 || !e[0].is_number() || !e[1].is_number() ||
            !e[2].is_number()) {
          check.complain("joint " + std::to_string(i) + " must be [u, v, conf]");
          continue;
        }
        rec.kp.joints[i] = {e[0].get<double>(), e[1].get<double>(), e[2].get<double>()};
      }
    }
  }
  if (const json* v = check.require("bbox", "an array", &json::is_array)) {
    if (v->size() != 4 || !(*v)[0].is_number() || !(*v)[1].is_number() || !(*v)[2].is_number() ||
        !(*v)[3].is_number()) {
      check.complain("field 'bbox' must be [u_min, v_min, u_max, v_max]");
    } else {
      rec.kp.bbox = {(*v)[0].get<double>(), (*v)[1].get<double>(), (*v)[2].get<double>(),
                     (*v)[3].get<double>()};
    }
  }
  if (const json* v = check.require("K", "an array", &json::is_array)) {
    if (v->size() != 9) {
      check.complain("field 'K' must hold 9 row-major values");
    } else {
      for (int i = 0; i < 9; ++i) {
        if (!(*v)[i].is_number()) {
          check.complain("field 'K' must hold 9 numbers");
          break;
        }
        rec.K_row_major[i] = (*v)[i].get<double>();
      }
    }
  }
  if (j.contains("gt")) {
    const json& g = j.at("gt");
    if (!g.is_object()) {
      check.complain("field 'gt' is not an object");
    } else {
      GtInfo gt;
      if (!g.contains("D") || !g["D"].is_array() || g["D"].size() != 3) {
        check.complain("field 'gt.D' must be [x, y, z]");
      } else {
        gt.D = {g["D"][0].get<double>(), g["D"][1].get<double>(), g["D"][2].get<double>()};
      }
      if (!g.contains("h_cm") || !g["h_cm"].is_number()) {
        check.complain("field 'gt.h_cm' must be a number");
      } else {
        gt.h_gt_cm = g["h_cm"].get<double>();
      }
      gt.occlusion = g.value("occlusion", -1);
      gt.truncation = g.value("truncation", 0.0);
      rec.gt = gt;
    }
  }

  if (!check.ok()) {
    throw ParseError("annotation record invalid: " + check.summary(), line);
  }
  return rec;
}

}  // namespace

std::vector<AnnotationRecord> read_annotations(const std::string& path) {
  const std::string text = read_whole_file(path);
  std::vector<AnnotationRecord> records;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(std::string("bad JSON: ") + e.what(), line_no);
    }
    records.push_back(annotation_from_json(j, line_no));
  }
  return records;
}

void write_annotations(const std::string& path, std::span<const AnnotationRecord> records) {
  std::string out;
  for (const auto& rec : records) {
    out += annotation_to_json(rec).dump();
    out += '\n';
  }
  write_locked(path, out);
}

std::vector<TrainSample> to_train_samples(std::span<const AnnotationRecord> records,
                                          CenterMode mode) {
  std::vector<TrainSample> samples;
  samples.reserve(records.size());
  for (const auto& rec : records) {
    if (!rec.gt) {
      throw ValidationError("record " + std::to_string(rec.id) +
                            " has no ground truth; cannot build a training sample");
    }
    const NormalizedInput in = normalize_keypoints(rec.intrinsics(), rec.kp, mode);
    TrainSample s;
    s.input = in.coords;
    s.target_d = rec.gt->D.norm();
    samples.push_back(s);
  }
  return samples;
}

std::vector<LabeledPose> to_labeled_poses(std::span<const AnnotationRecord> records) {
  std::vector<LabeledPose> poses;
  poses.reserve(records.size());
  for (const auto& rec : records) {
    if (!rec.gt) {
      throw ValidationError("record " + std::to_string(rec.id) +
                            " has no ground truth; cannot use it for segment fitting");
    }
    poses.push_back({rec.kp, rec.gt->D, rec.intrinsics()});
  }
  return poses;
}

CameraIntrinsics parse_kitti_calib(const std::string& text, const std::string& key) {
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
    throw ParseError("empty calibration text");
  }
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    if (tag != key + ":" && tag != key) continue;
    std::vector<double> vals;
    double x;
    while (ls >> x) vals.push_back(x);
    if (vals.size() != 12) {
      throw ParseError("calibration row '" + key + "' must hold 12 values, got " +
                       std::to_string(vals.size()),
                       line_no);
    }
    CameraIntrinsics K;
    K.fx = vals[0];
    K.skew = vals[1];
    K.cx = vals[2];
    K.fy = vals[5];
    K.cy = vals[6];
    K.validate();
    return K;
  }
  throw ParseError("no '" + key + ":' row found in calibration text");
}

CameraIntrinsics read_kitti_calib_file(const std::string& path, const std::string& key) {
  return parse_kitti_calib(read_whole_file(path), key);
}

std::string format_kitti_calib(const CameraIntrinsics& K, const std::string& key) {
  const std::array<double, 12> p{K.fx, K.skew, K.cx, 0.0, 0.0, K.fy,
                                 K.cy, 0.0,    0.0,  0.0, 1.0, 0.0};
  std::string out = key + ":";
  for (const double v : p) {
    out += ' ';
    out += format_double(v);
  }
  return out;
}

std::string format_double(double value) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

// --------------------------------------------------------------------------
// Checkpoints.

namespace {

json segment_stats_to_json(const SegmentStats& st) {
  json j;
  j["selected"] = static_cast<int>(st.selected);
  json rows = json::array();
  for (const auto& row : st.segments) {
    rows.push_back({{"mean_m", row.mean_m}, {"std_m", row.std_m}, {"count", row.count}});
  }
  j["segments"] = rows;
  return j;
}

SegmentStats segment_stats_from_json(const json& j) {
  SegmentStats st;
  st.selected = static_cast<SegmentId>(j.at("selected").get<int>());
  const json& rows = j.at("segments");
  if (!rows.is_array() || rows.size() != 3) {
    throw ParseError("checkpoint: segment stats must hold 3 rows");
  }
  for (int s = 0; s < 3; ++s) {
    st.segments[s].mean_m = rows[s].at("mean_m").get<double>();
    st.segments[s].std_m = rows[s].at("std_m").get<double>();
    st.segments[s].count = rows[s].at("count").get<int64_t>();
  }
  return st;
}

json vector_to_json(const double* data, int64_t size) {
  json arr = json::array();
  for (int64_t i = 0; i < size; ++i) arr.push_back(data[i]);
  return arr;
}

void vector_from_json(const json& arr, double* data, int64_t size, const std::string& name) {
  if (!arr.is_array() || static_cast<int64_t>(arr.size()) != size) {
    throw ParseError("checkpoint: parameter '" + name + "' has wrong length");
  }
  for (int64_t i = 0; i < size; ++i) data[i] = arr[i].get<double>();
}

}  // namespace

void write_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  json j;
  j["kind"] = "pedloc-checkpoint";
  j["format_version"] = ckpt.format_version;
  j["arch"] = {{"input_dim", ckpt.model.cfg.input_dim},
               {"hidden", ckpt.model.cfg.hidden},
               {"num_blocks", ckpt.model.cfg.num_blocks},
               {"p_drop", ckpt.model.cfg.p_drop}};
  j["model_version"] = ckpt.model.version;
  j["trained"] = ckpt.model.trained;

  auto& model = const_cast<LocModel&>(ckpt.model);
  json params;
  for (const auto& view : param_views(model)) {
    params[view.name] = vector_to_json(view.data, view.size);
  }
  j["params"] = params;

  json running;
  auto dump_bn = [&running](const std::string& name, const BatchNormLayer& bn) {
    running[name + ".mean"] = vector_to_json(bn.running_mean.data(), bn.running_mean.size());
    running[name + ".var"] = vector_to_json(bn.running_var.data(), bn.running_var.size());
  };
  dump_bn("input_bn", ckpt.model.input_bn);
  for (size_t l = 0; l < ckpt.model.block_bns.size(); ++l) {
    dump_bn("block" + std::to_string(l) + "_bn", ckpt.model.block_bns[l]);
  }
  j["bn_running"] = running;

  j["train_config"] = {{"lr", ckpt.train_cfg.lr},
                       {"batch", ckpt.train_cfg.batch_size},
                       {"epochs", ckpt.train_cfg.epochs},
                       {"loss", loss_name(ckpt.train_cfg.loss)},
                       {"seed", ckpt.train_cfg.seed},
                       {"bn_momentum", ckpt.train_cfg.bn_momentum},
                       {"weight_decay", ckpt.train_cfg.weight_decay},
                       {"adam_beta1", ckpt.train_cfg.adam.beta1},
                       {"adam_beta2", ckpt.train_cfg.adam.beta2},
                       {"adam_eps", ckpt.train_cfg.adam.eps}};
  if (ckpt.segment_stats) j["segment_stats"] = segment_stats_to_json(*ckpt.segment_stats);
  j["seed_provenance"] = {{"train_seed", ckpt.train_seed}, {"data_source", ckpt.data_source}};

  write_locked(path, j.dump() + "\n");
}

Checkpoint read_checkpoint(const std::string& path) {
  const std::string text = read_whole_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("checkpoint is not valid JSON: ") + e.what());
  }

  if (j.value("kind", "") != "pedloc-checkpoint") {
    throw ParseError("not a pedloc checkpoint file");
  }
  Checkpoint ckpt;
  ckpt.format_version = j.value("format_version", -1);
  if (ckpt.format_version != 1) {
    throw Error("checkpoint format version " + std::to_string(ckpt.format_version) +
                " not supported (expected 1)");
  }

  const json& arch = j.at("arch");
  LocModelConfig cfg;
  cfg.input_dim = arch.at("input_dim").get<int>();
  cfg.hidden = arch.at("hidden").get<int>();
  cfg.num_blocks = arch.at("num_blocks").get<int>();
  cfg.p_drop = arch.at("p_drop").get<double>();
  ckpt.model = LocModel::init(cfg, 0);
  ckpt.model.version = j.value("model_version", 1);
  ckpt.model.trained = j.value("trained", false);

  const json& params = j.at("params");
  for (const auto& view : param_views(ckpt.model)) {
    if (!params.contains(view.name)) {
      throw ParseError("checkpoint: missing parameter '" + view.name + "'");
    }
    vector_from_json(params.at(view.name), view.data, view.size, view.name);
  }

  const json& running = j.at("bn_running");
  auto load_bn = [&running](const std::string& name, BatchNormLayer& bn) {
    vector_from_json(running.at(name + ".mean"), bn.running_mean.data(), bn.running_mean.size(),
                     name + ".mean");
    vector_from_json(running.at(name + ".var"), bn.running_var.data(), bn.running_var.size(),
                     name + ".var");
  };
  load_bn("input_bn", ckpt.model.input_bn);
  for (size_t l = 0; l < ckpt.model.block_bns.size(); ++l) {
    load_bn("block" + std::to_string(l) + "_bn", ckpt.model.block_bns[l]);
  }

  const json& tc = j.at("train_config");
  ckpt.train_cfg.arch = cfg;
  ckpt.train_cfg.lr = tc.at("lr").get<double>();
  ckpt.train_cfg.batch_size = tc.at("batch").get<int>();
  ckpt.train_cfg.epochs = tc.at("epochs").get<int>();
  ckpt.train_cfg.loss = loss_from_name(tc.at("loss").get<std::string>());
  ckpt.train_cfg.seed = tc.at("seed").get<uint64_t>();
  ckpt.train_cfg.bn_momentum = tc.at("bn_momentum").get<double>();
  ckpt.train_cfg.weight_decay = tc.at("weight_decay").get<bool>();
  ckpt.train_cfg.adam.beta1 = tc.at("adam_beta1").get<double>();
  ckpt.train_cfg.adam.beta2 = tc.at("adam_beta2").get<double>();
  ckpt.train_cfg.adam.eps = tc.at("adam_eps").get<double>();

  if (j.contains("segment_stats")) {
    ckpt.segment_stats = segment_stats_from_json(j.at("segment_stats"));
  }
  const json& prov = j.at("seed_provenance");
  ckpt.train_seed = prov.at("train_seed").get<uint64_t>();
  ckpt.data_source = prov.value("data_source", "");

  ckpt.model.validate();
  return ckpt;
}

// --------------------------------------------------------------------------
// Predictions.

std::vector<PredictionRecord> read_predictions(const std::string& path) {
  const std::string text = read_whole_file(path);
  std::vector<PredictionRecord> records;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(std::string("bad JSON: ") + e.what(), line_no);
    }
    FieldChecker check(j);
    PredictionRecord rec;
    if (const json* v = check.require("v", "an integer", &json::is_number_integer)) {
      if (v->get<int>() != 1) check.complain("unsupported record version");
    }
    if (const json* v = check.require("id", "an integer", &json::is_number_integer)) {
      rec.id = v->get<int>();
    }
    if (const json* v = check.require("bbox", "an array", &json::is_array)) {
      if (v->size() != 4) {
        check.complain("field 'bbox' must be [u_min, v_min, u_max, v_max]");
      } else {
        rec.bbox = {(*v)[0].get<double>(), (*v)[1].get<double>(), (*v)[2].get<double>(),
                    (*v)[3].get<double>()};
      }
    }
    auto num = [&](const char* name, double& out) {
      if (const json* v = check.require(name, "a number", &json::is_number)) out = v->get<double>();
    };
    num("mu", rec.est.mu);
    num("b", rec.est.b);
    num("sigma", rec.est.sigma);
    if (const json* v = check.require("interval", "an array", &json::is_array)) {
      if (v->size() == 2) rec.est.interval = {(*v)[0].get<double>(), (*v)[1].get<double>()};
      else check.complain("field 'interval' must be [lo, hi]");
    }
    if (const json* v = check.require("aleatoric_interval", "an array", &json::is_array)) {
      if (v->size() == 2) {
        rec.est.aleatoric_interval = {(*v)[0].get<double>(), (*v)[1].get<double>()};
      } else {
        check.complain("field 'aleatoric_interval' must be [lo, hi]");
      }
    }
    if (const json* v = check.require("point", "an array", &json::is_array)) {
      if (v->size() == 3) {
        rec.est.point = {(*v)[0].get<double>(), (*v)[1].get<double>(), (*v)[2].get<double>()};
      } else {
        check.complain("field 'point' must be [x, y, z]");
      }
    }
    if (!check.ok()) throw ParseError("prediction record invalid: " + check.summary(), line_no);
    records.push_back(rec);
  }
  return records;
}

void write_predictions(const std::string& path, std::span<const PredictionRecord> records) {
  std::string out;
  for (const auto& rec : records) {
    json j;
    j["v"] = 1;
    j["id"] = rec.id;
    j["bbox"] = {rec.bbox.u_min, rec.bbox.v_min, rec.bbox.u_max, rec.bbox.v_max};
    j["mu"] = rec.est.mu;
    j["b"] = rec.est.b;
    j["sigma"] = rec.est.sigma;
    j["interval"] = {rec.est.interval.first, rec.est.interval.second};
    j["aleatoric_interval"] = {rec.est.aleatoric_interval.first,
                               rec.est.aleatoric_interval.second};
    j["point"] = {rec.est.point.x, rec.est.point.y, rec.est.point.z};
    out += j.dump();
    out += '\n';
  }
  write_locked(path, out);
}

void write_csv(const std::string& path, const std::string& kind,
               std::span<const std::string> header,
               const std::vector<std::vector<std::string>>& rows) {
  std::string out = "# pedloc " + kind + " v1\n";
  for (size_t i = 0; i < header.size(); ++i) {
    if (i) out += ',';
    out += header[i];
  }
  out += '\n';
  for (const auto& row : rows) {
    if (row.size() != header.size()) {
      throw ValidationError("csv row width does not match header");
    }
    for (size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += row[i];
    }
    out += '\n';
  }
  write_locked(path, out);
}

}  // namespace pedloc
