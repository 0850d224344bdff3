#include "hamos/data.hpp"

#include <cstring>
#include <fstream>
#include <functional>
#include <sstream>

#include "json.hpp"

namespace hamos {

using json = nlohmann::json;

namespace {

void expect_keys(const json& obj, const std::vector<std::string>& required,
                 const std::vector<std::string>& optional,
                 const std::string& where) {
  if (!obj.is_object())
    throw SchemaViolation(where + ": expected a JSON object");
  for (const auto& k : required)
    if (!obj.contains(k))
      throw SchemaViolation(where + ": missing key '" + k + "'");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    const std::string& k = it.key();
    bool known = false;
    for (const auto& r : required) known = known || k == r;
    for (const auto& o : optional) known = known || k == o;
    if (!known) throw SchemaViolation(where + ": unknown key '" + k + "'");
  }
}

json rot6_to_json(const Mat3& r) {
  const Rot6 u = rot_to_6d(r);
  json a = json::array();
  for (int i = 0; i < 6; ++i) a.push_back(u[i]);
  return a;
}

Mat3 rot6_from_json(const json& a, const std::string& where) {
  if (!a.is_array() || a.size() != 6)
    throw SchemaViolation(where + ": expected a 6-element rotation encoding");
  Rot6 u;
  for (int i = 0; i < 6; ++i) u[i] = a[i].get<double>();
  if (!u.allFinite() || u.head<3>().norm() < 1e-8)
    throw DecodeError(where + ": degenerate rotation encoding");
  const Mat3 r = rot_from_6d(u);
  if (!is_rotation(r, 1e-6))
    throw DecodeError(where + ": encoding does not decode to a rotation");
  return r;
}

json vec3_to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec3_from_json(const json& a, const std::string& where) {
  if (!a.is_array() || a.size() != 3)
    throw SchemaViolation(where + ": expected a 3-vector");
  return Vec3(a[0].get<double>(), a[1].get<double>(), a[2].get<double>());
}

json transform_to_json(const RigidTransform& t) {
  return json{{"R", rot6_to_json(t.R)}, {"t", vec3_to_json(t.t)}};
}

RigidTransform transform_from_json(const json& obj, const std::string& where) {
  expect_keys(obj, {"R", "t"}, {}, where);
  return {rot6_from_json(obj["R"], where), vec3_from_json(obj["t"], where)};
}

}  // namespace

std::string motion_record_to_json(const MotionRecord& record) {
  const int T = record.frames();
  json j;
  j["id"] = record.id;
  j["fps"] = record.fps;
  j["T"] = T;
  json beta = json::array();
  for (int i = 0; i < kShapeDim; ++i) beta.push_back(record.motion.shape.beta[i]);
  j["beta"] = beta;
  json root_t = json::array(), root_r = json::array(), joints = json::array();
  json contacts = json::array();
  for (int t = 0; t < T; ++t) {
    root_t.push_back(vec3_to_json(record.motion.root_translation[t]));
    root_r.push_back(rot6_to_json(record.motion.root_orientation[t]));
    json row = json::array();
    for (const Mat3& r : record.motion.joint_angles[t])
      row.push_back(rot6_to_json(r));
    joints.push_back(row);
    contacts.push_back(json::array({record.contacts(t, 0), record.contacts(t, 1)}));
  }
  j["root_t"] = root_t;
  j["root_R"] = root_r;
  j["joints"] = joints;
  j["contacts"] = contacts;
  if (record.has_observations()) {
    json head = json::array();
    for (const RigidTransform& h : record.head) head.push_back(transform_to_json(h));
    j["head_T"] = head;
    json hands = json::array();
    for (size_t t = 0; t < record.head.size(); ++t) {
      json pair = json::array();
      for (int h = 0; h < 2; ++h) {
        json o = transform_to_json(record.hands[h][t].pose);
        o["v"] = record.hands[h][t].visible;
        pair.push_back(o);
      }
      hands.push_back(pair);
    }
    j["hands"] = hands;
  }
  return j.dump();
}

MotionRecord motion_record_from_json(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw SchemaViolation(std::string("invalid JSON: ") + e.what());
  }
  expect_keys(j, {"id", "fps", "T", "beta", "root_t", "root_R", "joints",
                  "contacts"},
              {"head_T", "hands"}, "record");
  MotionRecord rec;
  rec.id = j["id"].get<std::string>();
  rec.fps = j["fps"].get<double>();
  const int T = j["T"].get<int>();
  if (T < 1) throw SchemaViolation("record: T must be >= 1");
  if (j["beta"].size() != kShapeDim)
    throw SchemaViolation("record: beta must have 16 entries");
  for (int i = 0; i < kShapeDim; ++i)
    rec.motion.shape.beta[i] = j["beta"][i].get<double>();

  auto check_len = [&](const json& a, size_t n, const std::string& name) {
    if (!a.is_array() || a.size() != n)
      throw SchemaViolation("record: '" + name + "' length does not match T");
  };
  check_len(j["root_t"], T, "root_t");
  check_len(j["root_R"], T, "root_R");
  check_len(j["joints"], T, "joints");
  check_len(j["contacts"], T, "contacts");

  rec.contacts.resize(T, 2);
  for (int t = 0; t < T; ++t) {
    rec.motion.root_translation.push_back(
        vec3_from_json(j["root_t"][t], "root_t"));
    rec.motion.root_orientation.push_back(
        rot6_from_json(j["root_R"][t], "root_R"));
    const json& row = j["joints"][t];
    if (!row.is_array() || row.size() != kNumJoints - 1)
      throw SchemaViolation("record: joints rows must have J-1 entries");
    std::vector<Mat3> angles;
    for (const auto& a : row) angles.push_back(rot6_from_json(a, "joints"));
    rec.motion.joint_angles.push_back(std::move(angles));
    const json& c = j["contacts"][t];
    if (!c.is_array() || c.size() != 2)
      throw SchemaViolation("record: contacts rows must have 2 entries");
    rec.contacts(t, 0) = c[0].get<int>();
    rec.contacts(t, 1) = c[1].get<int>();
  }

  if (j.contains("head_T") != j.contains("hands"))
    throw SchemaViolation("record: head_T and hands must appear together");
  if (j.contains("head_T")) {
    check_len(j["head_T"], T + 1, "head_T");
    check_len(j["hands"], T + 1, "hands");
    for (const auto& h : j["head_T"])
      rec.head.push_back(transform_from_json(h, "head_T"));
    for (int h = 0; h < 2; ++h) rec.hands[h].resize(T + 1);
    for (int t = 0; t <= T; ++t) {
      const json& pair = j["hands"][t];
      if (!pair.is_array() || pair.size() != 2)
        throw SchemaViolation("record: hands rows must have 2 entries");
      for (int h = 0; h < 2; ++h) {
        expect_keys(pair[h], {"R", "t", "v"}, {}, "hands");
        rec.hands[h][t].pose = {rot6_from_json(pair[h]["R"], "hands"),
                                vec3_from_json(pair[h]["t"], "hands")};
        rec.hands[h][t].visible = pair[h]["v"].get<bool>();
      }
    }
  }
  return rec;
}

LoadReport load_motion_records(const std::string& path, bool strict) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  LoadReport report;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      report.records.push_back(motion_record_from_json(line));
    } catch (const Error& e) {
      if (strict) throw;
      report.errors.push_back("line " + std::to_string(line_no) + ": " +
                              e.what());
    }
  }
  return report;
}

void save_motion_records(const std::string& path,
                         const std::vector<MotionRecord>& records) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  for (const MotionRecord& r : records) out << motion_record_to_json(r) << "\n";
}

std::string RunConfig::to_json() const {
  json j;
  j["model"] = {{"model_dim", model.model_dim},
                {"heads", model.heads},
                {"trunk_layers", model.trunk_layers},
                {"local_layers", model.local_layers},
                {"dec_layers", model.dec_layers},
                {"window", model.window},
                {"mlp_mult", model.mlp_mult}};
  j["schedule_steps"] = schedule_steps;
  j["train"] = {{"lr", train.lr},
                {"weight_decay", train.weight_decay},
                {"ema_rate", train.ema_rate}};
  j["loss"] = {{"shape", loss.shape},
               {"pos", loss.pos},
               {"skat", loss.skat},
               {"guidance_scale", loss.guidance_scale}};
  j["augment"] = {{"fov_preset", augment.fov_preset},
                  {"rho_short_max", augment.rho_short_max},
                  {"rho_long_max", augment.rho_long_max}};
  j["batch_size"] = batch_size;
  j["train_steps"] = train_steps;
  j["max_seq_len"] = max_seq_len;
  j["sample_steps"] = sample_steps;
  j["seed"] = seed;
  return j.dump(2);
}

RunConfig RunConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw SchemaViolation(std::string("invalid config JSON: ") + e.what());
  }
  RunConfig cfg;
  expect_keys(j, {},
              {"model", "schedule_steps", "train", "loss", "augment",
               "batch_size", "train_steps", "max_seq_len", "sample_steps",
               "seed"},
              "config");
  if (j.contains("model")) {
    const json& m = j["model"];
    expect_keys(m, {},
                {"model_dim", "heads", "trunk_layers", "local_layers",
                 "dec_layers", "window", "mlp_mult"},
                "config.model");
    cfg.model.model_dim = m.value("model_dim", cfg.model.model_dim);
    cfg.model.heads = m.value("heads", cfg.model.heads);
    cfg.model.trunk_layers = m.value("trunk_layers", cfg.model.trunk_layers);
    cfg.model.local_layers = m.value("local_layers", cfg.model.local_layers);
    cfg.model.dec_layers = m.value("dec_layers", cfg.model.dec_layers);
    cfg.model.window = m.value("window", cfg.model.window);
    cfg.model.mlp_mult = m.value("mlp_mult", cfg.model.mlp_mult);
    if (cfg.model.window < 1)
      throw SchemaViolation("config.model.window must be >= 1");
    if (cfg.model.model_dim % (2 * cfg.model.heads) != 0)
      throw SchemaViolation(
          "config.model.model_dim must be divisible by 2*heads");
  }
  cfg.schedule_steps = j.value("schedule_steps", cfg.schedule_steps);
  if (cfg.schedule_steps < 1)
    throw SchemaViolation("config.schedule_steps must be >= 1");
  if (j.contains("train")) {
    const json& t = j["train"];
    expect_keys(t, {}, {"lr", "weight_decay", "ema_rate"}, "config.train");
    cfg.train.lr = t.value("lr", cfg.train.lr);
    cfg.train.weight_decay = t.value("weight_decay", cfg.train.weight_decay);
    cfg.train.ema_rate = t.value("ema_rate", cfg.train.ema_rate);
  }
  if (j.contains("loss")) {
    const json& l = j["loss"];
    expect_keys(l, {}, {"shape", "pos", "skat", "guidance_scale"},
                "config.loss");
    cfg.loss.shape = l.value("shape", cfg.loss.shape);
    cfg.loss.pos = l.value("pos", cfg.loss.pos);
    cfg.loss.skat = l.value("skat", cfg.loss.skat);
    cfg.loss.guidance_scale = l.value("guidance_scale", cfg.loss.guidance_scale);
  }
  if (j.contains("augment")) {
    const json& a = j["augment"];
    expect_keys(a, {}, {"fov_preset", "rho_short_max", "rho_long_max"},
                "config.augment");
    cfg.augment.fov_preset = a.value("fov_preset", cfg.augment.fov_preset);
    cfg.augment.rho_short_max =
        a.value("rho_short_max", cfg.augment.rho_short_max);
    cfg.augment.rho_long_max = a.value("rho_long_max", cfg.augment.rho_long_max);
    if (cfg.augment.fov_preset != "random" &&
        cfg.augment.fov_preset != "pinhole90" &&
        cfg.augment.fov_preset != "pinhole180")
      throw SchemaViolation("config.augment.fov_preset must be one of "
                            "random|pinhole90|pinhole180");
  }
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  cfg.train_steps = j.value("train_steps", cfg.train_steps);
  cfg.max_seq_len = j.value("max_seq_len", cfg.max_seq_len);
  cfg.sample_steps = j.value("sample_steps", cfg.sample_steps);
  cfg.seed = j.value("seed", cfg.seed);
  if (cfg.batch_size < 1) throw SchemaViolation("config.batch_size must be >= 1");
  if (cfg.max_seq_len < 2) throw SchemaViolation("config.max_seq_len must be >= 2");
  return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

std::string rng_to_string(const Rng& rng) {
  std::ostringstream ss;
  ss << rng;
  return ss.str();
}

Rng rng_from_string(const std::string& text) {
  Rng rng;
  std::istringstream ss(text);
  ss >> rng;
  if (ss.fail()) throw DecodeError("invalid RNG state string");
  return rng;
}

namespace {

constexpr char kCkptMagic[8] = {'H', 'A', 'M', 'O', 'S', 'C', 'K', '1'};

void write_mat(std::ofstream& out, const nn::Mat& m) {
  out.write(reinterpret_cast<const char*>(m.data()),
            std::streamsize(sizeof(double) * m.size()));
}

void read_mat(std::ifstream& in, nn::Mat& m) {
  in.read(reinterpret_cast<char*>(m.data()),
          std::streamsize(sizeof(double) * m.size()));
}

}  // namespace

void save_checkpoint(const std::string& path, const Model& model,
                     const RunConfig& config, long long steps,
                     const std::string& rng_state) {
  json header;
  header["version"] = 1;
  header["config"] = json::parse(config.to_json());
  header["config_hash"] = std::hash<std::string>{}(config.to_json());
  header["steps"] = steps;
  header["rng"] = rng_state;
  json params = json::array();
  for (const nn::Param* p : model.params().all())
    params.push_back({{"name", p->name},
                      {"rows", p->value.rows()},
                      {"cols", p->value.cols()}});
  header["params"] = params;
  const std::string head = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open checkpoint '" + path + "' for writing");
  out.write(kCkptMagic, 8);
  const std::uint64_t len = head.size();
  out.write(reinterpret_cast<const char*>(&len), 8);
  out.write(head.data(), std::streamsize(head.size()));
  for (const nn::Param* p : model.params().all()) {
    write_mat(out, p->value);
    write_mat(out, p->ema);
    write_mat(out, p->adam_m);
    write_mat(out, p->adam_v);
  }
  if (!out) throw Error("checkpoint write failed: '" + path + "'");
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint '" + path + "'");
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kCkptMagic, 8) != 0)
    throw DecodeError("not a checkpoint file: '" + path + "'");
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), 8);
  std::string head(len, '\0');
  in.read(head.data(), std::streamsize(len));
  if (!in) throw DecodeError("truncated checkpoint header");
  json header;
  try {
    header = json::parse(head);
  } catch (const json::exception& e) {
    throw DecodeError(std::string("invalid checkpoint header: ") + e.what());
  }
  if (header.value("version", 0) != 1)
    throw DecodeError("unsupported checkpoint version");

  LoadedCheckpoint ckpt;
  ckpt.config = RunConfig::from_json(header["config"].dump());
  ckpt.steps = header["steps"].get<long long>();
  ckpt.rng_state = header["rng"].get<std::string>();
  ckpt.model = std::make_unique<Model>(ckpt.config.model, /*init_seed=*/0);

  const json& params = header["params"];
  const auto& order = ckpt.model->params().all();
  if (params.size() != order.size())
    throw DecodeError("checkpoint parameter count mismatch");
  for (size_t i = 0; i < order.size(); ++i) {
    nn::Param* p = order[i];
    const json& meta = params[i];
    if (meta["name"].get<std::string>() != p->name ||
        meta["rows"].get<long>() != p->value.rows() ||
        meta["cols"].get<long>() != p->value.cols())
      throw DecodeError("checkpoint parameter layout mismatch at '" + p->name +
                        "'");
    read_mat(in, p->value);
    read_mat(in, p->ema);
    read_mat(in, p->adam_m);
    read_mat(in, p->adam_v);
  }
  if (!in) throw DecodeError("truncated checkpoint payload");
  return ckpt;
}

}  // namespace hamos
