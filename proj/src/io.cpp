#include "epcal/io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <system_error>

#include "json.hpp"

namespace epcal {

namespace {

using json = nlohmann::json;

// Typed field access with "source: path.to.field" context in every error.
class Reader {
 public:
  explicit Reader(std::string_view source) : source_(source) {}

  [[noreturn]] void schema(const std::string& ctx, const std::string& what) const {
    throw SchemaError(source_ + ": " + ctx + ": " + what);
  }
  [[noreturn]] void invalid(const std::string& ctx, const std::string& what) const {
    throw ValidationError(source_ + ": " + ctx + ": " + what);
  }

  const json& field(const json& obj, const char* key, const std::string& ctx) const {
    if (!obj.is_object()) schema(ctx, "expected an object");
    const auto it = obj.find(key);
    if (it == obj.end()) schema(ctx, std::string("missing field '") + key + "'");
    return *it;
  }

  double number(const json& v, const std::string& ctx) const {
    if (!v.is_number()) schema(ctx, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) invalid(ctx, "non-finite value");
    return x;
  }
  double number(const json& obj, const char* key, const std::string& ctx) const {
    return number(field(obj, key, ctx), ctx + "." + key);
  }

  int integer(const json& obj, const char* key, const std::string& ctx) const {
    const json& v = field(obj, key, ctx);
    if (!v.is_number_integer()) schema(ctx + "." + key, "expected an integer");
    const auto x = v.get<std::int64_t>();
    if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
      invalid(ctx + "." + key, "integer out of range");
    }
    return static_cast<int>(x);
  }

  bool boolean(const json& obj, const char* key, const std::string& ctx) const {
    const json& v = field(obj, key, ctx);
    if (!v.is_boolean()) schema(ctx + "." + key, "expected a boolean");
    return v.get<bool>();
  }

  const json& array(const json& obj, const char* key, const std::string& ctx) const {
    const json& v = field(obj, key, ctx);
    if (!v.is_array()) schema(ctx + "." + key, "expected an array");
    return v;
  }

  template <int N>
  Eigen::Matrix<double, N, 1> vec(const json& obj, const char* key, const std::string& ctx) const {
    const json& v = array(obj, key, ctx);
    const std::string path = ctx + "." + key;
    if (v.size() != static_cast<std::size_t>(N)) {
      schema(path, "expected " + std::to_string(N) + " numbers");
    }
    Eigen::Matrix<double, N, 1> out;
    for (int i = 0; i < N; ++i) {
      out[i] = number(v[static_cast<std::size_t>(i)], path + "[" + std::to_string(i) + "]");
    }
    return out;
  }

  const std::string& source() const { return source_; }

 private:
  std::string source_;
};

json parse_json(std::string_view text, std::string_view source) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::exception& e) {
    // Includes number overflow such as 1e400.
    throw ParseError(std::string(source) + ": " + e.what());
  }
}

void check_schema_version(const Reader& rd, const json& root) {
  const int version = rd.integer(root, "schema_version", "root");
  if (version != kSchemaVersion) {
    rd.schema("root.schema_version",
              "unsupported version " + std::to_string(version) + " (expected " +
                  std::to_string(kSchemaVersion) + ")");
  }
}

json vec_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

json poses_json(std::span<const Pose> poses) {
  json arr = json::array();
  for (const auto& p : poses) {
    arr.push_back({{"rotation", vec_json(p.rotation)}, {"translation", vec_json(p.translation)}});
  }
  return arr;
}

// Camera block shared by model files and dataset ground truth.
json camera_json(ModelKind kind, const CameraIntrinsics& k, const RadialDistortion& r,
                 const EntrancePupil& e, double theta_max_deg, std::span<const Pose> poses) {
  json j;
  j["kind"] = std::string(to_string(kind));
  j["intrinsics"] = {{"fx", k.fx}, {"fy", k.fy}, {"sk", k.sk}, {"u0", k.u0}, {"v0", k.v0}};
  j["radial"] = {{"k1", r.k1}, {"k2", r.k2}, {"k3", r.k3}, {"k4", r.k4}};
  j["ep"] = {{"e1", e.e1}, {"e2", e.e2}, {"e3", e.e3}, {"e4", e.e4}};
  j["theta_max_deg"] = theta_max_deg;
  j["poses"] = poses_json(poses);
  return j;
}

ModelFile read_camera(const Reader& rd, const json& obj, const std::string& ctx) {
  ModelFile m;
  const json& kind = rd.field(obj, "kind", ctx);
  if (!kind.is_string()) rd.schema(ctx + ".kind", "expected a string");
  try {
    m.kind = parse_model_kind(kind.get<std::string>());
  } catch (const InvalidArgument& e) {
    rd.schema(ctx + ".kind", e.what());
  }
  const json& k = rd.field(obj, "intrinsics", ctx);
  const std::string kc = ctx + ".intrinsics";
  m.intrinsics = {rd.number(k, "fx", kc), rd.number(k, "fy", kc), rd.number(k, "sk", kc),
                  rd.number(k, "u0", kc), rd.number(k, "v0", kc)};
  const json& r = rd.field(obj, "radial", ctx);
  const std::string rc = ctx + ".radial";
  m.radial = {rd.number(r, "k1", rc), rd.number(r, "k2", rc), rd.number(r, "k3", rc),
              rd.number(r, "k4", rc)};
  const json& e = rd.field(obj, "ep", ctx);
  const std::string ec = ctx + ".ep";
  m.ep = {rd.number(e, "e1", ec), rd.number(e, "e2", ec), rd.number(e, "e3", ec),
          rd.number(e, "e4", ec)};
  m.theta_max_deg = rd.number(obj, "theta_max_deg", ctx);
  const json& poses = rd.array(obj, "poses", ctx);
  for (std::size_t i = 0; i < poses.size(); ++i) {
    const std::string pc = ctx + ".poses[" + std::to_string(i) + "]";
    m.poses.push_back({rd.vec<3>(poses[i], "rotation", pc), rd.vec<3>(poses[i], "translation", pc)});
  }
  try {
    m.camera_model().validate();
  } catch (const InvalidArgument& ex) {
    rd.invalid(ctx, ex.what());
  }
  return m;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw FileError("error reading '" + path.string() + "'");
  return ss.str();
}

std::string csv_number(double v) {
  if (!std::isfinite(v)) return "";
  std::ostringstream ss;
  ss << std::setprecision(10) << v;
  return ss.str();
}

}  // namespace

double exact_rad_to_deg(double rad) {
  const double deg = rad_to_deg(rad);
  double up = deg;
  double down = deg;
  for (int i = 0; i < 8; ++i) {
    if (deg_to_rad(up) == rad) return up;
    if (deg_to_rad(down) == rad) return down;
    up = std::nextafter(up, std::numeric_limits<double>::infinity());
    down = std::nextafter(down, -std::numeric_limits<double>::infinity());
  }
  return deg;
}

CameraModel ModelFile::camera_model() const {
  CameraModel m;
  m.kind = kind;
  m.intrinsics = intrinsics;
  m.radial = radial;
  m.ep = ep;
  m.theta_max = deg_to_rad(theta_max_deg);
  return m;
}

ModelFile ModelFile::from(const CameraModel& model, std::span<const Pose> poses,
                          const ModelStats& stats) {
  ModelFile f;
  f.kind = model.kind;
  f.intrinsics = model.intrinsics;
  f.radial = model.radial;
  f.ep = model.ep;
  f.theta_max_deg = exact_rad_to_deg(model.theta_max);
  f.poses.assign(poses.begin(), poses.end());
  f.stats = stats;
  return f;
}

ModelFile ModelFile::from(const CalibrationResult& result) {
  return from(result.model, result.poses,
              {result.rms_px, result.std_px, result.iterations, result.converged});
}

CalibrationDataset parse_dataset(std::string_view text, std::string_view source) {
  const json root = parse_json(text, source);
  const Reader rd(source);
  if (!root.is_object()) rd.schema("root", "expected an object");
  check_schema_version(rd, root);

  CalibrationDataset ds;
  const json& size = rd.array(root, "image_size", "root");
  if (size.size() != 2 || !size[0].is_number_integer() || !size[1].is_number_integer()) {
    rd.schema("root.image_size", "expected [width, height] integers");
  }
  ds.image_width = size[0].get<int>();
  ds.image_height = size[1].get<int>();

  const json& target = rd.field(root, "target", "root");
  ds.target.rows = rd.integer(target, "rows", "root.target");
  ds.target.cols = rd.integer(target, "cols", "root.target");
  ds.target.spacing = rd.number(target, "spacing", "root.target");

  const json& obs = rd.array(root, "observations", "root");
  for (std::size_t v = 0; v < obs.size(); ++v) {
    const std::string vc = "root.observations[" + std::to_string(v) + "]";
    ViewObservations view;
    view.pose_id = rd.integer(obs[v], "pose_id", vc);
    const json& records = rd.array(obs[v], "records", vc);
    view.points.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
      const std::string rc = vc + ".records[" + std::to_string(i) + "]";
      view.points.push_back(
          {rd.integer(records[i], "target_index", rc), rd.vec<2>(records[i], "pixel", rc)});
    }
    ds.views.push_back(std::move(view));
  }

  if (const auto it = root.find("ground_truth"); it != root.end() && !it->is_null()) {
    const ModelFile gt = read_camera(rd, *it, "root.ground_truth");
    ds.ground_truth = GroundTruth{gt.camera_model(), gt.poses};
  }

  try {
    ds.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(std::string(source) + ": " + e.what());
  }
  return ds;
}

ModelFile parse_model(std::string_view text, std::string_view source) {
  const json root = parse_json(text, source);
  const Reader rd(source);
  if (!root.is_object()) rd.schema("root", "expected an object");
  check_schema_version(rd, root);
  ModelFile m = read_camera(rd, root, "root");
  m.schema_version = kSchemaVersion;
  const json& stats = rd.field(root, "stats", "root");
  m.stats.rms_px = rd.number(stats, "rms_px", "root.stats");
  m.stats.std_px = rd.number(stats, "std_px", "root.stats");
  m.stats.iterations = rd.integer(stats, "iterations", "root.stats");
  m.stats.converged = rd.boolean(stats, "converged", "root.stats");
  return m;
}

std::string format_dataset(const CalibrationDataset& dataset) {
  json root;
  root["schema_version"] = kSchemaVersion;
  root["image_size"] = json::array({dataset.image_width, dataset.image_height});
  root["target"] = {{"rows", dataset.target.rows},
                    {"cols", dataset.target.cols},
                    {"spacing", dataset.target.spacing}};
  json obs = json::array();
  for (const auto& view : dataset.views) {
    json records = json::array();
    for (const auto& o : view.points) {
      records.push_back({{"target_index", o.target_index},
                         {"pixel", json::array({o.pixel.x(), o.pixel.y()})}});
    }
    obs.push_back({{"pose_id", view.pose_id}, {"records", std::move(records)}});
  }
  root["observations"] = std::move(obs);
  if (dataset.ground_truth) {
    const auto& gt = *dataset.ground_truth;
    root["ground_truth"] = camera_json(gt.model.kind, gt.model.intrinsics, gt.model.radial,
                                       gt.model.ep, exact_rad_to_deg(gt.model.theta_max),
                                       gt.poses);
  }
  return root.dump(1) + "\n";
}

std::string format_model(const ModelFile& model) {
  json root = camera_json(model.kind, model.intrinsics, model.radial, model.ep,
                          model.theta_max_deg, model.poses);
  root["schema_version"] = model.schema_version;
  root["stats"] = {{"rms_px", model.stats.rms_px},
                   {"std_px", model.stats.std_px},
                   {"iterations", model.stats.iterations},
                   {"converged", model.stats.converged}};
  return root.dump(2) + "\n";
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FileError("cannot open '" + tmp.string() + "' for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) {
      std::error_code ignored;
      std::filesystem::remove(tmp, ignored);
      throw FileError("error writing '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignored;
    std::filesystem::remove(tmp, ignored);
    throw FileError("cannot move '" + tmp.string() + "' to '" + path.string() + "': " +
                    ec.message());
  }
}

CalibrationDataset load_dataset(const std::filesystem::path& path) {
  return parse_dataset(read_file(path), path.string());
}

void save_dataset(const CalibrationDataset& dataset, const std::filesystem::path& path) {
  write_file_atomic(path, format_dataset(dataset));
}

ModelFile load_model(const std::filesystem::path& path) {
  return parse_model(read_file(path), path.string());
}

void save_model(const ModelFile& model, const std::filesystem::path& path) {
  try {
    model.camera_model().validate();
  } catch (const InvalidArgument& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  write_file_atomic(path, format_model(model));
}

std::string format_report(std::span<const CalibrationResult> results,
                          std::span<const std::string> labels) {
  if (results.empty()) throw InvalidArgument("report needs at least one result");
  if (labels.size() != results.size()) throw InvalidArgument("one label per result is required");

  std::ostringstream out;
  out << "parameter";
  for (const auto& l : labels) out << ',' << l;
  out << '\n';
  auto row = [&](const char* name, auto getter) {
    out << name;
    for (const auto& r : results) out << ',' << csv_number(getter(r));
    out << '\n';
  };
  const double nan = std::numeric_limits<double>::quiet_NaN();
  auto ep_or_blank = [nan](const CalibrationResult& r, double v) {
    return r.model.kind == ModelKind::kSvp ? nan : v;
  };
  row("fx", [](const CalibrationResult& r) { return r.model.intrinsics.fx; });
  row("fy", [](const CalibrationResult& r) { return r.model.intrinsics.fy; });
  row("sk", [](const CalibrationResult& r) { return r.model.intrinsics.sk; });
  row("u0", [](const CalibrationResult& r) { return r.model.intrinsics.u0; });
  row("v0", [](const CalibrationResult& r) { return r.model.intrinsics.v0; });
  row("e1", [&](const CalibrationResult& r) { return ep_or_blank(r, r.model.ep.e1); });
  row("e2", [&](const CalibrationResult& r) { return ep_or_blank(r, r.model.ep.e2); });
  row("e3", [&](const CalibrationResult& r) { return ep_or_blank(r, r.model.ep.e3); });
  row("e4", [&](const CalibrationResult& r) { return ep_or_blank(r, r.model.ep.e4); });
  row("k1", [](const CalibrationResult& r) { return r.model.radial.k1; });
  row("k2", [](const CalibrationResult& r) { return r.model.radial.k2; });
  row("k3", [](const CalibrationResult& r) { return r.model.radial.k3; });
  row("k4", [](const CalibrationResult& r) { return r.model.radial.k4; });
  row("error", [](const CalibrationResult& r) { return r.rms_px; });
  row("std", [](const CalibrationResult& r) { return r.std_px; });
  return out.str();
}

void write_report(std::span<const CalibrationResult> results, std::span<const std::string> labels,
                  const std::filesystem::path& path) {
  write_file_atomic(path, format_report(results, labels));
}

std::string format_stability_report(const StabilityReport& report) {
  std::ostringstream out;
  out << "group";
  for (const auto& k : report.kinds) out << ',' << to_string(k.kind);
  out << '\n';
  auto row = [&](const char* name, auto getter) {
    out << name;
    for (const auto& k : report.kinds) out << ',' << getter(k);
    out << '\n';
  };
  row("fx_fy", [](const KindStability& k) { return csv_number(k.groups.focal); });
  row("sk", [](const KindStability& k) { return csv_number(k.groups.skew); });
  row("u0_v0", [](const KindStability& k) { return csv_number(k.groups.principal); });
  row("e1_e4", [](const KindStability& k) { return csv_number(k.groups.ep); });
  row("k1_k4", [](const KindStability& k) { return csv_number(k.groups.radial); });
  row("trials_used", [](const KindStability& k) { return std::to_string(k.trials_used); });
  row("trials_excluded", [](const KindStability& k) { return std::to_string(k.trials_excluded); });
  return out.str();
}

void write_stability_report(const StabilityReport& report, const std::filesystem::path& path) {
  write_file_atomic(path, format_stability_report(report));
}

}  // namespace epcal
