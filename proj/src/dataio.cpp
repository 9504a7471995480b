#include "clcalib/dataio.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace clcalib {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  size_t start = 0;
  while (start <= text.size()) {
    size_t end = text.find('\n', start);
    if (end == std::string::npos) {
      if (start < text.size()) lines.push_back(text.substr(start));
      break;
    }
    std::string line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
    start = end + 1;
  }
  return lines;
}

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    size_t end = line.find(',', start);
    if (end == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

bool parse_double(const std::string& tok, double& out) {
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

bool parse_int(const std::string& tok, int& out) {
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

[[noreturn]] void parse_fail(const std::string& path, size_t line_no, const std::string& what) {
  throw ParseError(path + ":" + std::to_string(line_no) + ": " + what);
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string format_double_10sig(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 10);
  return std::string(buf, res.ptr);
}

Trajectory read_trajectory(const std::string& path, const std::string& sensor_label,
                           ReadStats* stats) {
  const auto lines = split_lines(read_file(path));
  Trajectory traj;
  traj.sensor_label = sensor_label;
  for (size_t i = 0; i < lines.size(); ++i) {
    const std::string& line = lines[i];
    if (line.empty() || line[0] == '#') continue;
    const auto tok = split_ws(line);
    if (tok.empty()) continue;
    if (tok.size() != 8) parse_fail(path, i + 1, "expected 8 fields, got " + std::to_string(tok.size()));
    double v[8];
    for (int f = 0; f < 8; ++f)
      if (!parse_double(tok[f], v[f])) parse_fail(path, i + 1, "bad number '" + tok[f] + "'");
    // on-disk order is qx qy qz qw
    Quat q(v[7], v[4], v[5], v[6]);
    const double norm = q.norm();
    if (std::abs(norm - 1.0) > 1e-3)
      throw NotUnitError(path + ":" + std::to_string(i + 1) + ": quaternion norm " +
                         format_double(norm) + " deviates from 1 by more than 1e-3");
    // renormalize only above floating-point noise so exact files round-trip
    if (std::abs(norm - 1.0) > 1e-12) {
      if (stats) ++stats->renormalized_quaternions;
      q.normalize();
    }
    if (!traj.poses.empty() && v[0] <= traj.poses.back().t_stamp)
      throw NonMonotonicError(path + ":" + std::to_string(i + 1) +
                              ": timestamps not strictly increasing");
    traj.poses.emplace_back(v[0], q, Vec3(v[1], v[2], v[3]));
  }
  if (traj.poses.empty()) throw ParseError(path + ": empty trajectory");
  return traj;
}

void write_trajectory(const Trajectory& traj, const std::string& path) {
  std::string out;
  out += "# " + (traj.sensor_label.empty() ? std::string("trajectory") : traj.sensor_label) + "\n";
  out += "# timestamp tx ty tz qx qy qz qw\n";
  for (const Pose& p : traj.poses) {
    const Quat q = canonicalize(p.rot);
    out += format_double(p.t_stamp) + " " + format_double(p.trans.x()) + " " +
           format_double(p.trans.y()) + " " + format_double(p.trans.z()) + " " +
           format_double(q.x()) + " " + format_double(q.y()) + " " + format_double(q.z()) +
           " " + format_double(q.w()) + "\n";
  }
  write_file(path, out);
}

std::vector<CorrespondenceSet> read_correspondences(const std::string& path) {
  const auto lines = split_lines(read_file(path));
  if (lines.empty()) throw ParseError(path + ": missing header");
  if (lines[0] != "frame_id,u,v,x,y,z")
    throw ParseError(path + ":1: expected header 'frame_id,u,v,x,y,z'");

  std::vector<CorrespondenceSet> sets;
  std::map<int, size_t> index_of;  // frame_id -> position, order of first appearance
  for (size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto tok = split_csv(lines[i]);
    if (tok.size() != 6) parse_fail(path, i + 1, "expected 6 fields, got " + std::to_string(tok.size()));
    int frame_id;
    if (!parse_int(tok[0], frame_id)) parse_fail(path, i + 1, "bad frame_id '" + tok[0] + "'");
    double v[5];
    for (int f = 0; f < 5; ++f)
      if (!parse_double(tok[f + 1], v[f])) parse_fail(path, i + 1, "bad number '" + tok[f + 1] + "'");
    auto it = index_of.find(frame_id);
    if (it == index_of.end()) {
      it = index_of.emplace(frame_id, sets.size()).first;
      sets.push_back(CorrespondenceSet{frame_id, {}});
    }
    sets[it->second].items.push_back(
        CorrespondenceItem{Vec3(v[2], v[3], v[4]), Vec2(v[0], v[1])});
  }
  return sets;
}

void write_correspondences(const std::vector<CorrespondenceSet>& sets, const std::string& path) {
  std::string out = "frame_id,u,v,x,y,z\n";
  for (const auto& set : sets)
    for (const auto& item : set.items)
      out += std::to_string(set.frame_id) + "," + format_double(item.p_cmr.x()) + "," +
             format_double(item.p_cmr.y()) + "," + format_double(item.p_lidar.x()) + "," +
             format_double(item.p_lidar.y()) + "," + format_double(item.p_lidar.z()) + "\n";
  write_file(path, out);
}

void validate_correspondences(const std::vector<CorrespondenceSet>& sets,
                              const CameraIntrinsics& k) {
  for (const auto& set : sets) {
    if (set.items.empty())
      throw ParseError("correspondence set for frame " + std::to_string(set.frame_id) +
                       " is empty");
    for (const auto& item : set.items)
      if (!k.contains(item.p_cmr))
        throw ParseError("pixel (" + format_double(item.p_cmr.x()) + "," +
                         format_double(item.p_cmr.y()) + ") in frame " +
                         std::to_string(set.frame_id) + " outside image bounds");
  }
}

PointCloudFrame read_cloud(const std::string& path, int frame_id, double t_stamp) {
  const auto lines = split_lines(read_file(path));
  PointCloudFrame cloud;
  cloud.frame_id = frame_id;
  cloud.t_stamp = t_stamp;
  for (size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto tok = split_ws(lines[i]);
    if (tok.empty()) continue;
    if (tok.size() != 3) parse_fail(path, i + 1, "expected 3 fields, got " + std::to_string(tok.size()));
    double v[3];
    for (int f = 0; f < 3; ++f)
      if (!parse_double(tok[f], v[f])) parse_fail(path, i + 1, "bad number '" + tok[f] + "'");
    cloud.points.emplace_back(v[0], v[1], v[2]);
  }
  return cloud;
}

void write_cloud(const PointCloudFrame& cloud, const std::string& path) {
  std::string out;
  for (const Vec3& p : cloud.points)
    out += format_double(p.x()) + " " + format_double(p.y()) + " " + format_double(p.z()) + "\n";
  write_file(path, out);
}

std::vector<CloudManifestEntry> read_cloud_manifest(const std::string& path) {
  const auto lines = split_lines(read_file(path));
  if (lines.empty()) throw ParseError(path + ": missing header");
  if (lines[0] != "frame_id,timestamp,path")
    throw ParseError(path + ":1: expected header 'frame_id,timestamp,path'");
  std::vector<CloudManifestEntry> entries;
  for (size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto tok = split_csv(lines[i]);
    if (tok.size() != 3) parse_fail(path, i + 1, "expected 3 fields, got " + std::to_string(tok.size()));
    CloudManifestEntry e;
    if (!parse_int(tok[0], e.frame_id)) parse_fail(path, i + 1, "bad frame_id '" + tok[0] + "'");
    if (!parse_double(tok[1], e.t_stamp)) parse_fail(path, i + 1, "bad timestamp '" + tok[1] + "'");
    if (tok[2].empty()) parse_fail(path, i + 1, "empty path");
    e.path = tok[2];
    entries.push_back(std::move(e));
  }
  return entries;
}

void write_cloud_manifest(const std::vector<CloudManifestEntry>& entries,
                          const std::string& path) {
  std::string out = "frame_id,timestamp,path\n";
  for (const auto& e : entries)
    out += std::to_string(e.frame_id) + "," + format_double(e.t_stamp) + "," + e.path + "\n";
  write_file(path, out);
}

CameraIntrinsics read_intrinsics(const std::string& path) {
  const auto lines = split_lines(read_file(path));
  std::map<std::string, std::string> kv;
  for (size_t i = 0; i < lines.size(); ++i) {
    const std::string& line = lines[i];
    if (line.empty() || line[0] == '#') continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) parse_fail(path, i + 1, "expected key=value");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto need = [&](const char* key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw MissingKeyError(path + ": missing key '" + std::string(key) + "'");
    return it->second;
  };
  CameraIntrinsics k;
  double w, h;
  if (!parse_double(need("fx"), k.fx) || !parse_double(need("fy"), k.fy) ||
      !parse_double(need("cx"), k.cx) || !parse_double(need("cy"), k.cy) ||
      !parse_double(need("width"), w) || !parse_double(need("height"), h))
    throw ParseError(path + ": bad numeric value in intrinsics");
  k.width = static_cast<int>(w);
  k.height = static_cast<int>(h);
  if (k.fx <= 0.0 || k.fy <= 0.0)
    throw NonPositiveFocalError(path + ": focal lengths must be positive");
  if (!k.valid()) throw ParseError(path + ": principal point outside image bounds");
  return k;
}

void write_intrinsics(const CameraIntrinsics& k, const std::string& path) {
  std::string out;
  out += "fx=" + format_double(k.fx) + "\n";
  out += "fy=" + format_double(k.fy) + "\n";
  out += "cx=" + format_double(k.cx) + "\n";
  out += "cy=" + format_double(k.cy) + "\n";
  out += "width=" + std::to_string(k.width) + "\n";
  out += "height=" + std::to_string(k.height) + "\n";
  write_file(path, out);
}

namespace {

void append_array(std::string& out, const double* v, int n) {
  out += "[";
  for (int i = 0; i < n; ++i) {
    if (i) out += ", ";
    out += format_double_10sig(v[i]);
  }
  out += "]";
}

}  // namespace

std::string serialize_calib_result(const CalibResult& r) {
  const Quat q = canonicalize(r.rotation);
  std::string out = "{\n";

  out += "  \"rotation_quaternion\": ";
  const double qv[4] = {q.w(), q.x(), q.y(), q.z()};
  append_array(out, qv, 4);
  out += ",\n";

  out += "  \"rotation_matrix\": ";
  double m[9];
  for (int row = 0; row < 3; ++row)
    for (int col = 0; col < 3; ++col) m[3 * row + col] = r.rotation_matrix(row, col);
  append_array(out, m, 9);
  out += ",\n";

  out += "  \"translation\": ";
  append_array(out, r.translation.data(), 3);
  out += ",\n";

  out += "  \"scales\": ";
  append_array(out, r.scales.data(), static_cast<int>(r.scales.size()));
  out += ",\n";

  out += "  \"costs\": {\"rot\": " + format_double_10sig(r.cost_rot) +
         ", \"trans\": " + format_double_10sig(r.cost_trans) +
         ", \"corr\": " + format_double_10sig(r.cost_corr) + "},\n";

  out += "  \"observability\": [";
  for (size_t i = 0; i < r.observability.size(); ++i) {
    if (i) out += ", ";
    out += "{\"direction\": ";
    append_array(out, r.observability[i].direction.data(), 6);
    out += ", \"eigenvalue\": " + format_double_10sig(r.observability[i].eigenvalue) + "}";
  }
  out += "],\n";

  out += "  \"metrics\": ";
  if (r.metrics) {
    const MetricReport& mr = *r.metrics;
    out += "{\"e_t_cm\": " + format_double_10sig(mr.e_t_cm) +
           ", \"e_r_deg\": " + format_double_10sig(mr.e_r_deg) + ", \"translation_axes_cm\": ";
    append_array(out, mr.translation_axes_cm.data(), 3);
    out += ", \"rotation_axes_deg\": ";
    append_array(out, mr.rotation_axes_deg.data(), 3);
    out += std::string(", \"gimbal_warning\": ") + (mr.gimbal_warning ? "true" : "false");
    out += ", \"convention\": \"" + to_string(mr.convention) + "\"}";
  } else {
    out += "null";
  }
  out += "\n}\n";
  return out;
}

void write_calib_result(const CalibResult& r, const std::string& path) {
  write_file(path, serialize_calib_result(r));
}

CalibResult read_calib_result(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
  try {
    CalibResult r;
    const auto& q = j.at("rotation_quaternion");
    r.rotation = Quat(q.at(0).get<double>(), q.at(1).get<double>(), q.at(2).get<double>(),
                      q.at(3).get<double>());
    const auto& m = j.at("rotation_matrix");
    for (int row = 0; row < 3; ++row)
      for (int col = 0; col < 3; ++col)
        r.rotation_matrix(row, col) = m.at(3 * row + col).get<double>();
    const auto& t = j.at("translation");
    r.translation = Vec3(t.at(0).get<double>(), t.at(1).get<double>(), t.at(2).get<double>());
    r.scales = j.at("scales").get<std::vector<double>>();
    r.cost_rot = j.at("costs").at("rot").get<double>();
    r.cost_trans = j.at("costs").at("trans").get<double>();
    r.cost_corr = j.at("costs").at("corr").get<double>();
    for (const auto& entry : j.at("observability")) {
      ObservabilityEntry e;
      for (int i = 0; i < 6; ++i) e.direction(i) = entry.at("direction").at(i).get<double>();
      e.eigenvalue = entry.at("eigenvalue").get<double>();
      r.observability.push_back(e);
    }
    if (!j.at("metrics").is_null()) {
      MetricReport mr;
      const auto& jm = j.at("metrics");
      mr.e_t_cm = jm.at("e_t_cm").get<double>();
      mr.e_r_deg = jm.at("e_r_deg").get<double>();
      for (int i = 0; i < 3; ++i) {
        mr.translation_axes_cm(i) = jm.at("translation_axes_cm").at(i).get<double>();
        mr.rotation_axes_deg(i) = jm.at("rotation_axes_deg").at(i).get<double>();
      }
      mr.gimbal_warning = jm.at("gimbal_warning").get<bool>();
      mr.convention = rotation_convention_from_string(jm.at("convention").get<std::string>());
      r.metrics = mr;
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

}  // namespace clcalib
