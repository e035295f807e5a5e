#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "semmap/error.h"
#include "semmap/pipeline.h"

namespace semmap {

namespace {

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void Bad(const std::string& where, const std::string& key,
                      const std::string& value, const std::string& why) {
  throw Error(ErrorCode::kParseError,
              where + ": " + key + " = '" + value + "': " + why);
}

std::vector<double> Numbers(const std::string& where, const std::string& key,
                            const std::string& value) {
  std::istringstream in(value);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) {
    double v = 0.0;
    const auto [ptr, ec] =
        std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size() ||
        !std::isfinite(v)) {
      Bad(where, key, value, "not a number");
    }
    out.push_back(v);
  }
  return out;
}

double Number(const std::string& where, const std::string& key,
              const std::string& value) {
  const auto v = Numbers(where, key, value);
  if (v.size() != 1) Bad(where, key, value, "expected one number");
  return v[0];
}

int Integer(const std::string& where, const std::string& key,
            const std::string& value) {
  const double v = Number(where, key, value);
  if (v != std::floor(v) || std::abs(v) > 1e9) {
    Bad(where, key, value, "expected an integer");
  }
  return static_cast<int>(v);
}

bool Boolean(const std::string& where, const std::string& key,
             const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") {
    return true;
  }
  if (value == "false" || value == "0" || value == "no" || value == "off") {
    return false;
  }
  Bad(where, key, value, "expected true/false");
}

}  // namespace

void PipelineConfig::Validate() const {
  map.Validate();
  intrinsics.Validate();
  refine.Validate();
  AxisRemap::FromPreset(axis_remap);
  if (stride < 1) {
    throw Error(ErrorCode::kInvalidArgument, "stride must be >= 1");
  }
  if (workers < 1) {
    throw Error(ErrorCode::kInvalidArgument, "workers must be >= 1");
  }
  if (!(association_tolerance >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "association_tolerance must be >= 0");
  }
}

void ApplyConfigValue(PipelineConfig& cfg, const std::string& key,
                      const std::string& value, const std::string& where) {
  auto& m = cfg.map;
  auto& k = cfg.intrinsics;
  if (key == "resolution") {
    m.resolution = Number(where, key, value);
  } else if (key == "max_depth") {
    m.max_depth = Integer(where, key, value);
  } else if (key == "origin") {
    const auto v = Numbers(where, key, value);
    if (v.size() != 3) Bad(where, key, value, "expected 3 numbers");
    m.origin = Vec3(v[0], v[1], v[2]);
  } else if (key == "p_hit") {
    m.p_hit = Number(where, key, value);
  } else if (key == "p_miss") {
    m.p_miss = Number(where, key, value);
  } else if (key == "l_min") {
    m.l_min = Number(where, key, value);
  } else if (key == "l_max") {
    m.l_max = Number(where, key, value);
  } else if (key == "occupancy_threshold") {
    m.occupancy_threshold = Number(where, key, value);
  } else if (key == "max_range") {
    m.max_range = Number(where, key, value);
  } else if (key == "carve_free_space") {
    m.carve_free_space = Boolean(where, key, value);
  } else if (key == "alpha") {
    m.fusion.alpha = Number(where, key, value);
  } else if (key == "k_max") {
    m.fusion.k_max = Integer(where, key, value);
  } else if (key == "bayes_on_equal_sets") {
    m.fusion.bayes_on_equal_sets = Boolean(where, key, value);
  } else if (key == "fx") {
    k.fx = Number(where, key, value);
  } else if (key == "fy") {
    k.fy = Number(where, key, value);
  } else if (key == "cx") {
    k.cx = Number(where, key, value);
  } else if (key == "cy") {
    k.cy = Number(where, key, value);
  } else if (key == "width") {
    k.width = Integer(where, key, value);
  } else if (key == "height") {
    k.height = Integer(where, key, value);
  } else if (key == "depth_scale") {
    k.depth_scale = Number(where, key, value);
  } else if (key == "axis_remap") {
    try {
      AxisRemap::FromPreset(value);
    } catch (const Error&) {
      Bad(where, key, value, "expected none, zxy or ros-optical");
    }
    cfg.axis_remap = value;
  } else if (key == "camera_from_robot") {
    const auto v = Numbers(where, key, value);
    if (v.size() != 7) Bad(where, key, value, "expected tx ty tz qx qy qz qw");
    try {
      cfg.camera_from_robot =
          Pose::FromQuaternion(Eigen::Quaterniond(v[6], v[3], v[4], v[5]),
                               Vec3(v[0], v[1], v[2]));
    } catch (const Error&) {
      Bad(where, key, value, "zero quaternion");
    }
  } else if (key == "stride") {
    cfg.stride = Integer(where, key, value);
  } else if (key == "association_tolerance") {
    cfg.association_tolerance = Number(where, key, value);
  } else if (key == "workers") {
    cfg.workers = Integer(where, key, value);
  } else if (key == "label_table") {
    cfg.label_table = value;
  } else if (key == "max_iterations") {
    cfg.refine.max_iterations = Integer(where, key, value);
  } else if (key == "convergence_tol") {
    cfg.refine.convergence_tol = Number(where, key, value);
  } else if (key == "initial_damping") {
    cfg.refine.initial_damping = Number(where, key, value);
  } else {
    throw Error(ErrorCode::kParseError, where + ": unknown key '" + key + "'");
  }
}

void ApplyConfigAssignment(PipelineConfig& cfg, const std::string& assignment,
                           const std::string& where) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw Error(ErrorCode::kParseError,
                where + ": expected key = value, got '" + assignment + "'");
  }
  const std::string key = Trim(assignment.substr(0, eq));
  const std::string value = Trim(assignment.substr(eq + 1));
  if (key.empty()) {
    throw Error(ErrorCode::kParseError, where + ": missing key");
  }
  ApplyConfigValue(cfg, key, value, where);
}

PipelineConfig ParsePipelineConfig(const std::string& text,
                                   const std::string& origin,
                                   PipelineConfig base) {
  std::istringstream in(text);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = Trim(line);
    if (line.empty()) continue;
    ApplyConfigAssignment(base, line, origin + ":" + std::to_string(n));
  }
  return base;
}

PipelineConfig LoadPipelineConfig(const std::string& path,
                                  PipelineConfig base) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ParsePipelineConfig(ss.str(), path, std::move(base));
}

std::string FormatIntrinsicsConfig(const CameraIntrinsics& k) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "fx = %.17g\nfy = %.17g\ncx = %.17g\ncy = %.17g\n"
                "width = %d\nheight = %d\ndepth_scale = %.17g\n",
                k.fx, k.fy, k.cx, k.cy, k.width, k.height, k.depth_scale);
  return buf;
}

}  // namespace semmap
