#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "semmap/error.h"
#include "semmap/image_io.h"
#include "semmap/ingest.h"

namespace semmap {

namespace fs = std::filesystem;

namespace {

constexpr std::array<Rgb, 12> kPalette{{
    {120, 120, 120}, {200, 200, 200}, {180, 120, 90},  {220, 60, 60},
    {60, 160, 220},  {240, 200, 40},  {90, 200, 90},   {160, 80, 200},
    {250, 130, 20},  {40, 200, 180},  {200, 90, 150},  {110, 110, 230},
}};

std::string BoxName(std::size_t i, const SceneBox& b) {
  return "box #" + std::to_string(i) + " (" + b.label + ")";
}

bool Inside(const Vec3& p, const Vec3& lo, const Vec3& hi) {
  return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
}

bool StrictlyInside(const Vec3& p, const Vec3& lo, const Vec3& hi) {
  return (p.array() > lo.array()).all() && (p.array() < hi.array()).all();
}

// Entry distance of a ray into a box, or +inf. The origin is outside.
double RayBoxEntry(const Vec3& o, const Vec3& d, const Vec3& lo,
                   const Vec3& hi) {
  double t_near = -std::numeric_limits<double>::infinity();
  double t_far = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (d[a] == 0.0) {
      if (o[a] < lo[a] || o[a] > hi[a]) {
        return std::numeric_limits<double>::infinity();
      }
      continue;
    }
    double t1 = (lo[a] - o[a]) / d[a];
    double t2 = (hi[a] - o[a]) / d[a];
    if (t1 > t2) std::swap(t1, t2);
    t_near = std::max(t_near, t1);
    t_far = std::min(t_far, t2);
  }
  if (t_near > t_far || !(t_near > 0.0)) {
    return std::numeric_limits<double>::infinity();
  }
  return t_near;
}

// Exit distance of a ray from inside the room and the axis/side it leaves
// through (side 0 = min face, 1 = max face).
double RayRoomExit(const Vec3& o, const Vec3& d, const Vec3& lo,
                   const Vec3& hi, int* axis, int* side) {
  double best = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (d[a] > 0.0) {
      const double t = (hi[a] - o[a]) / d[a];
      if (t < best) best = t, *axis = a, *side = 1;
    } else if (d[a] < 0.0) {
      const double t = (lo[a] - o[a]) / d[a];
      if (t < best) best = t, *axis = a, *side = 0;
    }
  }
  return best;
}

struct PathSample {
  Vec3 position;
  Vec3 direction;
};

struct Segment {
  Vec3 start;
  Vec3 dir;
  double length;
};

std::vector<Segment> BuildSegments(const std::vector<Vec3>& waypoints) {
  std::vector<Segment> segments;
  for (std::size_t i = 0; i + 1 < waypoints.size(); ++i) {
    const Vec3 delta = waypoints[i + 1] - waypoints[i];
    const double len = delta.norm();
    if (len < 1e-12) continue;
    segments.push_back({waypoints[i], delta / len, len});
  }
  return segments;
}

PathSample SamplePath(const std::vector<Segment>& segments, double s) {
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const Segment& seg = segments[i];
    if (s < seg.length || i + 1 == segments.size()) {
      const double u = std::min(s, seg.length);
      return {seg.start + u * seg.dir, seg.dir};
    }
    s -= seg.length;
  }
  return {segments.back().start, segments.back().dir};
}

// Optical camera (z forward, x right, y down) looking along `forward` with
// world +z up.
Mat3 LookRotation(const Vec3& forward) {
  const Vec3 z = forward.normalized();
  const Vec3 x = z.cross(Vec3::UnitZ()).normalized();
  const Vec3 y = z.cross(x);
  Mat3 r;
  r.col(0) = x;
  r.col(1) = y;
  r.col(2) = z;
  return r;
}

}  // namespace

void SceneSpec::Validate() const {
  if (!((room_max - room_min).array() > 0.0).all()) {
    throw Error(ErrorCode::kEmptyScene, "room has no volume");
  }
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const SceneBox& b = boxes[i];
    if (b.label.empty()) {
      throw Error(ErrorCode::kInvalidScene, BoxName(i, b) + " has no class");
    }
    if (!((b.max - b.min).array() > 0.0).all()) {
      throw Error(ErrorCode::kInvalidScene, BoxName(i, b) + " has no volume");
    }
    if (!Inside(b.min, room_min, room_max) ||
        !Inside(b.max, room_min, room_max)) {
      throw Error(ErrorCode::kInvalidScene, BoxName(i, b) + " is outside the room");
    }
  }
  if (waypoints.size() < 2) {
    throw Error(ErrorCode::kDegenerateWaypoints, "need at least 2 waypoints");
  }
  for (std::size_t i = 0; i < waypoints.size(); ++i) {
    if (!StrictlyInside(waypoints[i], room_min, room_max)) {
      throw Error(ErrorCode::kInvalidScene,
                  "waypoint #" + std::to_string(i) + " is outside the room");
    }
    for (std::size_t j = 0; j < boxes.size(); ++j) {
      if (Inside(waypoints[i], boxes[j].min, boxes[j].max)) {
        throw Error(ErrorCode::kInvalidScene,
                    "waypoint #" + std::to_string(i) + " lies inside " +
                        BoxName(j, boxes[j]));
      }
    }
  }
  const auto segments = BuildSegments(waypoints);
  if (segments.empty()) {
    throw Error(ErrorCode::kDegenerateWaypoints, "waypoints do not move");
  }
  for (const Segment& s : segments) {
    if (s.dir.head<2>().norm() < 1e-9) {
      throw Error(ErrorCode::kDegenerateWaypoints,
                  "vertical path segment leaves the view direction undefined");
    }
  }
  try {
    intrinsics.Validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kInvalidScene, e.what());
  }
  if (!(depth_sigma >= 0.0)) {
    throw Error(ErrorCode::kInvalidScene, "depth_sigma must be >= 0");
  }
  if (!(label_flip >= 0.0 && label_flip <= 1.0)) {
    throw Error(ErrorCode::kInvalidScene, "label_flip must lie in [0, 1]");
  }
}

LabelTable SceneSpec::MakeLabelTable() const {
  LabelTable table;
  auto add = [&](const std::string& name) {
    if (table.Find(name)) return;
    auto it = colors.find(name);
    const Rgb c = it != colors.end() ? it->second
                                     : kPalette[table.size() % kPalette.size()];
    table.Add(name, c);
  };
  add("floor");
  add("ceiling");
  add("wall");
  for (const auto& b : boxes) add(b.label);
  return table;
}

SceneSpec ParseSceneSpec(const std::string& text, const std::string& origin) {
  SceneSpec spec;
  bool have_room = false;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream f(line);
    std::string key;
    f >> key;
    const std::string where = origin + ":" + std::to_string(line_no);
    auto bad = [&](const std::string& expected) {
      return Error(ErrorCode::kParseError, where + ": expected '" + expected + "'");
    };
    bool ok = true;
    if (key == "room") {
      ok = static_cast<bool>(f >> spec.room_min.x() >> spec.room_min.y() >>
                             spec.room_min.z() >> spec.room_max.x() >>
                             spec.room_max.y() >> spec.room_max.z());
      if (!ok) throw bad("room x0 y0 z0 x1 y1 z1");
      have_room = true;
    } else if (key == "box") {
      SceneBox b;
      ok = static_cast<bool>(f >> b.label >> b.min.x() >> b.min.y() >>
                             b.min.z() >> b.max.x() >> b.max.y() >> b.max.z());
      if (!ok) throw bad("box class x0 y0 z0 x1 y1 z1");
      spec.boxes.push_back(std::move(b));
    } else if (key == "waypoint") {
      Vec3 w;
      if (!(f >> w.x() >> w.y() >> w.z())) throw bad("waypoint x y z");
      spec.waypoints.push_back(w);
    } else if (key == "intrinsics") {
      CameraIntrinsics& k = spec.intrinsics;
      if (!(f >> k.fx >> k.fy >> k.cx >> k.cy >> k.width >> k.height >>
            k.depth_scale)) {
        throw bad("intrinsics fx fy cx cy width height depth_scale");
      }
    } else if (key == "depth_sigma") {
      if (!(f >> spec.depth_sigma)) throw bad("depth_sigma value");
    } else if (key == "label_flip") {
      if (!(f >> spec.label_flip)) throw bad("label_flip value");
    } else if (key == "color") {
      std::string name;
      int r, g, b;
      if (!(f >> name >> r >> g >> b) || r < 0 || r > 255 || g < 0 ||
          g > 255 || b < 0 || b > 255) {
        throw bad("color class r g b");
      }
      spec.colors[name] = Rgb{static_cast<std::uint8_t>(r),
                              static_cast<std::uint8_t>(g),
                              static_cast<std::uint8_t>(b)};
    } else {
      throw Error(ErrorCode::kParseError,
                  where + ": unknown directive '" + key + "'");
    }
    std::string extra;
    if (f >> extra) {
      throw Error(ErrorCode::kParseError, where + ": trailing '" + extra + "'");
    }
  }
  if (!have_room) {
    throw Error(ErrorCode::kEmptyScene, origin + ": no 'room' directive");
  }
  return spec;
}

SceneSpec LoadSceneSpec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return ParseSceneSpec(buffer.str(), path);
}

SyntheticSequence GenerateSynthetic(const SceneSpec& spec, int frame_count,
                                    std::uint64_t seed) {
  spec.Validate();
  if (frame_count < 1) {
    throw Error(ErrorCode::kInvalidArgument, "frame_count must be >= 1");
  }
  const CameraIntrinsics& k = spec.intrinsics;
  const auto segments = BuildSegments(spec.waypoints);
  double total = 0.0;
  for (const auto& s : segments) total += s.length;

  SyntheticSequence seq;
  seq.labels = spec.MakeLabelTable();
  const LabelId floor_id = *seq.labels.Find("floor");
  const LabelId ceiling_id = *seq.labels.Find("ceiling");
  const LabelId wall_id = *seq.labels.Find("wall");
  std::vector<LabelId> box_ids;
  for (const auto& b : spec.boxes) box_ids.push_back(*seq.labels.Find(b.label));
  const int class_count = static_cast<int>(seq.labels.size());

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> other_class(0, class_count - 2);
  const auto pixels = static_cast<std::size_t>(k.width) * k.height;

  for (int f = 0; f < frame_count; ++f) {
    const double s =
        frame_count == 1 ? 0.0 : total * f / static_cast<double>(frame_count - 1);
    const PathSample sample = SamplePath(segments, s);
    const Pose pose(LookRotation(sample.direction), sample.position);
    const double timestamp = 1000.0 + 0.1 * f;
    seq.ground_truth.Append(timestamp, pose);

    LabeledFrame frame;
    frame.timestamp = timestamp;
    frame.width = k.width;
    frame.height = k.height;
    frame.color.resize(3 * pixels);
    frame.depth.assign(pixels, 0);
    frame.labels.width = k.width;
    frame.labels.height = k.height;
    frame.labels.k = 1;
    frame.labels.slots.assign(pixels, LabelSlot{});
    std::vector<LabelId> truth(pixels, kNoLabel);

    for (int v = 0; v < k.height; ++v) {
      for (int u = 0; u < k.width; ++u) {
        const std::size_t idx = static_cast<std::size_t>(v) * k.width + u;
        // Unnormalized so that the hit parameter equals the z-depth.
        const Vec3 d_cam((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0);
        const Vec3 d = pose.rotation() * d_cam;
        int axis = 2, side = 0;
        double t = RayRoomExit(sample.position, d, spec.room_min,
                               spec.room_max, &axis, &side);
        LabelId cls = axis != 2 ? wall_id : (side == 0 ? floor_id : ceiling_id);
        for (std::size_t b = 0; b < spec.boxes.size(); ++b) {
          const double tb = RayBoxEntry(sample.position, d, spec.boxes[b].min,
                                        spec.boxes[b].max);
          if (tb <= t) {
            t = tb;
            cls = box_ids[b];
          }
        }
        double depth = t;
        if (spec.depth_sigma > 0.0) depth += spec.depth_sigma * noise(rng);
        const double raw = std::round(depth * k.depth_scale);
        frame.depth[idx] =
            raw >= 1.0 && raw <= 65535.0 ? static_cast<std::uint16_t>(raw) : 0;
        truth[idx] = cls;

        LabelId observed = cls;
        if (spec.label_flip > 0.0 && class_count > 1 &&
            unit(rng) < spec.label_flip) {
          int other = other_class(rng);
          if (other >= cls) ++other;
          observed = static_cast<LabelId>(other);
        }
        frame.labels.slots[idx] =
            LabelSlot{observed, static_cast<float>(1.0 - spec.label_flip)};
        const Rgb c = seq.labels.color(cls);
        frame.color[3 * idx] = c.r;
        frame.color[3 * idx + 1] = c.g;
        frame.color[3 * idx + 2] = c.b;
      }
    }
    seq.frames.push_back(std::move(frame));
    seq.true_labels.push_back(std::move(truth));
  }
  return seq;
}

std::size_t WriteTumDataset(const std::string& directory,
                            const SyntheticSequence& sequence) {
  const fs::path dir(directory);
  fs::create_directories(dir / "rgb");
  fs::create_directories(dir / "depth");
  fs::create_directories(dir / "labels");

  std::ofstream rgb_index(dir / "rgb.txt");
  std::ofstream depth_index(dir / "depth.txt");
  if (!rgb_index || !depth_index) {
    throw Error(ErrorCode::kIoError, "cannot write index files in " + directory);
  }
  rgb_index << "# color images\n# timestamp filename\n";
  depth_index << "# depth maps\n# timestamp filename\n";

  for (const LabeledFrame& frame : sequence.frames) {
    const std::string stamp = FormatTimestamp(frame.timestamp);
    const std::string rgb_rel = "rgb/" + stamp + ".png";
    const std::string depth_rel = "depth/" + stamp + ".png";
    WriteRgbPng((dir / rgb_rel).string(),
                RgbImage{frame.width, frame.height, frame.color});
    WriteDepthPng((dir / depth_rel).string(),
                  DepthImage{frame.width, frame.height, frame.depth});
    WriteSlab((dir / "labels" / (stamp + ".slab")).string(), frame.labels);
    rgb_index << stamp << ' ' << rgb_rel << '\n';
    depth_index << stamp << ' ' << depth_rel << '\n';
  }
  rgb_index.close();
  depth_index.close();
  SaveTrajectory((dir / "groundtruth.txt").string(), sequence.ground_truth);
  sequence.labels.Save((dir / "labels" / "labels.txt").string());

  std::size_t bytes = 0;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file()) bytes += entry.file_size();
  }
  return bytes;
}

}  // namespace semmap
