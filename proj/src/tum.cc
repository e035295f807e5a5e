#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <tuple>

#include "semmap/error.h"
#include "semmap/image_io.h"
#include "semmap/ingest.h"

namespace semmap {

namespace fs = std::filesystem;

void Trajectory::Append(double timestamp, const Pose& pose) {
  if (!std::isfinite(timestamp)) {
    throw Error(ErrorCode::kInvalidArgument, "non-finite timestamp");
  }
  if (!entries_.empty() && !(timestamp > entries_.back().timestamp)) {
    throw Error(ErrorCode::kInvalidArgument,
                "timestamps must increase strictly (" +
                    std::to_string(timestamp) + " after " +
                    std::to_string(entries_.back().timestamp) + ")");
  }
  entries_.push_back({timestamp, pose});
}

std::vector<double> Trajectory::Timestamps() const {
  std::vector<double> t;
  t.reserve(entries_.size());
  for (const auto& e : entries_) t.push_back(e.timestamp);
  return t;
}

std::optional<Pose> Trajectory::Nearest(double t, double tolerance) const {
  if (entries_.empty()) return std::nullopt;
  auto it = std::lower_bound(
      entries_.begin(), entries_.end(), t,
      [](const StampedPose& e, double v) { return e.timestamp < v; });
  const StampedPose* best = nullptr;
  if (it != entries_.end()) best = &*it;
  if (it != entries_.begin()) {
    const StampedPose* prev = &*(it - 1);
    if (!best || t - prev->timestamp <= best->timestamp - t) best = prev;
  }
  if (std::abs(best->timestamp - t) > tolerance) return std::nullopt;
  return best->pose;
}

std::optional<Pose> Trajectory::Interpolate(double t, double tolerance) const {
  if (entries_.empty()) return std::nullopt;
  if (t <= entries_.front().timestamp) {
    if (entries_.front().timestamp - t <= tolerance) return entries_.front().pose;
    return std::nullopt;
  }
  if (t >= entries_.back().timestamp) {
    if (t - entries_.back().timestamp <= tolerance) return entries_.back().pose;
    return std::nullopt;
  }
  auto hi = std::lower_bound(
      entries_.begin(), entries_.end(), t,
      [](const StampedPose& e, double v) { return e.timestamp < v; });
  if (hi->timestamp == t) return hi->pose;
  auto lo = hi - 1;
  const double s = (t - lo->timestamp) / (hi->timestamp - lo->timestamp);
  const Eigen::Quaterniond qa(lo->pose.rotation());
  const Eigen::Quaterniond qb(hi->pose.rotation());
  const Eigen::Quaterniond q = qa.slerp(s, qb).normalized();
  const Vec3 trans =
      (1.0 - s) * lo->pose.translation() + s * hi->pose.translation();
  return Pose(q.toRotationMatrix(), trans);
}

namespace {

bool IsBlankOrComment(const std::string& line) {
  const auto first = line.find_first_not_of(" \t\r");
  return first == std::string::npos || line[first] == '#';
}

std::string ReadText(const std::string& path, ErrorCode missing) {
  std::ifstream in(path);
  if (!in) throw Error(missing, "cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

Trajectory ParseTrajectory(const std::string& text, const std::string& origin) {
  Trajectory traj;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (IsBlankOrComment(line)) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    double t, tx, ty, tz, qx, qy, qz, qw;
    std::string extra;
    const std::string where = origin + ":" + std::to_string(line_no);
    if (!(fields >> t >> tx >> ty >> tz >> qx >> qy >> qz >> qw) ||
        (fields >> extra)) {
      throw Error(ErrorCode::kParseError,
                  where + ": expected 'timestamp tx ty tz qx qy qz qw'");
    }
    try {
      traj.Append(t, Pose::FromQuaternion(Eigen::Quaterniond(qw, qx, qy, qz),
                                          Vec3(tx, ty, tz)));
    } catch (const Error& e) {
      throw Error(ErrorCode::kParseError, where + ": " + e.what());
    }
  }
  return traj;
}

Trajectory LoadTrajectory(const std::string& path) {
  return ParseTrajectory(ReadText(path, ErrorCode::kIoError), path);
}

std::string FormatTumPose(double timestamp, const Pose& pose) {
  const Eigen::Quaterniond q = pose.ToQuaternion();
  const Vec3& t = pose.translation();
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "%s %.17g %.17g %.17g %.17g %.17g %.17g %.17g",
                FormatTimestamp(timestamp).c_str(), t.x(), t.y(), t.z(),
                q.x(), q.y(), q.z(), q.w());
  return buf;
}

void SaveTrajectory(const std::string& path, const Trajectory& trajectory) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path);
  out << "# timestamp tx ty tz qx qy qz qw\n";
  for (const auto& e : trajectory.entries()) {
    out << FormatTumPose(e.timestamp, e.pose) << '\n';
  }
  if (!out) throw Error(ErrorCode::kIoError, "write failed: " + path);
}

std::string FormatTimestamp(double t) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", t);
  return buf;
}

AssociationResult AssociateTimestamps(std::span<const double> first,
                                      std::span<const double> second,
                                      double tolerance) {
  std::vector<std::size_t> order(second.size());
  for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return second[a] < second[b];
  });

  std::vector<std::tuple<double, std::size_t, std::size_t>> candidates;
  for (std::size_t i = 0; i < first.size(); ++i) {
    auto lo = std::lower_bound(
        order.begin(), order.end(), first[i] - tolerance,
        [&](std::size_t j, double v) { return second[j] < v; });
    for (auto it = lo; it != order.end() && second[*it] <= first[i] + tolerance;
         ++it) {
      candidates.emplace_back(std::abs(first[i] - second[*it]), i, *it);
    }
  }
  std::sort(candidates.begin(), candidates.end());

  std::vector<bool> used_first(first.size()), used_second(second.size());
  AssociationResult result;
  for (const auto& [gap, i, j] : candidates) {
    if (used_first[i] || used_second[j]) continue;
    used_first[i] = used_second[j] = true;
    result.matches.push_back({i, j});
  }
  std::sort(result.matches.begin(), result.matches.end(),
            [&](const TimestampMatch& a, const TimestampMatch& b) {
              return first[a.first] < first[b.first];
            });
  result.unmatched =
      first.size() + second.size() - 2 * result.matches.size();
  return result;
}

std::vector<IndexEntry> ParseImageIndex(const std::string& text,
                                        const std::string& origin) {
  std::vector<IndexEntry> entries;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (IsBlankOrComment(line)) continue;
    std::istringstream fields(line);
    IndexEntry e;
    std::string extra;
    if (!(fields >> e.stamp >> e.path) || (fields >> extra)) {
      throw Error(ErrorCode::kParseError, origin + ":" +
                                              std::to_string(line_no) +
                                              ": expected 'timestamp filename'");
    }
    try {
      std::size_t used = 0;
      e.timestamp = std::stod(e.stamp, &used);
      if (used != e.stamp.size()) throw std::invalid_argument(e.stamp);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kParseError, origin + ":" +
                                              std::to_string(line_no) +
                                              ": bad timestamp '" + e.stamp +
                                              "'");
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

TumIndex IndexTumSequence(const std::string& directory,
                          double association_tolerance) {
  const fs::path dir(directory);
  const auto rgb_path = (dir / "rgb.txt").string();
  const auto depth_path = (dir / "depth.txt").string();
  const auto rgb =
      ParseImageIndex(ReadText(rgb_path, ErrorCode::kMissingIndexFile), rgb_path);
  const auto depth = ParseImageIndex(
      ReadText(depth_path, ErrorCode::kMissingIndexFile), depth_path);

  TumIndex index;
  index.directory = directory;
  const auto gt_path = dir / "groundtruth.txt";
  if (fs::exists(gt_path)) index.ground_truth = LoadTrajectory(gt_path.string());

  std::vector<double> rgb_t, depth_t;
  for (const auto& e : rgb) rgb_t.push_back(e.timestamp);
  for (const auto& e : depth) depth_t.push_back(e.timestamp);
  const AssociationResult assoc =
      AssociateTimestamps(rgb_t, depth_t, association_tolerance);
  index.skipped = assoc.unmatched;
  for (const auto& m : assoc.matches) {
    TumFrameRef ref{rgb[m.first], depth[m.second], std::nullopt};
    if (index.ground_truth) {
      ref.ground_truth = index.ground_truth->Interpolate(
          ref.rgb.timestamp, association_tolerance);
    }
    index.frames.push_back(std::move(ref));
  }
  return index;
}

LabeledFrame LoadTumFrame(const std::string& directory,
                          const TumFrameRef& ref) {
  const fs::path dir(directory);
  const RgbImage rgb = ReadRgbPng((dir / ref.rgb.path).string());
  DepthImage depth = ReadDepthPng((dir / ref.depth.path).string());
  if (rgb.width != depth.width || rgb.height != depth.height) {
    throw Error(ErrorCode::kDimensionMismatch,
                "frame " + ref.rgb.stamp + ": color and depth sizes differ");
  }
  LabeledFrame frame;
  frame.timestamp = ref.rgb.timestamp;
  frame.width = rgb.width;
  frame.height = rgb.height;
  frame.color = rgb.data;
  frame.depth = std::move(depth.data);
  return frame;
}

TumSequence LoadTumSequence(const std::string& directory,
                            double association_tolerance) {
  const TumIndex index = IndexTumSequence(directory, association_tolerance);
  if (index.frames.empty()) {
    throw Error(ErrorCode::kNoAssociations,
                directory + ": no rgb/depth pairs within " +
                    std::to_string(association_tolerance) + " s");
  }
  TumSequence seq;
  seq.skipped = index.skipped;
  for (const auto& ref : index.frames) {
    seq.frames.push_back({LoadTumFrame(directory, ref), ref.ground_truth});
  }
  return seq;
}

}  // namespace semmap
