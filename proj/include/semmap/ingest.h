#ifndef SEMMAP_INGEST_H_
#define SEMMAP_INGEST_H_

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "semmap/frame.h"
#include "semmap/geom.h"
#include "semmap/semantic.h"

namespace semmap {

struct StampedPose {
  double timestamp = 0.0;
  Pose pose;
};

// Poses with strictly increasing timestamps.
class Trajectory {
 public:
  Trajectory() = default;

  // Throws kInvalidArgument unless t is later than the last entry.
  void Append(double timestamp, const Pose& pose);

  const std::vector<StampedPose>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const StampedPose& operator[](std::size_t i) const { return entries_[i]; }
  std::vector<double> Timestamps() const;

  // Pose of the entry nearest to t, if within tolerance.
  std::optional<Pose> Nearest(double t, double tolerance) const;
  // Linear in translation, slerp in rotation between the bracketing entries.
  // Outside the covered span, the end pose is returned when t is within
  // `tolerance` of it.
  std::optional<Pose> Interpolate(double t, double tolerance = 0.0) const;

 private:
  std::vector<StampedPose> entries_;
};

// TUM text format: "timestamp tx ty tz qx qy qz qw", '#' comments.
// Throws kParseError naming origin and line.
Trajectory ParseTrajectory(const std::string& text, const std::string& origin);
Trajectory LoadTrajectory(const std::string& path);
std::string FormatTumPose(double timestamp, const Pose& pose);
void SaveTrajectory(const std::string& path, const Trajectory& trajectory);

struct TimestampMatch {
  std::size_t first = 0;
  std::size_t second = 0;
};

struct AssociationResult {
  // Ascending by the first sequence's timestamp.
  std::vector<TimestampMatch> matches;
  // Rows of either sequence left without a partner.
  std::size_t unmatched = 0;
};

// Greedy nearest-timestamp matching: candidate pairs within tolerance are
// accepted in order of increasing gap, each row used at most once.
AssociationResult AssociateTimestamps(std::span<const double> first,
                                      std::span<const double> second,
                                      double tolerance);

// TUM index line "timestamp filename".
struct IndexEntry {
  double timestamp = 0.0;
  std::string stamp;  // timestamp text as written in the file
  std::string path;   // relative to the sequence directory
};

std::vector<IndexEntry> ParseImageIndex(const std::string& text,
                                        const std::string& origin);

struct TumFrameRef {
  IndexEntry rgb;
  IndexEntry depth;
  std::optional<Pose> ground_truth;
};

struct TumIndex {
  std::string directory;
  std::vector<TumFrameRef> frames;
  std::size_t skipped = 0;
  std::optional<Trajectory> ground_truth;
};

// Reads rgb.txt, depth.txt and optional groundtruth.txt and associates
// rows. Throws kMissingIndexFile; an empty association is not an error here.
TumIndex IndexTumSequence(const std::string& directory,
                          double association_tolerance = 0.02);

// Decodes both images of one associated row into an unlabeled frame
// stamped with the rgb time. Throws kUnreadableImage or kDimensionMismatch.
LabeledFrame LoadTumFrame(const std::string& directory,
                          const TumFrameRef& ref);

struct TumSequenceFrame {
  LabeledFrame frame;
  std::optional<Pose> ground_truth;
};

struct TumSequence {
  std::vector<TumSequenceFrame> frames;
  std::size_t skipped = 0;
};

// Index + decode all frames. Throws kNoAssociations when nothing matched.
TumSequence LoadTumSequence(const std::string& directory,
                            double association_tolerance = 0.02);

// ".slab" label raster: little-endian, magic "S3MSLAB1", u32 width,
// u32 height, u8 k, then row-major pixels of k (u16 label, f32 prob)
// records; label 0xFFFF marks an empty slot.
std::vector<std::uint8_t> EncodeSlab(const LabelRaster& raster);
// Throws kBadHeader, kTruncatedFile or kProbabilityOverflow (a pixel whose
// probabilities leave [0, 1] or sum above 1 + 1e-6).
LabelRaster DecodeSlab(std::span<const std::uint8_t> bytes,
                       const std::string& origin = "slab");
LabelRaster ReadSlab(const std::string& path);
void WriteSlab(const std::string& path, const LabelRaster& raster);

struct LabelMapFile {
  double timestamp = 0.0;
  std::string path;
};

// "<timestamp>.slab" files of a directory, ascending by time.
std::vector<LabelMapFile> IndexLabelMaps(const std::string& directory);
std::map<double, LabelRaster> LoadLabelMaps(const std::string& directory);

// Synthetic scene standing in for a simulator: an axis-aligned room plus
// labeled axis-aligned boxes, observed along a waypoint path.
struct SceneBox {
  std::string label;
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();
};

struct SceneSpec {
  Vec3 room_min = Vec3::Zero();
  Vec3 room_max = Vec3::Zero();
  std::vector<SceneBox> boxes;
  std::vector<Vec3> waypoints;
  CameraIntrinsics intrinsics;
  double depth_sigma = 0.0;
  double label_flip = 0.0;
  // Optional explicit colors by class name.
  std::map<std::string, Rgb> colors;

  // Throws kEmptyScene, kDegenerateWaypoints or kInvalidScene (naming the
  // offending box or waypoint).
  void Validate() const;
  // Room faces are classes "floor", "ceiling", "wall" (ids 0..2), then box
  // classes in order of first appearance.
  LabelTable MakeLabelTable() const;
};

// Line format, '#' comments:
//   room x0 y0 z0 x1 y1 z1
//   box <class> x0 y0 z0 x1 y1 z1
//   waypoint x y z
//   intrinsics fx fy cx cy width height depth_scale
//   depth_sigma s
//   label_flip p
//   color <class> r g b
SceneSpec ParseSceneSpec(const std::string& text, const std::string& origin);
SceneSpec LoadSceneSpec(const std::string& path);

struct SyntheticSequence {
  std::vector<LabeledFrame> frames;
  Trajectory ground_truth;  // world-from-camera (optical axes)
  LabelTable labels;
  // Per frame, per pixel: class of the surface the ray hit (noise free).
  std::vector<std::vector<LabelId>> true_labels;
};

// Camera moves along the waypoint polyline at constant speed, looking along
// the current segment with world +z up. Depth is the nearest ray-box hit
// (room walls included), perturbed by N(0, depth_sigma) and quantized.
// Each pixel carries one label at probability 1 - label_flip; with that
// probability the label is swapped for a uniformly drawn other class.
SyntheticSequence GenerateSynthetic(const SceneSpec& spec, int frame_count,
                                    std::uint64_t seed);

// Writes rgb/, depth/, rgb.txt, depth.txt, groundtruth.txt and labels/
// (".slab" rasters plus labels.txt) under `directory`.
// Returns bytes written.
std::size_t WriteTumDataset(const std::string& directory,
                            const SyntheticSequence& sequence);

// Fixed-precision timestamp text used for file names and index files.
std::string FormatTimestamp(double t);

}  // namespace semmap

#endif  // SEMMAP_INGEST_H_
