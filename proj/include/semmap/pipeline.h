#ifndef SEMMAP_PIPELINE_H_
#define SEMMAP_PIPELINE_H_

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "semmap/geom.h"
#include "semmap/octree.h"
#include "semmap/pnp.h"

namespace semmap {

// Everything a mapping run needs besides file paths. Text form is one
// "key = value" per line ('#' comments); see README for the key list.
struct PipelineConfig {
  MapConfig map;
  CameraIntrinsics intrinsics;
  // "none", "zxy" or "ros-optical", applied to trajectory poses.
  std::string axis_remap = "none";
  Pose camera_from_robot;
  int stride = 1;
  double association_tolerance = 0.02;
  // Frame decoding/back-projection threads; map updates stay sequential.
  int workers = 1;
  std::string label_table;
  RefineConfig refine;

  void Validate() const;
};

// Throws kParseError naming `where` for unknown keys or bad values.
void ApplyConfigValue(PipelineConfig& cfg, const std::string& key,
                      const std::string& value, const std::string& where);
// Accepts "key=value" or "key = value".
void ApplyConfigAssignment(PipelineConfig& cfg, const std::string& assignment,
                           const std::string& where);
PipelineConfig ParsePipelineConfig(const std::string& text,
                                   const std::string& origin,
                                   PipelineConfig base = {});
PipelineConfig LoadPipelineConfig(const std::string& path,
                                  PipelineConfig base = {});
// Intrinsics in config syntax, loadable by LoadPipelineConfig.
std::string FormatIntrinsicsConfig(const CameraIntrinsics& k);

struct StageTimes {
  double prepare_s = 0.0;
  double integrate_s = 0.0;
  double prune_s = 0.0;
  double save_s = 0.0;
};

struct RunSummary {
  std::size_t frames_processed = 0;
  std::size_t frames_without_pose = 0;
  std::size_t frames_without_labels = 0;
  std::size_t unassociated_rows = 0;
  std::size_t points_inserted = 0;
  std::size_t leaves = 0;
  std::size_t bytes_written = 0;
  InsertStats insert;
  StageTimes times;
};

void PrintSummary(std::ostream& out, const RunSummary& s);

struct BuildMapPaths {
  std::string dataset;
  // Directory of ".slab" rasters; empty = geometry only.
  std::string labels;
  std::string trajectory;
  std::string output;
  // Optional: robot poses (camera pose composed with camera_from_robot).
  std::string robot_trajectory;
};

// Streams associated frames in timestamp order, looks up each pose in the
// trajectory (nearest stamp within tolerance, otherwise the frame is
// skipped), remaps it, integrates the frame, prunes and writes the map.
RunSummary BuildMap(const PipelineConfig& cfg, const BuildMapPaths& paths);

enum class EvalMode { kAte, kRpe };

struct EvalRequest {
  std::string estimated;
  std::string reference;
  EvalMode mode = EvalMode::kAte;
  int delta = 1;
  double tolerance = 0.02;
  std::string csv;  // empty = no CSV
};

// Prints "ATE.trans.rmse <v>" style lines. Throws kNoAssociations when the
// two files share no timestamps.
void RunEval(const EvalRequest& req, std::ostream& out);

// Returns the number of exported vertices.
std::size_t RunExport(const std::string& map_path, const std::string& ply_path,
                      std::optional<double> threshold);

// Writes a TUM-layout dataset plus labels/ and camera.cfg.
RunSummary RunGenSynth(const std::string& scene_path,
                       const std::string& output_dir, int frames,
                       std::uint64_t seed);

// "u v X Y Z" per line, '#' comments.
std::vector<Correspondence> ParseCorrespondences(const std::string& text,
                                                 const std::string& origin);
std::vector<Correspondence> LoadCorrespondences(const std::string& path);

void RunInfo(const std::string& map_path, std::ostream& out);

// Rounds to 12 decimals so that numerically-zero errors print as 0.
std::string FormatMetric(double v);

}  // namespace semmap

#endif  // SEMMAP_PIPELINE_H_
