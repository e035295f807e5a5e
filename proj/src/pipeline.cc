#include "semmap/pipeline.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <ostream>
#include <sstream>

#include "semmap/error.h"
#include "semmap/evaltraj.h"
#include "semmap/ingest.h"
#include "semmap/octree_io.h"

namespace semmap {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

// Nearest label raster within tolerance, or nullptr.
const LabelMapFile* NearestLabels(const std::vector<LabelMapFile>& files,
                                  double t, double tolerance) {
  auto it = std::lower_bound(
      files.begin(), files.end(), t,
      [](const LabelMapFile& f, double v) { return f.timestamp < v; });
  const LabelMapFile* best = nullptr;
  double gap = tolerance;
  if (it != files.end() && std::abs(it->timestamp - t) <= gap) {
    best = &*it;
    gap = std::abs(it->timestamp - t);
  }
  if (it != files.begin() && std::abs(std::prev(it)->timestamp - t) <= gap) {
    best = &*std::prev(it);
  }
  return best;
}

struct FrameJob {
  const TumFrameRef* ref = nullptr;
  const LabelMapFile* labels = nullptr;
  Pose sensor_pose;
};

PreparedFrame RunJob(const FrameJob& job, const std::string& dataset,
                     const PipelineConfig& cfg) {
  try {
    LabeledFrame frame = LoadTumFrame(dataset, *job.ref);
    if (job.labels != nullptr) frame.labels = ReadSlab(job.labels->path);
    return PrepareFrame(job.sensor_pose, frame, cfg.intrinsics, cfg.stride,
                        cfg.map.max_range);
  } catch (const Error& e) {
    throw Error(e.code(), "frame " + job.ref->rgb.stamp + ": " + e.what());
  }
}

LabelTable ResolveLabelTable(const PipelineConfig& cfg,
                             const std::string& labels_dir) {
  if (!cfg.label_table.empty()) return LabelTable::Load(cfg.label_table);
  if (!labels_dir.empty()) {
    const fs::path p = fs::path(labels_dir) / "labels.txt";
    if (fs::exists(p)) return LabelTable::Load(p.string());
  }
  return LabelTable();
}

}  // namespace

void PrintSummary(std::ostream& out, const RunSummary& s) {
  out << "frames.processed " << s.frames_processed << '\n'
      << "frames.without_pose " << s.frames_without_pose << '\n'
      << "frames.without_labels " << s.frames_without_labels << '\n'
      << "rows.unassociated " << s.unassociated_rows << '\n'
      << "points.inserted " << s.insert.inserted << '\n'
      << "points.zero_depth " << s.insert.skipped_zero_depth << '\n'
      << "points.out_of_range " << s.insert.out_of_range << '\n'
      << "points.out_of_bounds " << s.insert.out_of_bounds << '\n'
      << "voxels.freed " << s.insert.freed_voxels << '\n'
      << "semantic.conflicts " << s.insert.semantic_conflicts << '\n'
      << "map.leaves " << s.leaves << '\n'
      << "bytes.written " << s.bytes_written << '\n';
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "time.prepare %.3f\ntime.integrate %.3f\ntime.prune %.3f\n"
                "time.save %.3f\n",
                s.times.prepare_s, s.times.integrate_s, s.times.prune_s,
                s.times.save_s);
  out << buf;
}

RunSummary BuildMap(const PipelineConfig& cfg, const BuildMapPaths& paths) {
  cfg.Validate();
  RunSummary summary;

  const TumIndex index =
      IndexTumSequence(paths.dataset, cfg.association_tolerance);
  summary.unassociated_rows = index.skipped;
  if (index.frames.empty()) {
    throw Error(ErrorCode::kNoAssociations,
                paths.dataset + ": no rgb/depth pairs within " +
                    std::to_string(cfg.association_tolerance) + " s");
  }
  const Trajectory trajectory = LoadTrajectory(paths.trajectory);
  std::vector<LabelMapFile> label_files;
  if (!paths.labels.empty()) label_files = IndexLabelMaps(paths.labels);

  SemanticOctree map(cfg.map, ResolveLabelTable(cfg, paths.labels));
  const AxisRemap remap = AxisRemap::FromPreset(cfg.axis_remap);
  // Points come out of back-projection in the optical frame; the remapped
  // pose expects them in the remapped body axes.
  const Pose optical_to_body(remap.matrix(), Vec3::Zero());

  std::vector<FrameJob> jobs;
  Trajectory robot;
  for (const TumFrameRef& ref : index.frames) {
    const double t = ref.rgb.timestamp;
    const auto pose = trajectory.Nearest(t, cfg.association_tolerance);
    if (!pose) {
      ++summary.frames_without_pose;
      continue;
    }
    FrameJob job;
    job.ref = &ref;
    const Pose remapped = RemapCameraToWorld(*pose, remap);
    job.sensor_pose = Compose(remapped, optical_to_body);
    if (!label_files.empty()) {
      job.labels = NearestLabels(label_files, t, cfg.association_tolerance);
    }
    if (job.labels == nullptr) ++summary.frames_without_labels;
    robot.Append(t, UavPose(remapped, cfg.camera_from_robot));
    jobs.push_back(job);
  }

  // Frames are decoded and back-projected by up to `workers` threads; the
  // map is updated by this thread only, strictly in timestamp order, so the
  // result does not depend on the worker count.
  const std::size_t batch = static_cast<std::size_t>(cfg.workers);
  for (std::size_t begin = 0; begin < jobs.size(); begin += batch) {
    const std::size_t end = std::min(jobs.size(), begin + batch);
    auto t0 = Clock::now();
    std::vector<PreparedFrame> prepared;
    if (batch == 1) {
      prepared.push_back(RunJob(jobs[begin], paths.dataset, cfg));
    } else {
      std::vector<std::future<PreparedFrame>> futures;
      for (std::size_t i = begin; i < end; ++i) {
        futures.push_back(std::async(std::launch::async, RunJob,
                                     std::cref(jobs[i]),
                                     std::cref(paths.dataset), std::cref(cfg)));
      }
      for (auto& f : futures) prepared.push_back(f.get());
    }
    summary.times.prepare_s += Seconds(t0);

    t0 = Clock::now();
    for (const PreparedFrame& f : prepared) {
      summary.insert += map.Integrate(f);
      ++summary.frames_processed;
    }
    summary.times.integrate_s += Seconds(t0);
  }

  auto t0 = Clock::now();
  map.Prune();
  summary.times.prune_s = Seconds(t0);

  t0 = Clock::now();
  summary.bytes_written = SaveMap(map, paths.output);
  if (!paths.robot_trajectory.empty()) {
    SaveTrajectory(paths.robot_trajectory, robot);
  }
  summary.times.save_s = Seconds(t0);
  summary.leaves = map.LeafCount();
  summary.points_inserted = summary.insert.inserted;
  return summary;
}

std::string FormatMetric(double v) {
  v = std::round(v * 1e12) / 1e12;
  if (v == 0.0) v = 0.0;  // drop the sign of -0
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

void RunEval(const EvalRequest& req, std::ostream& out) {
  const Trajectory est = LoadTrajectory(req.estimated);
  const Trajectory ref = LoadTrajectory(req.reference);
  const AssociatedPoses assoc =
      AssociateTrajectories(est, ref, req.tolerance);
  if (assoc.timestamps.empty()) {
    throw Error(ErrorCode::kNoAssociations,
                req.estimated + " and " + req.reference +
                    " share no timestamps within " +
                    std::to_string(req.tolerance) + " s");
  }
  std::vector<PoseResidual> residuals;
  if (req.mode == EvalMode::kAte) {
    const AteReport r = ComputeAte(est, ref, req.tolerance);
    out << "ATE.pairs " << r.residuals.size() << '\n'
        << "ATE.trans.rmse " << FormatMetric(r.rmse_translation) << '\n'
        << "ATE.rot.rmse " << FormatMetric(r.rmse_rotation) << '\n';
    residuals = r.residuals;
  } else {
    const RpeReport r = ComputeRpe(est, ref, req.delta, req.tolerance);
    out << "RPE.delta " << r.delta << '\n'
        << "RPE.pairs " << r.residuals.size() << '\n'
        << "RPE.trans.rmse " << FormatMetric(r.rmse_translation) << '\n'
        << "RPE.rot.rmse " << FormatMetric(r.rmse_rotation) << '\n';
    residuals = r.residuals;
  }
  if (!req.csv.empty()) {
    std::ofstream f(req.csv);
    if (!f) throw Error(ErrorCode::kIoError, "cannot write " + req.csv);
    WriteResidualCsv(f, residuals);
  }
}

std::size_t RunExport(const std::string& map_path, const std::string& ply_path,
                      std::optional<double> threshold) {
  const SemanticOctree map = LoadMap(map_path);
  return ExportPly(map, ply_path, threshold);
}

RunSummary RunGenSynth(const std::string& scene_path,
                       const std::string& output_dir, int frames,
                       std::uint64_t seed) {
  const SceneSpec spec = LoadSceneSpec(scene_path);
  const SyntheticSequence seq = GenerateSynthetic(spec, frames, seed);
  RunSummary s;
  s.bytes_written = WriteTumDataset(output_dir, seq);
  const std::string cam = FormatIntrinsicsConfig(spec.intrinsics);
  const fs::path cam_path = fs::path(output_dir) / "camera.cfg";
  std::ofstream f(cam_path);
  if (!f || !(f << cam)) {
    throw Error(ErrorCode::kIoError, "cannot write " + cam_path.string());
  }
  s.bytes_written += cam.size();
  s.frames_processed = seq.frames.size();
  return s;
}

std::vector<Correspondence> ParseCorrespondences(const std::string& text,
                                                 const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  std::vector<Correspondence> out;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::vector<double> v;
    double x;
    while (ls >> x) v.push_back(x);
    const bool clean = ls.eof();
    if (v.empty() && clean) continue;
    if (!clean || v.size() != 5 ||
        !std::all_of(v.begin(), v.end(),
                     [](double d) { return std::isfinite(d); })) {
      throw Error(ErrorCode::kParseError,
                  origin + ":" + std::to_string(n) + ": expected 'u v X Y Z'");
    }
    out.push_back({Vec2(v[0], v[1]), Vec3(v[2], v[3], v[4])});
  }
  return out;
}

std::vector<Correspondence> LoadCorrespondences(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ParseCorrespondences(ss.str(), path);
}

void RunInfo(const std::string& map_path, std::ostream& out) {
  const SemanticOctree map = LoadMap(map_path);
  const MapConfig& c = map.config();
  std::size_t occupied = 0, labeled = 0;
  map.ForEachLeaf([&](const LeafView& leaf) {
    if (InverseLogOdds(leaf.state->log_odds) > c.occupancy_threshold) {
      ++occupied;
    }
    if (!leaf.state->semantics.entries().empty()) ++labeled;
  });
  char buf[256];
  std::snprintf(buf, sizeof(buf), "resolution %.9g\nmax_depth %d\n"
                "origin %.9g %.9g %.9g\nl_min %.9g\nl_max %.9g\n",
                c.resolution, c.max_depth, c.origin.x(), c.origin.y(),
                c.origin.z(), c.l_min, c.l_max);
  out << buf << "labels " << map.labels().size() << '\n'
      << "nodes " << map.NodeCount() << '\n'
      << "leaves " << map.LeafCount() << '\n'
      << "leaves.occupied " << occupied << '\n'
      << "leaves.labeled " << labeled << '\n';
}

}  // namespace semmap
