// Command-line front end: build-map, eval, export, gen-synth, refine, info.
//
// Exit codes: 0 success, 2 usage error, 10 + ErrorCode for library errors,
// 1 anything else.

#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "semmap/error.h"
#include "semmap/ingest.h"
#include "semmap/pipeline.h"
#include "semmap/pnp.h"

namespace {

using semmap::Error;
using semmap::ErrorCode;

semmap::PipelineConfig ResolveConfig(const std::string& path,
                                     const std::vector<std::string>& sets) {
  semmap::PipelineConfig cfg;
  if (!path.empty()) cfg = semmap::LoadPipelineConfig(path);
  for (const auto& s : sets) {
    semmap::ApplyConfigAssignment(cfg, s, "--set");
  }
  cfg.Validate();
  return cfg;
}

semmap::Pose ParsePoseText(const std::string& text) {
  std::istringstream in(text);
  std::vector<double> v;
  double x;
  while (in >> x) v.push_back(x);
  if (!in.eof() || v.size() != 7) {
    throw Error(ErrorCode::kParseError,
                "--initial: expected 'tx ty tz qx qy qz qw', got '" + text +
                    "'");
  }
  return semmap::Pose::FromQuaternion(
      Eigen::Quaterniond(v[6], v[3], v[4], v[5]), semmap::Vec3(v[0], v[1], v[2]));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semantic octree mapping over RGB-D sequences"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> sets;
  auto add_config = [&](CLI::App* cmd) {
    cmd->add_option("-c,--config", config_path, "key = value config file")
        ->check(CLI::ExistingFile);
    cmd->add_option("--set", sets, "override, e.g. --set resolution=0.05");
  };

  // build-map
  semmap::BuildMapPaths bm;
  bool quiet = false;
  auto* build = app.add_subcommand("build-map", "integrate a sequence into a map");
  build->add_option("--dataset", bm.dataset, "TUM-layout directory")->required();
  build->add_option("--trajectory", bm.trajectory, "TUM pose file")->required();
  build->add_option("--labels", bm.labels, "directory of <timestamp>.slab");
  build->add_option("-o,--output", bm.output, "map file (.s3m)")->required();
  build->add_option("--robot-trajectory", bm.robot_trajectory,
                    "write robot poses here");
  build->add_flag("-q,--quiet", quiet, "no summary");
  add_config(build);

  // eval
  semmap::EvalRequest ev;
  std::string mode = "ate";
  auto* eval = app.add_subcommand("eval", "ATE/RPE against a reference");
  eval->add_option("--estimated", ev.estimated)->required();
  eval->add_option("--reference", ev.reference)->required();
  eval->add_option("--mode", mode)->check(CLI::IsMember({"ate", "rpe"}));
  eval->add_option("--delta", ev.delta, "RPE frame offset");
  eval->add_option("--tolerance", ev.tolerance, "timestamp tolerance (s)");
  eval->add_option("--csv", ev.csv, "per-pose residuals");

  // export
  std::string map_path, ply_path;
  std::optional<double> threshold;
  auto* exp = app.add_subcommand("export", "write occupied leaves as PLY");
  exp->add_option("--map", map_path)->required()->check(CLI::ExistingFile);
  exp->add_option("-o,--output", ply_path)->required();
  exp->add_option("--threshold", threshold, "occupancy probability cutoff");

  // gen-synth
  std::string scene_path, out_dir;
  int frames = 100;
  std::uint64_t seed = 1;
  auto* gen = app.add_subcommand("gen-synth", "render a synthetic sequence");
  gen->add_option("--scene", scene_path)->required()->check(CLI::ExistingFile);
  gen->add_option("-o,--output", out_dir)->required();
  gen->add_option("--frames", frames)->check(CLI::PositiveNumber);
  gen->add_option("--seed", seed);

  // refine
  std::string corr_path, initial;
  auto* refine = app.add_subcommand("refine", "refine a pose from 2D-3D matches");
  refine->add_option("--correspondences", corr_path, "'u v X Y Z' lines")
      ->required()
      ->check(CLI::ExistingFile);
  refine->add_option("--initial", initial, "tx ty tz qx qy qz qw")->required();
  add_config(refine);

  // info
  std::string info_map;
  auto* info = app.add_subcommand("info", "summarize a map file");
  info->add_option("map", info_map)->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help lands here too, with code 0.
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (build->parsed()) {
      const auto cfg = ResolveConfig(config_path, sets);
      const auto summary = semmap::BuildMap(cfg, bm);
      if (!quiet) semmap::PrintSummary(std::cout, summary);
    } else if (eval->parsed()) {
      ev.mode = mode == "rpe" ? semmap::EvalMode::kRpe : semmap::EvalMode::kAte;
      semmap::RunEval(ev, std::cout);
    } else if (exp->parsed()) {
      const std::size_t n = semmap::RunExport(map_path, ply_path, threshold);
      std::cout << "vertices " << n << '\n';
    } else if (gen->parsed()) {
      const auto s = semmap::RunGenSynth(scene_path, out_dir, frames, seed);
      std::cout << "frames " << s.frames_processed << '\n'
                << "bytes.written " << s.bytes_written << '\n';
    } else if (refine->parsed()) {
      const auto cfg = ResolveConfig(config_path, sets);
      const auto corrs = semmap::LoadCorrespondences(corr_path);
      const auto r = semmap::RefinePose(ParsePoseText(initial), cfg.intrinsics,
                                        corrs, cfg.refine);
      std::cout << semmap::FormatTumPose(0.0, r.pose) << '\n';
      std::printf("cost.initial %.9g\ncost.final %.9g\niterations %d\n"
                  "converged %s\n",
                  r.initial_cost, r.final_cost, r.iterations,
                  r.converged ? "true" : "false");
    } else if (info->parsed()) {
      semmap::RunInfo(info_map, std::cout);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 10 + static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
