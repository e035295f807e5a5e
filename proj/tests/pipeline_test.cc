#include "semmap/pipeline.h"

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "gtest/gtest.h"
#include "semmap/ingest.h"
#include "semmap/octree_io.h"
#include "test_util.h"

namespace semmap {
namespace {

using testing::ReadBytes;
using testing::TempDir;
using testing::WriteText;

constexpr char kScene[] =
    "room -2.03 -1.52 -0.04 2.02 1.53 2.46\n"
    "box table -0.61 0.37 -0.04 0.58 1.13 0.73\n"
    "box chair 1.02 -1.17 -0.04 1.43 -0.78 0.87\n"
    "waypoint -1.2 -0.8 1.3\n"
    "waypoint 1.0 -0.2 1.4\n"
    "waypoint 0.6 1.0 1.3\n"
    "intrinsics 60 60 39.5 29.5 80 60 5000\n"
    "label_flip 0.05\n";

struct Fixture {
  TempDir dir{"pipeline"};
  std::string data;
  PipelineConfig cfg;

  explicit Fixture(int frames = 10) {
    WriteText(dir / "scene.txt", kScene);
    data = dir / "data";
    RunGenSynth(dir / "scene.txt", data, frames, 9);
    cfg = LoadPipelineConfig(data + "/camera.cfg");
    cfg.map.resolution = 0.1;
  }

  BuildMapPaths Paths(const std::string& out) const {
    return {data, data + "/labels", data + "/groundtruth.txt", out, ""};
  }
};

TEST(ConfigTest, ParsesKeys) {
  const PipelineConfig c = ParsePipelineConfig(
      "# comment\nresolution = 0.05\nmax_depth=14\norigin = 1 2 3\n"
      "p_hit = 0.8  # trailing\ncarve_free_space = true\nalpha = 0.3\n"
      "k_max = 5\nfx = 100\nwidth = 64\naxis_remap = zxy\n"
      "camera_from_robot = 0.1 0 0 0 0 0 1\nstride = 2\nworkers = 4\n"
      "max_iterations = 7\n",
      "cfg");
  EXPECT_EQ(c.map.resolution, 0.05);
  EXPECT_EQ(c.map.max_depth, 14);
  EXPECT_EQ(c.map.origin, Vec3(1, 2, 3));
  EXPECT_EQ(c.map.p_hit, 0.8);
  EXPECT_TRUE(c.map.carve_free_space);
  EXPECT_EQ(c.map.fusion.alpha, 0.3);
  EXPECT_EQ(c.map.fusion.k_max, 5);
  EXPECT_EQ(c.intrinsics.fx, 100);
  EXPECT_EQ(c.intrinsics.width, 64);
  EXPECT_EQ(c.axis_remap, "zxy");
  EXPECT_EQ(c.camera_from_robot.translation(), Vec3(0.1, 0, 0));
  EXPECT_EQ(c.stride, 2);
  EXPECT_EQ(c.workers, 4);
  EXPECT_EQ(c.refine.max_iterations, 7);
}

TEST(ConfigTest, ErrorsNameLine) {
  try {
    ParsePipelineConfig("resolution = 0.1\nbogus = 1\n", "my.cfg");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParseError);
    EXPECT_NE(std::string(e.what()).find("my.cfg:2"), std::string::npos);
  }
  EXPECT_SEMMAP_ERROR(ParsePipelineConfig("stride = two\n", "c"),
                      ErrorCode::kParseError);
  EXPECT_SEMMAP_ERROR(ParsePipelineConfig("origin = 1 2\n", "c"),
                      ErrorCode::kParseError);
  EXPECT_SEMMAP_ERROR(ParsePipelineConfig("resolution\n", "c"),
                      ErrorCode::kParseError);
  PipelineConfig c;
  c.stride = 0;
  EXPECT_THROW(c.Validate(), Error);
  c = PipelineConfig();
  c.axis_remap = "sideways";
  EXPECT_THROW(c.Validate(), Error);
}

TEST(ConfigTest, IntrinsicsRoundTrip) {
  CameraIntrinsics k;
  k.fx = 517.3;
  k.fy = 516.5;
  k.cx = 318.6;
  k.cy = 255.3;
  k.width = 640;
  k.height = 480;
  k.depth_scale = 5000;
  const PipelineConfig c = ParsePipelineConfig(FormatIntrinsicsConfig(k), "k");
  EXPECT_EQ(c.intrinsics.fx, k.fx);
  EXPECT_EQ(c.intrinsics.cy, k.cy);
  EXPECT_EQ(c.intrinsics.height, 480);
}

TEST(BuildMapTest, TenFramesMatchDirectIntegration) {
  Fixture f;
  const std::string out = f.dir / "map.s3m";
  const RunSummary s = BuildMap(f.cfg, f.Paths(out));
  EXPECT_EQ(s.frames_processed, 10u);
  EXPECT_EQ(s.frames_without_pose, 0u);
  EXPECT_EQ(s.frames_without_labels, 0u);
  EXPECT_GT(s.points_inserted, 0u);
  EXPECT_EQ(s.bytes_written, ReadBytes(out).size());

  const SemanticOctree loaded = LoadMap(out);
  EXPECT_EQ(loaded.LeafCount(), s.leaves);

  // Reference: the same frames integrated by hand.
  const TumSequence seq = LoadTumSequence(f.data);
  const auto labels = LoadLabelMaps(f.data + "/labels");
  SemanticOctree direct(f.cfg.map, LabelTable::Load(f.data + "/labels/labels.txt"));
  for (const auto& tf : seq.frames) {
    LabeledFrame frame = tf.frame;
    frame.labels = labels.at(tf.frame.timestamp);
    direct.InsertFrame(*tf.ground_truth, frame, f.cfg.intrinsics, 1);
  }
  direct.Prune();
  EXPECT_EQ(SerializeMap(direct), ReadBytes(out));
  direct.ForEachLeaf([&](const LeafView& leaf) {
    const Vec3 c = direct.CellCenter(leaf.key, leaf.depth);
    EXPECT_NEAR(loaded.OccupancyAt(c), direct.OccupancyAt(c), 1e-6);
    const auto a = direct.LabelAt(c), b = loaded.LabelAt(c);
    ASSERT_EQ(a.has_value(), b.has_value());
    if (a) EXPECT_EQ(a->label, b->label);
  });
}

TEST(BuildMapTest, DeterministicAcrossRunsAndWorkers) {
  Fixture f(6);
  BuildMap(f.cfg, f.Paths(f.dir / "a.s3m"));
  BuildMap(f.cfg, f.Paths(f.dir / "b.s3m"));
  PipelineConfig threaded = f.cfg;
  threaded.workers = 3;
  BuildMap(threaded, f.Paths(f.dir / "c.s3m"));
  const auto a = ReadBytes(f.dir / "a.s3m");
  EXPECT_EQ(a, ReadBytes(f.dir / "b.s3m"));
  EXPECT_EQ(a, ReadBytes(f.dir / "c.s3m"));
}

TEST(BuildMapTest, FramesWithoutPoseAreSkipped) {
  Fixture f(6);
  const Trajectory gt = LoadTrajectory(f.data + "/groundtruth.txt");
  Trajectory partial;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (i != 2 && i != 4) partial.Append(gt[i].timestamp, gt[i].pose);
  }
  SaveTrajectory(f.dir / "partial.txt", partial);
  BuildMapPaths p = f.Paths(f.dir / "m.s3m");
  p.trajectory = f.dir / "partial.txt";
  p.robot_trajectory = f.dir / "robot.txt";
  const RunSummary s = BuildMap(f.cfg, p);
  EXPECT_EQ(s.frames_processed, 4u);
  EXPECT_EQ(s.frames_without_pose, 2u);
  EXPECT_EQ(LoadTrajectory(p.robot_trajectory).size(), 4u);
}

TEST(BuildMapTest, GeometryOnlyWithoutLabels) {
  Fixture f(3);
  BuildMapPaths p = f.Paths(f.dir / "m.s3m");
  p.labels.clear();
  const RunSummary s = BuildMap(f.cfg, p);
  EXPECT_EQ(s.frames_without_labels, 3u);
  std::size_t labeled = 0;
  LoadMap(p.output).ForEachLeaf([&](const LeafView& leaf) {
    labeled += !leaf.state->semantics.entries().empty();
  });
  EXPECT_EQ(labeled, 0u);
}

TEST(BuildMapTest, FrameErrorsCarryTimestamp) {
  Fixture f(3);
  PipelineConfig bad = f.cfg;
  bad.intrinsics.width = 81;  // images are 80 wide
  try {
    BuildMap(bad, f.Paths(f.dir / "m.s3m"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimensionMismatch);
    EXPECT_NE(std::string(e.what()).find("frame 1000"), std::string::npos)
        << e.what();
  }
  BuildMapPaths p = f.Paths(f.dir / "m.s3m");
  p.trajectory = f.dir / "missing.txt";
  EXPECT_THROW(BuildMap(f.cfg, p), Error);
}

std::string WriteTraj(const TempDir& dir, const std::string& name,
                      const Trajectory& t) {
  SaveTrajectory(dir / name, t);
  return dir / name;
}

TEST(EvalTest, IdenticalPrintsZero) {
  TempDir dir("eval");
  std::mt19937_64 rng(81);
  Trajectory t;
  for (int i = 0; i < 20; ++i) t.Append(i * 0.1, testing::RandomPose(rng));
  EvalRequest req;
  req.estimated = req.reference = WriteTraj(dir, "t.txt", t);
  req.csv = dir / "r.csv";
  std::ostringstream out;
  RunEval(req, out);
  EXPECT_EQ(out.str(),
            "ATE.pairs 20\nATE.trans.rmse 0\nATE.rot.rmse 0\n");
  std::ifstream csv(req.csv);
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header, "index,trans_err,rot_err");

  req.mode = EvalMode::kRpe;
  req.delta = 2;
  std::ostringstream rpe;
  RunEval(req, rpe);
  EXPECT_EQ(rpe.str(), "RPE.delta 2\nRPE.pairs 18\nRPE.trans.rmse 0\n"
                       "RPE.rot.rmse 0\n");
}

TEST(EvalTest, LShapedCase) {
  TempDir dir("eval_l");
  Trajectory est, ref;
  int i = 0;
  for (Vec3 p : {Vec3(0, 0, 1), Vec3(1, 0, 1), Vec3(2, 0, 1), Vec3(3, 0, 1),
                 Vec3(3, 1, 1), Vec3(3, 2, 1), Vec3(3, 3, 1)}) {
    for (double s : {0.1, -0.1}) {
      ref.Append(0.1 * i, Pose::FromTranslation(p.x(), p.y(), p.z()));
      est.Append(0.1 * i, Pose::FromTranslation(p.x() + s, p.y(), p.z()));
      ++i;
    }
  }
  EvalRequest req;
  req.estimated = WriteTraj(dir, "est.txt", est);
  req.reference = WriteTraj(dir, "ref.txt", ref);
  std::ostringstream out;
  RunEval(req, out);
  EXPECT_NE(out.str().find("ATE.trans.rmse 0.1\n"), std::string::npos)
      << out.str();
}

TEST(EvalTest, NoAssociations) {
  TempDir dir("eval_none");
  Trajectory a, b;
  for (int i = 0; i < 5; ++i) {
    a.Append(i, Pose());
    b.Append(i + 0.5, Pose());
  }
  EvalRequest req;
  req.estimated = WriteTraj(dir, "a.txt", a);
  req.reference = WriteTraj(dir, "b.txt", b);
  std::ostringstream out;
  EXPECT_SEMMAP_ERROR(RunEval(req, out), ErrorCode::kNoAssociations);
}

TEST(EvalTest, FormatMetric) {
  EXPECT_EQ(FormatMetric(0.1 + 1e-15), "0.1");
  EXPECT_EQ(FormatMetric(-1e-14), "0");
  EXPECT_EQ(FormatMetric(1.25), "1.25");
}

TEST(ExportTest, CountsAndThreshold) {
  TempDir dir("export");
  SemanticOctree map;
  SaveMap(map, dir / "empty.s3m");
  EXPECT_EQ(RunExport(dir / "empty.s3m", dir / "e.ply", std::nullopt), 0u);
  const auto ply = ReadBytes(dir / "e.ply");
  EXPECT_NE(std::string(ply.begin(), ply.end()).find("element vertex 0\n"),
            std::string::npos);

  for (int i = 0; i < 3; ++i) {
    SemanticPoint q;
    q.position = Vec3(0.1 * i + 0.05, 0.05, 0.05);
    map.InsertPoint(q);
  }
  SaveMap(map, dir / "m.s3m");
  EXPECT_EQ(RunExport(dir / "m.s3m", dir / "m.ply", std::nullopt), 3u);
  EXPECT_EQ(RunExport(dir / "m.s3m", dir / "m.ply", 0.99), 0u);
  EXPECT_SEMMAP_ERROR(RunExport(dir / "nope.s3m", dir / "m.ply", std::nullopt),
                      ErrorCode::kIoError);
}

TEST(GenSynthTest, LoadableAndSeedStable) {
  TempDir dir("gen");
  WriteText(dir / "scene.txt", kScene);
  const RunSummary s = RunGenSynth(dir / "scene.txt", dir / "a", 5, 3);
  RunGenSynth(dir / "scene.txt", dir / "b", 5, 3);
  EXPECT_EQ(s.frames_processed, 5u);
  EXPECT_EQ(LoadTumSequence(dir / "a").frames.size(), 5u);
  std::size_t total = 0;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir / "a")) {
    if (!e.is_regular_file()) continue;
    const auto rel = std::filesystem::relative(e.path(), dir / "a");
    const auto bytes = ReadBytes(e.path().string());
    total += bytes.size();
    EXPECT_EQ(bytes, ReadBytes((std::filesystem::path(dir / "b") / rel).string()))
        << rel;
  }
  EXPECT_EQ(total, s.bytes_written);
}

TEST(GenSynthTest, BoxOutsideRoomIsNamed) {
  TempDir dir("gen_bad");
  WriteText(dir / "scene.txt",
            "room 0 0 0 2 2 2\nbox piano 1.5 1.5 0 2.5 2.5 1\n"
            "waypoint 0.5 0.5 1\nwaypoint 1 0.5 1\n");
  try {
    RunGenSynth(dir / "scene.txt", dir / "out", 2, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidScene);
    EXPECT_NE(std::string(e.what()).find("piano"), std::string::npos);
  }
}

TEST(CorrespondenceTest, Parsing) {
  const auto c = ParseCorrespondences("# u v X Y Z\n1 2 3 4 5\n\n6 7 8 9 10 # x\n",
                                      "c.txt");
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[1].observed_pixel, Vec2(6, 7));
  EXPECT_EQ(c[1].world_point, Vec3(8, 9, 10));
  try {
    ParseCorrespondences("1 2 3 4 5\n1 2 3 4\n", "c.txt");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParseError);
    EXPECT_NE(std::string(e.what()).find("c.txt:2"), std::string::npos);
  }
  EXPECT_SEMMAP_ERROR(ParseCorrespondences("1 2 3 4 x\n", "c"),
                      ErrorCode::kParseError);
  CameraIntrinsics k;
  EXPECT_SEMMAP_ERROR(RefinePose(Pose(), k, c),
                      ErrorCode::kInsufficientCorrespondences);
}

TEST(InfoTest, PrintsHeaderAndCounts) {
  TempDir dir("info");
  MapConfig cfg;
  cfg.resolution = 0.2;
  SemanticOctree map(cfg, LabelTable());
  SemanticPoint q;
  q.position = Vec3(0.1, 0.1, 0.1);
  map.InsertPoint(q);
  SaveMap(map, dir / "m.s3m");
  std::ostringstream out;
  RunInfo(dir / "m.s3m", out);
  const std::string s = out.str();
  EXPECT_NE(s.find("resolution 0.2\n"), std::string::npos);
  EXPECT_NE(s.find("leaves 1\n"), std::string::npos);
  EXPECT_NE(s.find("leaves.occupied 1\n"), std::string::npos);
  EXPECT_NE(s.find("leaves.labeled 0\n"), std::string::npos);
}

}  // namespace
}  // namespace semmap
