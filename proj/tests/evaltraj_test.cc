#include "semmap/evaltraj.h"

#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Geometry>

#include "gtest/gtest.h"
#include "test_util.h"

namespace semmap {
namespace {

Trajectory FromPoses(const std::vector<Pose>& poses, double t0 = 0.0) {
  Trajectory t;
  for (std::size_t i = 0; i < poses.size(); ++i) t.Append(t0 + 0.1 * i, poses[i]);
  return t;
}

Trajectory RandomWalk(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> step(0.0, 0.2);
  std::vector<Pose> poses = {testing::RandomPose(rng, 1.0)};
  for (int i = 1; i < n; ++i) {
    const Pose d(ExpSO3(Vec3(step(rng), step(rng), step(rng))),
                 Vec3(step(rng), step(rng), step(rng)));
    poses.push_back(Compose(poses.back(), d));
  }
  return FromPoses(poses);
}

Trajectory Transformed(const Pose& g, const Trajectory& t) {
  Trajectory out;
  for (std::size_t i = 0; i < t.size(); ++i) {
    out.Append(t[i].timestamp, Compose(g, t[i].pose));
  }
  return out;
}

TEST(UmeyamaTest, IdentityAndKnownTransform) {
  std::mt19937_64 rng(71);
  std::uniform_real_distribution<double> u(-3, 3);
  std::vector<Vec3> a, b;
  const Pose g = testing::RandomPose(rng);
  for (int i = 0; i < 30; ++i) {
    a.emplace_back(u(rng), u(rng), u(rng));
    b.push_back(g * a.back());
  }
  const Pose same = AlignUmeyama(a, a);
  EXPECT_LT((same.rotation() - Mat3::Identity()).norm(), 1e-12);
  EXPECT_LT(same.translation().norm(), 1e-12);
  const Pose found = AlignUmeyama(a, b);
  EXPECT_LT((found.rotation() - g.rotation()).norm(), 1e-10);
  EXPECT_LT((found.translation() - g.translation()).norm(), 1e-10);
}

TEST(UmeyamaTest, AgreesWithEigenUnderNoise) {
  std::mt19937_64 rng(72);
  std::uniform_real_distribution<double> u(-3, 3);
  std::normal_distribution<double> noise(0, 0.3);
  for (int trial = 0; trial < 50; ++trial) {
    const Pose g = testing::RandomPose(rng);
    const int n = 4 + trial % 20;
    std::vector<Vec3> a, b;
    Eigen::Matrix3Xd ma(3, n), mb(3, n);
    for (int i = 0; i < n; ++i) {
      a.emplace_back(u(rng), u(rng), u(rng));
      b.push_back(g * a.back() + Vec3(noise(rng), noise(rng), noise(rng)));
      ma.col(i) = a.back();
      mb.col(i) = b.back();
    }
    const Eigen::Matrix4d ref = Eigen::umeyama(ma, mb, false);
    const Pose got = AlignUmeyama(a, b);
    EXPECT_LT((got.rotation() - ref.topLeftCorner<3, 3>()).norm(), 1e-9);
    EXPECT_LT((got.translation() - ref.topRightCorner<3, 1>()).norm(), 1e-9);
    EXPECT_NEAR(got.rotation().determinant(), 1.0, 1e-12);
  }
}

TEST(UmeyamaTest, Errors) {
  const std::vector<Vec3> line = {Vec3(0, 0, 0), Vec3(1, 1, 1), Vec3(2, 2, 2),
                                  Vec3(3, 3, 3)};
  EXPECT_SEMMAP_ERROR(AlignUmeyama(line, line),
                      ErrorCode::kDegenerateConfiguration);
  const std::vector<Vec3> two = {Vec3(0, 0, 0), Vec3(1, 0, 0)};
  EXPECT_SEMMAP_ERROR(AlignUmeyama(two, two), ErrorCode::kDegenerateConfiguration);
  const std::vector<Vec3> three = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)};
  EXPECT_SEMMAP_ERROR(AlignUmeyama(three, two), ErrorCode::kLengthMismatch);
  // Planar sets are fine.
  EXPECT_NO_THROW(AlignUmeyama(three, three));
}

TEST(AteTest, IdenticalIsZero) {
  std::mt19937_64 rng(73);
  const Trajectory t = RandomWalk(rng, 40);
  const AteReport r = ComputeAte(t, t, 0.02);
  EXPECT_EQ(r.residuals.size(), 40u);
  EXPECT_LT(r.rmse_translation, 1e-12);
  EXPECT_LT(r.rmse_rotation, 1e-7);  // acos-like flatness near zero angle
}

TEST(AteTest, ConstantOffsetIsAbsorbed) {
  std::mt19937_64 rng(74);
  const Trajectory ref = RandomWalk(rng, 30);
  Trajectory est;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    est.Append(ref[i].timestamp,
               Pose(ref[i].pose.rotation(),
                    ref[i].pose.translation() + Vec3(0.3, -1.0, 2.0)));
  }
  EXPECT_LT(ComputeAte(est, ref, 0.02).rmse_translation, 1e-9);
}

TEST(AteTest, RigidInvariance) {
  std::mt19937_64 rng(75);
  for (int trial = 0; trial < 20; ++trial) {
    const Trajectory ref = RandomWalk(rng, 25);
    const AteReport self = ComputeAte(Transformed(testing::RandomPose(rng), ref),
                                      ref, 0.02);
    EXPECT_LT(self.rmse_translation, 1e-9);

    // Noisy estimate: moving it rigidly must not change the error.
    std::normal_distribution<double> n(0, 0.05);
    Trajectory est;
    for (std::size_t i = 0; i < ref.size(); ++i) {
      est.Append(ref[i].timestamp,
                 Pose(ExpSO3(Vec3(n(rng), n(rng), n(rng))) * ref[i].pose.rotation(),
                      ref[i].pose.translation() + Vec3(n(rng), n(rng), n(rng))));
    }
    const AteReport a = ComputeAte(est, ref, 0.02);
    const AteReport b =
        ComputeAte(Transformed(testing::RandomPose(rng), est), ref, 0.02);
    EXPECT_NEAR(a.rmse_translation, b.rmse_translation, 1e-9);
    EXPECT_NEAR(a.rmse_rotation, b.rmse_rotation, 1e-9);
    double sq = 0;
    for (const auto& res : a.residuals) sq += res.translation * res.translation;
    EXPECT_NEAR(a.rmse_translation * a.rmse_translation, sq / a.residuals.size(),
                1e-12);
  }
}

// L-shaped path on z = 1 with +-0.1 m x offsets alternating per pose.
void LShape(bool dwell, Trajectory* est, Trajectory* ref) {
  std::vector<Vec3> path;
  for (int i = 0; i <= 4; ++i) path.emplace_back(i, 0, 1);
  for (int i = 1; i <= 4; ++i) path.emplace_back(4, i, 1);
  if (dwell) {
    std::vector<Vec3> twice;
    for (const Vec3& p : path) twice.insert(twice.end(), {p, p});
    path = twice;
  }
  for (std::size_t i = 0; i < path.size(); ++i) {
    const double s = i % 2 == 0 ? 0.1 : -0.1;
    ref->Append(0.1 * i, Pose::FromTranslation(path[i].x(), path[i].y(), 1));
    est->Append(0.1 * i,
                Pose::FromTranslation(path[i].x() + s, path[i].y(), 1));
  }
}

// Brute-force planar ATE: both sets lie on z = 1 so the optimal rotation is
// a yaw; scan it, refine by golden section, translation from centroids.
double BruteForcePlanarAte(const Trajectory& est, const Trajectory& ref) {
  const std::size_t n = est.size();
  Vec3 ce = Vec3::Zero(), cr = Vec3::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    ce += est[i].pose.translation();
    cr += ref[i].pose.translation();
  }
  ce /= n;
  cr /= n;
  auto cost = [&](double yaw) {
    const Mat3 r = Eigen::AngleAxisd(yaw, Vec3::UnitZ()).toRotationMatrix();
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) {
      s += (ref[i].pose.translation() - cr -
            r * (est[i].pose.translation() - ce)).squaredNorm();
    }
    return s;
  };
  double best = 0, best_cost = cost(0);
  for (int i = -20000; i <= 20000; ++i) {
    const double y = M_PI * i / 20000;
    if (cost(y) < best_cost) best_cost = cost(best = y);
  }
  double lo = best - M_PI / 20000, hi = best + M_PI / 20000;
  const double g = (std::sqrt(5.0) - 1) / 2;
  for (int it = 0; it < 200; ++it) {
    const double a = hi - g * (hi - lo), b = lo + g * (hi - lo);
    (cost(a) < cost(b) ? hi : lo) = (cost(a) < cost(b) ? b : a);
  }
  return std::sqrt(cost((lo + hi) / 2) / n);
}

TEST(AteTest, LShapedAlternatingOffsets) {
  Trajectory est, ref;
  LShape(true, &est, &ref);
  const double oracle = BruteForcePlanarAte(est, ref);
  EXPECT_NEAR(oracle, 0.1, 1e-9);
  const AteReport r = ComputeAte(est, ref, 0.02);
  EXPECT_NEAR(r.rmse_translation, 0.1, 1e-6);
  EXPECT_LT(r.rmse_rotation, 1e-7);

  // Single pass: the offsets correlate with the path, the fit rotates a bit.
  Trajectory est1, ref1;
  LShape(false, &est1, &ref1);
  const double oracle1 = BruteForcePlanarAte(est1, ref1);
  EXPECT_LT(oracle1, 0.1);
  EXPECT_NEAR(ComputeAte(est1, ref1, 0.02).rmse_translation, oracle1, 1e-6);
}

TEST(AteTest, TooFewAssociations) {
  Trajectory a, b;
  a.Append(0.0, Pose());
  a.Append(1.0, Pose());
  a.Append(2.0, Pose());
  b.Append(0.0, Pose());
  b.Append(1.0, Pose());
  b.Append(5.0, Pose());
  EXPECT_SEMMAP_ERROR(ComputeAte(a, b, 0.02), ErrorCode::kTooFewAssociations);
}

TEST(RpeTest, IdenticalAndGlobalTransformAreZero) {
  std::mt19937_64 rng(76);
  const Trajectory t = RandomWalk(rng, 30);
  const RpeReport same = ComputeRpe(t, t, 1, 0.02);
  EXPECT_EQ(same.residuals.size(), 29u);
  EXPECT_EQ(same.rmse_translation, 0.0);
  for (int trial = 0; trial < 10; ++trial) {
    const Trajectory moved = Transformed(testing::RandomPose(rng), t);
    const RpeReport r = ComputeRpe(moved, t, 3, 0.02);
    EXPECT_EQ(r.residuals.size(), 27u);
    EXPECT_LT(r.rmse_translation, 1e-9);
    EXPECT_LT(r.rmse_rotation, 1e-7);
  }
}

TEST(RpeTest, InvariantUnderIndependentGlobalTransforms) {
  std::mt19937_64 rng(77);
  const Trajectory ref = RandomWalk(rng, 20);
  const Trajectory est = RandomWalk(rng, 20);
  const RpeReport a = ComputeRpe(est, ref, 2, 0.02);
  const RpeReport b = ComputeRpe(Transformed(testing::RandomPose(rng), est),
                                 Transformed(testing::RandomPose(rng), ref), 2,
                                 0.02);
  EXPECT_NEAR(a.rmse_translation, b.rmse_translation, 1e-9);
  EXPECT_NEAR(a.rmse_rotation, b.rmse_rotation, 1e-9);
}

TEST(RpeTest, StepLengthError) {
  Trajectory ref, est;
  for (int i = 0; i < 10; ++i) {
    ref.Append(i, Pose::FromTranslation(1.0 * i, 0, 0));
    est.Append(i, Pose::FromTranslation(1.1 * i, 0, 0));
  }
  const RpeReport r = ComputeRpe(est, ref, 1, 0.02);
  EXPECT_EQ(r.residuals.size(), 9u);
  EXPECT_NEAR(r.rmse_translation, 0.1, 1e-9);
  EXPECT_EQ(r.rmse_rotation, 0.0);
  EXPECT_EQ(r.residuals[0].timestamp, 0.0);
  EXPECT_NEAR(ComputeRpe(est, ref, 4, 0.02).rmse_translation, 0.4, 1e-9);
}

TEST(RpeTest, Errors) {
  Trajectory t;
  t.Append(0, Pose());
  t.Append(1, Pose());
  EXPECT_SEMMAP_ERROR(ComputeRpe(t, t, 0, 0.02), ErrorCode::kBadDelta);
  EXPECT_SEMMAP_ERROR(ComputeRpe(t, t, 2, 0.02), ErrorCode::kTooFewAssociations);
  EXPECT_NO_THROW(ComputeRpe(t, t, 1, 0.02));
}

TEST(CsvTest, Format) {
  std::ostringstream out;
  WriteResidualCsv(out, {{0.0, 0.5, 0.25}, {1.0, 0.125, 0.0}});
  EXPECT_EQ(out.str(), "index,trans_err,rot_err\n0,0.5,0.25\n1,0.125,0\n");
}

TEST(AssociateTrajectoriesTest, PairsByTimestamp) {
  Trajectory a, b;
  a.Append(0.00, Pose::FromTranslation(1, 0, 0));
  a.Append(1.00, Pose::FromTranslation(2, 0, 0));
  b.Append(0.01, Pose::FromTranslation(3, 0, 0));
  b.Append(2.00, Pose::FromTranslation(4, 0, 0));
  const AssociatedPoses p = AssociateTrajectories(a, b, 0.02);
  ASSERT_EQ(p.timestamps.size(), 1u);
  EXPECT_EQ(p.estimated[0].translation().x(), 1);
  EXPECT_EQ(p.reference[0].translation().x(), 3);
}

}  // namespace
}  // namespace semmap
