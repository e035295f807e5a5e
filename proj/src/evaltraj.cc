#include "semmap/evaltraj.h"

#include <cmath>
#include <iomanip>
#include <ostream>

#include <Eigen/SVD>

#include "semmap/error.h"

namespace semmap {

AssociatedPoses AssociateTrajectories(const Trajectory& estimated,
                                      const Trajectory& reference,
                                      double tolerance) {
  const auto est_t = estimated.Timestamps();
  const auto ref_t = reference.Timestamps();
  const AssociationResult assoc = AssociateTimestamps(est_t, ref_t, tolerance);
  AssociatedPoses out;
  for (const auto& m : assoc.matches) {
    out.timestamps.push_back(est_t[m.first]);
    out.estimated.push_back(estimated[m.first].pose);
    out.reference.push_back(reference[m.second].pose);
  }
  return out;
}

Pose AlignUmeyama(std::span<const Vec3> estimated,
                  std::span<const Vec3> reference) {
  if (estimated.size() != reference.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                std::to_string(estimated.size()) + " estimated vs " +
                    std::to_string(reference.size()) + " reference points");
  }
  const std::size_t n = estimated.size();
  if (n < 3) {
    throw Error(ErrorCode::kDegenerateConfiguration,
                "alignment needs at least 3 points");
  }
  Vec3 mu_est = Vec3::Zero(), mu_ref = Vec3::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    mu_est += estimated[i];
    mu_ref += reference[i];
  }
  mu_est /= static_cast<double>(n);
  mu_ref /= static_cast<double>(n);

  Mat3 cov = Mat3::Zero();
  Mat3 spread_est = Mat3::Zero();
  Mat3 spread_ref = Mat3::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 e = estimated[i] - mu_est;
    const Vec3 r = reference[i] - mu_ref;
    cov += r * e.transpose();
    spread_est += e * e.transpose();
    spread_ref += r * r.transpose();
  }
  cov /= static_cast<double>(n);

  // Collinear or coincident point sets leave a rotation about the line free.
  for (const Mat3* spread : {&spread_est, &spread_ref}) {
    const Eigen::JacobiSVD<Mat3> s(*spread);
    const auto& sv = s.singularValues();
    if (!(sv(0) > 0.0) || sv(1) <= 1e-12 * sv(0)) {
      throw Error(ErrorCode::kDegenerateConfiguration,
                  "positions are collinear or coincident");
    }
  }

  const Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Mat3& u = svd.matrixU();
  const Mat3& v = svd.matrixV();
  Mat3 s = Mat3::Identity();
  if (u.determinant() * v.determinant() < 0.0) s(2, 2) = -1.0;
  const Mat3 r = u * s * v.transpose();
  return Pose(r, mu_ref - r * mu_est);
}

Pose AlignUmeyama(const Trajectory& estimated, const Trajectory& reference,
                  double tolerance) {
  const AssociatedPoses a =
      AssociateTrajectories(estimated, reference, tolerance);
  std::vector<Vec3> est, ref;
  for (std::size_t i = 0; i < a.estimated.size(); ++i) {
    est.push_back(a.estimated[i].translation());
    ref.push_back(a.reference[i].translation());
  }
  return AlignUmeyama(est, ref);
}

namespace {

double Rmse(const std::vector<PoseResidual>& r, double PoseResidual::*field) {
  if (r.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& e : r) sum += (e.*field) * (e.*field);
  return std::sqrt(sum / static_cast<double>(r.size()));
}

}  // namespace

AteReport ComputeAte(const Trajectory& estimated, const Trajectory& reference,
                     double tolerance) {
  const AssociatedPoses a =
      AssociateTrajectories(estimated, reference, tolerance);
  if (a.estimated.size() < 3) {
    throw Error(ErrorCode::kTooFewAssociations,
                std::to_string(a.estimated.size()) +
                    " associated poses, need at least 3");
  }
  std::vector<Vec3> est, ref;
  for (std::size_t i = 0; i < a.estimated.size(); ++i) {
    est.push_back(a.estimated[i].translation());
    ref.push_back(a.reference[i].translation());
  }
  AteReport report;
  report.alignment = AlignUmeyama(est, ref);
  for (std::size_t i = 0; i < a.estimated.size(); ++i) {
    const Pose aligned = Compose(report.alignment, a.estimated[i]);
    PoseResidual res;
    res.timestamp = a.timestamps[i];
    res.translation =
        (a.reference[i].translation() - aligned.translation()).norm();
    res.rotation = RotationAngle(a.reference[i].rotation().transpose() *
                                 aligned.rotation());
    report.residuals.push_back(res);
  }
  report.rmse_translation = Rmse(report.residuals, &PoseResidual::translation);
  report.rmse_rotation = Rmse(report.residuals, &PoseResidual::rotation);
  return report;
}

RpeReport ComputeRpe(const Trajectory& estimated, const Trajectory& reference,
                     int delta, double tolerance) {
  if (delta < 1) {
    throw Error(ErrorCode::kBadDelta,
                "delta must be >= 1, got " + std::to_string(delta));
  }
  const AssociatedPoses a =
      AssociateTrajectories(estimated, reference, tolerance);
  const std::size_t n = a.estimated.size();
  if (n < static_cast<std::size_t>(delta) + 1) {
    throw Error(ErrorCode::kTooFewAssociations,
                std::to_string(n) + " associated poses, need at least " +
                    std::to_string(delta + 1));
  }
  RpeReport report;
  report.delta = delta;
  for (std::size_t i = 0; i + delta < n; ++i) {
    const Pose ref_rel =
        Compose(Invert(a.reference[i]), a.reference[i + delta]);
    const Pose est_rel =
        Compose(Invert(a.estimated[i]), a.estimated[i + delta]);
    const Pose err = Compose(Invert(ref_rel), est_rel);
    report.residuals.push_back({a.timestamps[i], err.translation().norm(),
                                RotationAngle(err.rotation())});
  }
  report.rmse_translation = Rmse(report.residuals, &PoseResidual::translation);
  report.rmse_rotation = Rmse(report.residuals, &PoseResidual::rotation);
  return report;
}

void WriteResidualCsv(std::ostream& out,
                      const std::vector<PoseResidual>& residuals) {
  out << "index,trans_err,rot_err\n";
  out << std::setprecision(12);
  for (std::size_t i = 0; i < residuals.size(); ++i) {
    out << i << ',' << residuals[i].translation << ',' << residuals[i].rotation
        << '\n';
  }
}

}  // namespace semmap
