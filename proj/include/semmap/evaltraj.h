#ifndef SEMMAP_EVALTRAJ_H_
#define SEMMAP_EVALTRAJ_H_

#include <iosfwd>
#include <span>
#include <vector>

#include "semmap/geom.h"
#include "semmap/ingest.h"

namespace semmap {

struct PoseResidual {
  double timestamp = 0.0;
  double translation = 0.0;  // meters
  double rotation = 0.0;     // radians, in [0, pi]
};

struct AteReport {
  double rmse_translation = 0.0;
  double rmse_rotation = 0.0;
  std::vector<PoseResidual> residuals;
  // Maps estimated poses into the reference frame.
  Pose alignment;
};

struct RpeReport {
  int delta = 1;
  double rmse_translation = 0.0;
  double rmse_rotation = 0.0;
  std::vector<PoseResidual> residuals;  // stamped with the pair's first pose
};

// Pose pairs (estimated, reference) matched by timestamp.
struct AssociatedPoses {
  std::vector<double> timestamps;
  std::vector<Pose> estimated;
  std::vector<Pose> reference;
};

AssociatedPoses AssociateTrajectories(const Trajectory& estimated,
                                      const Trajectory& reference,
                                      double tolerance);

// Closed-form rigid transform T (no scale) minimizing
// sum |ref_i - T * est_i|^2 from the cross-covariance SVD with reflection
// correction. Throws kLengthMismatch or kDegenerateConfiguration (fewer
// than 3 points, or the points are collinear/coincident).
Pose AlignUmeyama(std::span<const Vec3> estimated,
                  std::span<const Vec3> reference);
// Associates by timestamp, then aligns positions.
Pose AlignUmeyama(const Trajectory& estimated, const Trajectory& reference,
                  double tolerance);

// Throws kTooFewAssociations with fewer than 3 matched poses.
AteReport ComputeAte(const Trajectory& estimated, const Trajectory& reference,
                     double tolerance);

// E_i = (ref_i^-1 ref_{i+d})^-1 (est_i^-1 est_{i+d}) over matched poses.
// Throws kBadDelta (delta < 1) or kTooFewAssociations (< delta + 1).
RpeReport ComputeRpe(const Trajectory& estimated, const Trajectory& reference,
                     int delta, double tolerance);

// "index,trans_err,rot_err" rows.
void WriteResidualCsv(std::ostream& out,
                      const std::vector<PoseResidual>& residuals);

}  // namespace semmap

#endif  // SEMMAP_EVALTRAJ_H_
