#include "semmap/pnp.h"

#include <Eigen/Cholesky>
#include <Eigen/SVD>
#include <string>

#include "semmap/error.h"

namespace semmap {

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

void RefineConfig::Validate() const {
  if (max_iterations < 1) {
    throw Error(ErrorCode::kInvalidArgument, "max_iterations must be >= 1");
  }
  if (!(convergence_tol > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "convergence_tol must be > 0");
  }
  if (!(initial_damping >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "initial_damping must be >= 0");
  }
}

namespace {

Vec3 CameraPoint(const Pose& camera_from_world, const Correspondence& c,
                 std::size_t index) {
  const Vec3 p = camera_from_world * c.world_point;
  if (!(p.z() > 0.0)) {
    throw Error(ErrorCode::kPointBehindCamera,
                "correspondence " + std::to_string(index) +
                    " lies behind the camera");
  }
  return p;
}

}  // namespace

Residuals ReprojectionResiduals(const Pose& camera_from_world,
                                const CameraIntrinsics& k,
                                std::span<const Correspondence> corrs) {
  Residuals r(2 * corrs.size());
  for (std::size_t i = 0; i < corrs.size(); ++i) {
    const Vec3 p = CameraPoint(camera_from_world, corrs[i], i);
    r.segment<2>(2 * i) = corrs[i].observed_pixel - Project(k, p);
  }
  return r;
}

ResidualJacobian ReprojectionJacobian(const Pose& camera_from_world,
                                      const CameraIntrinsics& k,
                                      std::span<const Correspondence> corrs) {
  ResidualJacobian j(2 * corrs.size(), 6);
  for (std::size_t i = 0; i < corrs.size(); ++i) {
    const Vec3 p = CameraPoint(camera_from_world, corrs[i], i);
    const double inv_z = 1.0 / p.z();
    Eigen::Matrix<double, 2, 3> d_proj;
    d_proj << k.fx * inv_z, 0.0, -k.fx * p.x() * inv_z * inv_z,
              0.0, k.fy * inv_z, -k.fy * p.y() * inv_z * inv_z;
    // d(Exp(w) p + v) at zero = [-[p]x | I]
    Eigen::Matrix<double, 3, 6> d_point;
    d_point.leftCols<3>() = -Skew(p);
    d_point.rightCols<3>().setIdentity();
    // residual = observed - projection
    j.block<2, 6>(2 * i, 0) = -d_proj * d_point;
  }
  return j;
}

Pose ApplyLeftIncrement(const Pose& camera_from_world, const Vec6& delta) {
  const Mat3 dr = ExpSO3(delta.head<3>());
  return Pose(dr * camera_from_world.rotation(),
              dr * camera_from_world.translation() + delta.tail<3>());
}

double ReprojectionCost(const Pose& world_from_camera,
                        const CameraIntrinsics& k,
                        std::span<const Correspondence> corrs) {
  return ReprojectionResiduals(Invert(world_from_camera), k, corrs)
      .squaredNorm();
}

RefineResult RefinePose(const Pose& initial, const CameraIntrinsics& k,
                        std::span<const Correspondence> corrs,
                        const RefineConfig& cfg) {
  cfg.Validate();
  if (corrs.size() < 3) {
    throw Error(ErrorCode::kInsufficientCorrespondences,
                "need at least 3 correspondences, got " +
                    std::to_string(corrs.size()));
  }

  Pose t_cw = Invert(initial);
  Residuals r = ReprojectionResiduals(t_cw, k, corrs);
  double cost = r.squaredNorm();

  RefineResult result;
  result.initial_cost = cost;

  {
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(
        ReprojectionJacobian(t_cw, k, corrs));
    const auto& s = svd.singularValues();
    if (!(s(0) > 0.0) || s(5) <= 1e-10 * s(0)) {
      throw Error(ErrorCode::kDegenerateNormalEquations,
                  "reprojection Jacobian is rank deficient");
    }
  }

  double lambda = cfg.initial_damping;
  for (int it = 0; it < cfg.max_iterations; ++it) {
    result.iterations = it + 1;
    const ResidualJacobian j = ReprojectionJacobian(t_cw, k, corrs);
    const Mat6 h = j.transpose() * j;
    const Vec6 g = j.transpose() * r;

    Mat6 damped = h;
    damped.diagonal() += lambda * h.diagonal();
    const Eigen::LDLT<Mat6> ldlt(damped);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
      throw Error(ErrorCode::kDegenerateNormalEquations,
                  "damped normal equations are not positive definite");
    }
    const Vec6 delta = ldlt.solve(-g);
    if (!delta.allFinite()) {
      throw Error(ErrorCode::kDegenerateNormalEquations,
                  "normal equations produced a non-finite step");
    }

    const Pose candidate = ApplyLeftIncrement(t_cw, delta);
    double new_cost = std::numeric_limits<double>::infinity();
    Residuals new_r;
    try {
      new_r = ReprojectionResiduals(candidate, k, corrs);
      new_cost = new_r.squaredNorm();
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kPointBehindCamera) throw;
    }

    const bool improved = new_cost < cost;
    const bool stalled = std::abs(cost - new_cost) < cfg.convergence_tol;
    if (improved) {
      t_cw = candidate;
      r = std::move(new_r);
      cost = new_cost;
      lambda /= 10.0;
    } else {
      lambda = lambda > 0.0 ? lambda * 10.0 : 1e-6;
    }
    if (stalled) {
      result.converged = true;
      break;
    }
  }

  result.pose = Invert(t_cw);
  result.final_cost = cost;
  return result;
}

}  // namespace semmap
