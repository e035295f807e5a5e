#include "semmap/geom.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "semmap/error.h"

namespace semmap {

Pose Pose::FromAxisAngle(const Vec3& axis, double angle) {
  return Pose(Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix(),
              Vec3::Zero());
}

Pose Pose::FromQuaternion(const Eigen::Quaterniond& q, const Vec3& t) {
  const double n = q.norm();
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw Error(ErrorCode::kInvalidArgument, "quaternion has zero norm");
  }
  return Pose(q.normalized().toRotationMatrix(), t);
}

Pose Pose::FromMatrix(const Mat4& m) {
  return Pose(m.topLeftCorner<3, 3>(), m.topRightCorner<3, 1>());
}

Eigen::Quaterniond Pose::ToQuaternion() const {
  Eigen::Quaterniond q(rotation_);
  q.normalize();
  // Canonical hemisphere keeps file output stable.
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  return q;
}

Mat4 Pose::ToMatrix() const {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = rotation_;
  m.topRightCorner<3, 1>() = translation_;
  return m;
}

bool Pose::IsValid(double tol) const {
  if (!rotation_.allFinite() || !translation_.allFinite()) return false;
  const Mat3 gram = rotation_.transpose() * rotation_;
  if ((gram - Mat3::Identity()).cwiseAbs().maxCoeff() > tol) return false;
  return std::abs(rotation_.determinant() - 1.0) <= tol;
}

Pose Compose(const Pose& a, const Pose& b) {
  return Pose(a.rotation() * b.rotation(),
              a.rotation() * b.translation() + a.translation());
}

Pose Invert(const Pose& p) {
  const Mat3 rt = p.rotation().transpose();
  return Pose(rt, -rt * p.translation());
}

Mat3 Skew(const Vec3& v) {
  Mat3 s;
  s << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return s;
}

double RotationAngle(const Mat3& r) {
  // atan2 form stays accurate near 0 and pi, unlike a bare acos.
  const Vec3 axis(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  const double s = 0.5 * axis.norm();
  const double c = 0.5 * (r.trace() - 1.0);
  return std::atan2(s, std::clamp(c, -1.0, 1.0));
}

Mat3 ExpSO3(const Vec3& omega) {
  const double theta = omega.norm();
  if (theta < 1e-12) return Mat3::Identity() + Skew(omega);
  return Eigen::AngleAxisd(theta, omega / theta).toRotationMatrix();
}

Vec3 LogSO3(const Mat3& r) {
  const Eigen::AngleAxisd aa(r);
  return aa.angle() * aa.axis();
}

EulerAngles ToEuler(const Mat3& r) {
  EulerAngles e;
  e.pitch = std::asin(std::clamp(-r(2, 0), -1.0, 1.0));
  e.roll = std::atan2(r(2, 1), r(2, 2));
  e.yaw = std::atan2(r(1, 0), r(0, 0));
  return e;
}

Mat3 FromEuler(const EulerAngles& e) {
  return (Eigen::AngleAxisd(e.yaw, Vec3::UnitZ()) *
          Eigen::AngleAxisd(e.pitch, Vec3::UnitY()) *
          Eigen::AngleAxisd(e.roll, Vec3::UnitX()))
      .toRotationMatrix();
}

bool CameraIntrinsics::IsValid() const {
  return fx > 0.0 && fy > 0.0 && width > 0 && height > 0 && cx >= 0.0 &&
         cx < width && cy >= 0.0 && cy < height && depth_scale > 0.0;
}

void CameraIntrinsics::Validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "focal lengths must be positive");
  }
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "image size must be positive");
  }
  if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height)) {
    throw Error(ErrorCode::kInvalidArgument,
                "principal point outside the image");
  }
  if (!(depth_scale > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "depth_scale must be positive");
  }
}

Vec2 Project(const CameraIntrinsics& k, const Vec3& p_cam) {
  if (!(p_cam.z() > 0.0)) {
    throw Error(ErrorCode::kNonPositiveDepth,
                "point at z=" + std::to_string(p_cam.z()) +
                    " is not in front of the camera");
  }
  return Vec2(k.fx * p_cam.x() / p_cam.z() + k.cx,
              k.fy * p_cam.y() / p_cam.z() + k.cy);
}

Vec3 BackProjectMetric(const CameraIntrinsics& k, const Vec2& pixel,
                       double depth) {
  return Vec3((pixel.x() - k.cx) * depth / k.fx,
              (pixel.y() - k.cy) * depth / k.fy, depth);
}

Vec3 BackProject(const CameraIntrinsics& k, const Vec2& pixel,
                 std::uint32_t raw_depth) {
  if (raw_depth == 0) {
    throw Error(ErrorCode::kZeroDepth, "invalid depth pixel");
  }
  return BackProjectMetric(k, pixel, raw_depth / k.depth_scale);
}

AxisRemap::AxisRemap(std::array<int, 3> source, std::array<int, 3> sign) {
  matrix_.setZero();
  std::array<bool, 3> used{false, false, false};
  for (int i = 0; i < 3; ++i) {
    if (source[i] < 0 || source[i] > 2 || used[source[i]]) {
      throw Error(ErrorCode::kInvalidArgument,
                  "axis remap sources must be a permutation of {0,1,2}");
    }
    if (sign[i] != 1 && sign[i] != -1) {
      throw Error(ErrorCode::kInvalidArgument, "axis remap signs must be +-1");
    }
    used[source[i]] = true;
    matrix_(i, source[i]) = sign[i];
  }
}

AxisRemap AxisRemap::Zxy() { return AxisRemap({2, 0, 1}, {1, 1, 1}); }

AxisRemap AxisRemap::RosOptical() { return AxisRemap({2, 0, 1}, {1, -1, -1}); }

AxisRemap AxisRemap::FromPreset(std::string_view name) {
  if (name == "none") return Identity();
  if (name == "zxy") return Zxy();
  if (name == "ros-optical") return RosOptical();
  throw Error(ErrorCode::kInvalidArgument,
              "unknown axis remap preset '" + std::string(name) + "'");
}

Pose RemapCameraToWorld(const Pose& orb_pose, const AxisRemap& remap) {
  const Mat3& a = remap.matrix();
  return Pose(a * orb_pose.rotation() * a.transpose(),
              a * orb_pose.translation());
}

Pose UavPose(const Pose& world_from_camera, const Pose& camera_from_robot) {
  return Compose(world_from_camera, camera_from_robot);
}

}  // namespace semmap
