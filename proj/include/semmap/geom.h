#ifndef SEMMAP_GEOM_H_
#define SEMMAP_GEOM_H_

#include <array>
#include <cstdint>
#include <string_view>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace semmap {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

// Rigid SE(3) transform. Rotation is kept as a 3x3 matrix; quaternions only
// appear at file boundaries (see ToQuaternion / FromQuaternion).
class Pose {
 public:
  Pose() : rotation_(Mat3::Identity()), translation_(Vec3::Zero()) {}
  Pose(const Mat3& rotation, const Vec3& translation)
      : rotation_(rotation), translation_(translation) {}

  static Pose Identity() { return Pose(); }
  static Pose FromTranslation(double x, double y, double z) {
    return Pose(Mat3::Identity(), Vec3(x, y, z));
  }
  static Pose FromAxisAngle(const Vec3& axis, double angle);
  static Pose RotZ(double angle) { return FromAxisAngle(Vec3::UnitZ(), angle); }
  // (w, x, y, z) need not be normalized; zero norm is rejected.
  static Pose FromQuaternion(const Eigen::Quaterniond& q, const Vec3& t);
  static Pose FromMatrix(const Mat4& m);

  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }

  Eigen::Quaterniond ToQuaternion() const;
  Mat4 ToMatrix() const;

  Vec3 operator*(const Vec3& p) const { return rotation_ * p + translation_; }

  // Orthonormality and det(R) = +1 within tol.
  bool IsValid(double tol = 1e-9) const;

 private:
  Mat3 rotation_;
  Vec3 translation_;
};

// Applies b first, then a: the homogeneous product a * b.
Pose Compose(const Pose& a, const Pose& b);
inline Pose operator*(const Pose& a, const Pose& b) { return Compose(a, b); }
Pose Invert(const Pose& p);

// Geodesic rotation angle of R in [0, pi].
double RotationAngle(const Mat3& r);

// SO(3) exponential of an axis-angle vector.
Mat3 ExpSO3(const Vec3& omega);
// Inverse of ExpSO3; angle in [0, pi].
Vec3 LogSO3(const Mat3& r);
Mat3 Skew(const Vec3& v);

// Z-Y-X intrinsic (yaw-pitch-roll): R = Rz(yaw) * Ry(pitch) * Rx(roll).
struct EulerAngles {
  double roll = 0.0;
  double pitch = 0.0;
  double yaw = 0.0;
};

EulerAngles ToEuler(const Mat3& r);
Mat3 FromEuler(const EulerAngles& e);

// Pinhole camera without distortion.
struct CameraIntrinsics {
  double fx = 525.0;
  double fy = 525.0;
  double cx = 319.5;
  double cy = 239.5;
  int width = 640;
  int height = 480;
  // Raw depth units per meter.
  double depth_scale = 5000.0;

  bool IsValid() const;
  // Throws kInvalidArgument naming the violated bound.
  void Validate() const;
};

// Throws kNonPositiveDepth for z <= 0.
Vec2 Project(const CameraIntrinsics& k, const Vec3& p_cam);

// Throws kZeroDepth for raw_depth == 0.
Vec3 BackProject(const CameraIntrinsics& k, const Vec2& pixel,
                 std::uint32_t raw_depth);
// Same as BackProject with a metric depth already divided by depth_scale.
Vec3 BackProjectMetric(const CameraIntrinsics& k, const Vec2& pixel,
                       double depth);

// Signed permutation of the three axes. Output axis i takes source axis
// source[i] multiplied by sign[i].
class AxisRemap {
 public:
  AxisRemap() = default;
  AxisRemap(std::array<int, 3> source, std::array<int, 3> sign);

  static AxisRemap Identity() { return AxisRemap({0, 1, 2}, {1, 1, 1}); }
  // x <- z, y <- x, z <- y, all positive.
  static AxisRemap Zxy();
  // x <- z, y <- -x, z <- -y: optical frame to body frame.
  static AxisRemap RosOptical();
  // Accepts "none", "zxy", "ros-optical"; throws kInvalidArgument otherwise.
  static AxisRemap FromPreset(std::string_view name);

  const Mat3& matrix() const { return matrix_; }

 private:
  Mat3 matrix_ = Mat3::Identity();
};

// A * M * A^T for the rotation and A * t for the translation.
Pose RemapCameraToWorld(const Pose& orb_pose, const AxisRemap& remap);

// ^oM_r = ^oM_c * ^cM_r.
Pose UavPose(const Pose& world_from_camera, const Pose& camera_from_robot);

}  // namespace semmap

#endif  // SEMMAP_GEOM_H_
