#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

namespace occugrasp {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Scalar-first quaternion (s, vx, vy, vz).
struct Quaternion {
  double s = 1.0;
  double vx = 0.0;
  double vy = 0.0;
  double vz = 0.0;

  double dot(const Quaternion& o) const { return s * o.s + vx * o.vx + vy * o.vy + vz * o.vz; }
  double norm() const;
  Quaternion normalized() const;
  Quaternion operator-() const { return {-s, -vx, -vy, -vz}; }
};

struct FrameSet {
  int K = 0;
  std::vector<Mat3> rotations;
  std::vector<Quaternion> quaternions;
};

/// Rotation matrix for a unit quaternion using the tri-plane frame convention:
///
///   [1-2vy²-2vz²    2vx·vy+2s·vz  2vx·vz-2s·vy]
///   [2vx·vy-2s·vz   1-2vx²-2vz²   2vy·vz+2s·vx]
///   [2vx·vz+2s·vy   2vy·vz-2s·vx  1-2vx²-2vy² ]
///
/// This is the transpose of the textbook Hamilton matrix, i.e. the rotation
/// of the conjugate quaternion. Throws if |q| deviates from 1 by more than 1e-6.
Mat3 quat_to_matrix(const Quaternion& q);

/// Inverse of quat_to_matrix. Result has s >= 0.
Quaternion matrix_to_quat(const Mat3& R);

/// q_i = (sin((1-i/K)φ) q1 + sin((i/K)φ) q2) / sin φ for i = 0..K-1, renormalized.
FrameSet slerp_frames(const Quaternion& q1, const Quaternion& q2, int K);

/// q1 = (1,0,0,0), q2 = (0,1/√3,1/√3,1/√3).
std::pair<Quaternion, Quaternion> default_endpoints();

/// slerp_frames(default_endpoints(), K)
FrameSet default_frames(int K);

/// Angle of the relative rotation aᵀb, in radians.
double rotation_angle_between(const Mat3& a, const Mat3& b);

/// Rotation about +z by `angle` radians.
Mat3 rot_z(double angle);

/// Right-handed frame whose z column is normalize(d). The x column comes from
/// the world axis least aligned with d (lowest index on ties), made
/// orthogonal to d; y = z × x.
Mat3 frame_from_direction(const Vec3& d);

/// n points of a Fibonacci lattice on the unit sphere.
std::vector<Vec3> fibonacci_sphere(int n);

bool all_finite(const Vec3& v);

}  // namespace occugrasp
