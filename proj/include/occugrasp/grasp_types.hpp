#pragma once

#include <numbers>

#include "occugrasp/geometry.hpp"

namespace occugrasp {

inline constexpr int kRotationBins = 12;
inline constexpr int kDepthBins = 4;
inline constexpr int kPoseCells = kRotationBins * kDepthBins;

/// Gripper reach cylinder and voxel size.
struct GraspRegionSpec {
  double r = 0.05;       // gripper radius, half the maximum opening
  double d_min = -0.01;  // depth interval along the approach axis
  double d_max = 0.04;
  double v = 0.01;       // voxel size
};

/// Two-finger gripper body used for collision checks.
struct GripperBody {
  double finger_thickness = 0.01;
  double palm_depth = 0.02;
};

/// Grasp frame: x = closing axis, y = finger breadth axis, z = approach.
/// The fingertips sit at p_g + depth * approach ± (width / 2) * closing.
struct GraspPose {
  Vec3 p_g = Vec3::Zero();
  Mat3 R_g = Mat3::Identity();
  int rot_idx = 0;
  int depth_idx = 0;
  double width = 0.0;
  double score = 0.0;

  double angle() const { return rot_idx * std::numbers::pi / kRotationBins; }
  double depth() const { return (depth_idx + 1) * 0.01; }
  /// R_g composed with the in-plane rotation.
  Mat3 rotation() const { return R_g * rot_z(angle()); }
  int cell() const { return rot_idx * kDepthBins + depth_idx; }
};

/// Grasp point and direction frame (+z along the approach direction).
struct CandidateFrame {
  Vec3 point = Vec3::Zero();
  Mat3 rotation = Mat3::Identity();
};

inline int cell_rot(int cell) { return cell / kDepthBins; }
inline int cell_depth(int cell) { return cell % kDepthBins; }

}  // namespace occugrasp
