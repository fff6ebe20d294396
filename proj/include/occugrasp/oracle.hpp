#pragma once

#include <array>
#include <optional>
#include <vector>

#include "occugrasp/grasp_types.hpp"
#include "occugrasp/scene.hpp"

namespace occugrasp {

struct OrientedBox {
  Vec3 center = Vec3::Zero();
  Mat3 rotation = Mat3::Identity();
  Vec3 half = Vec3::Zero();
};

/// Left finger, right finger, palm, in world coordinates.
std::array<OrientedBox, 3> gripper_boxes(const GraspPose& pose, const GripperBody& body,
                                         const GraspRegionSpec& spec);

/// Regular lattice over the box including its faces, spacing at most `spacing`.
std::vector<Vec3> box_samples(const OrientedBox& box, double spacing);

/// True iff every lattice sample of the box has scene SDF > 0.
bool box_clear(const SdfScene& scene, const OrientedBox& box, double spacing);

struct OracleDetail {
  /// Fingertips outside material, both contacts found, gripper body clear.
  bool geometric_ok = false;
  /// Larger of the two contact-normal angles to the closing axis, radians.
  double max_contact_angle = 0.0;
};

/// Friction-independent part of the oracle; success at mu is
/// geometric_ok && max_contact_angle <= atan(mu).
OracleDetail oracle_detail(const SdfScene& scene, const GraspPose& pose, const GripperBody& body = {},
                           const GraspRegionSpec& spec = {});

bool detail_success(const OracleDetail& d, double mu);

/// Antipodal two-finger grasp check against the exact scene SDF.
bool grasp_oracle(const SdfScene& scene, const GraspPose& pose, double mu, const GripperBody& body = {},
                  const GraspRegionSpec& spec = {});

/// Sphere-traces from `start` along unit `dir`; distance to the first surface
/// within max_len, if any.
std::optional<double> march_to_surface(const SdfScene& scene, const Vec3& start, const Vec3& dir,
                                       double max_len);

/// Smallest symmetric opening that clears the material crossed by the
/// closing line of this pose cell, plus 5 mm per side, capped at 2r. Empty
/// when the line meets no material within the gripper radius or the material
/// reaches the fully opened fingertips.
std::optional<double> label_width(const SdfScene& scene, const GraspPose& pose, const GraspRegionSpec& spec);

}  // namespace occugrasp
