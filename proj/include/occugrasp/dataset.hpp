#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "occugrasp/grasp_types.hpp"
#include "occugrasp/scene.hpp"

namespace occugrasp {

/// One synthetic scene with its observation and ground-truth occupancy.
struct SceneRecord {
  std::string name;
  SdfScene scene;
  PointCloud observed;
  OccupancyGrid occupancy;
};

struct GenOptions {
  int views = 1;
  double noise_sigma = 0.0;
  double noise_fraction = 0.0;
  double voxel_size = 0.01;
  int threads = 1;
};

/// Seed of scene i in a set generated with `seed`.
std::uint64_t scene_seed(std::uint64_t seed, std::size_t i);

SceneRecord generate_record(std::uint64_t seed, std::size_t i, const GenOptions& opt);
std::vector<SceneRecord> generate_records(std::uint64_t seed, std::size_t count, const GenOptions& opt);

/// Files scene_NNNN.txt, scene_NNNN.pcb1, scene_NNNN.occ1 per record.
void write_records(const std::string& dir, const std::vector<SceneRecord>& records);
/// Loads every scene_*.txt in name order with its cloud and grid.
std::vector<SceneRecord> read_records(const std::string& dir);

/// Fixed-size network input drawn from the observed cloud with a seed
/// derived from the scene, optionally with Gaussian noise on a fraction of
/// the points.
PointCloud network_cloud(const SceneRecord& r, std::size_t n_points, double noise_sigma = 0.0,
                         double noise_fraction = 0.0, std::uint64_t noise_seed = 0);

/// 26 approach directions: cube faces, edges and corners.
std::vector<Vec3> affordance_directions();

inline constexpr double kLabelFriction = 0.8;

/// True if some (direction, rotation, depth) cell over the 26 directions
/// succeeds at friction 0.8 with its label width.
bool affordance_label(const SdfScene& scene, const Vec3& p, const GraspRegionSpec& spec, const GripperBody& body);

/// Oracle results over the direction set x 48 cells at one point.
struct PointLabels {
  std::vector<double> success;  // [V * 48], 0/1
  std::vector<double> width;    // [V * 48], label width where successful, else 0
  std::vector<double> view;     // [V], mean success over the 48 cells
  int best = 0;                 // argmax of view, ties to the lower index
};

PointLabels point_labels(const SdfScene& scene, const Vec3& p, const std::vector<Vec3>& directions,
                         const GraspRegionSpec& spec, const GripperBody& body);

/// Training view of a record: fixed cloud, affordance labels, and lazily
/// computed per-point grasp labels.
class LabeledScene {
 public:
  LabeledScene(const SceneRecord& record, std::size_t n_points, const std::vector<Vec3>& directions,
               const GraspRegionSpec& spec, const GripperBody& body, int threads = 1);

  const SceneRecord& record() const { return *record_; }
  const PointCloud& cloud() const { return cloud_; }
  const std::vector<double>& affordance() const { return affordance_; }
  const std::vector<std::size_t>& area() const { return area_; }
  /// Memoized; safe to call from several threads.
  const PointLabels& labels(std::size_t point);

 private:
  const SceneRecord* record_;
  PointCloud cloud_;
  std::vector<double> affordance_;
  std::vector<std::size_t> area_;
  std::vector<Vec3> directions_;
  GraspRegionSpec spec_;
  GripperBody body_;
  std::mutex mu_;
  std::map<std::size_t, std::unique_ptr<PointLabels>> memo_;
};

}  // namespace occugrasp
