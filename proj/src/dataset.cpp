#include "occugrasp/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <stdexcept>

#include "occugrasp/errors.hpp"
#include "occugrasp/oracle.hpp"
#include "occugrasp/parallel.hpp"
#include "occugrasp/rng.hpp"

namespace occugrasp {

namespace fs = std::filesystem;

std::uint64_t scene_seed(std::uint64_t seed, std::size_t i) { return mix_seed(seed, 0x5ce7e000ull + i); }

SceneRecord generate_record(std::uint64_t seed, std::size_t i, const GenOptions& opt) {
  SceneRecord r;
  char name[32];
  std::snprintf(name, sizeof name, "scene_%04zu", i);
  r.name = name;
  r.scene = generate_scene(scene_seed(seed, i));
  r.observed = observe(r.scene, opt.views, opt.threads);
  if (opt.noise_sigma > 0.0 && opt.noise_fraction > 0.0) {
    r.observed = add_gaussian_noise(r.observed, opt.noise_sigma, opt.noise_fraction, mix_seed(r.scene.rng_seed, 0x9015e));
  }
  // Stored clouds and grid geometry are f32; round here so in-memory and
  // on-disk records agree.
  static_assert(sizeof(Vec3) == 3 * sizeof(double));
  double* xyz = r.observed.data()->data();
  for (std::size_t k = 0; k < 3 * r.observed.size(); ++k) xyz[k] = static_cast<double>(static_cast<float>(xyz[k]));
  r.occupancy = ground_truth_occupancy(r.scene, opt.voxel_size, opt.threads);
  for (int k = 0; k < 3; ++k) r.occupancy.origin[k] = static_cast<double>(static_cast<float>(r.occupancy.origin[k]));
  r.occupancy.voxel_size = static_cast<double>(static_cast<float>(r.occupancy.voxel_size));
  return r;
}

std::vector<SceneRecord> generate_records(std::uint64_t seed, std::size_t count, const GenOptions& opt) {
  std::vector<SceneRecord> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(generate_record(seed, i, opt));
  return out;
}

void write_records(const std::string& dir, const std::vector<SceneRecord>& records) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
  for (const auto& r : records) {
    const fs::path base = fs::path(dir) / r.name;
    write_scene(base.string() + ".txt", r.scene);
    write_pcb1(base.string() + ".pcb1", r.observed);
    write_occ1(base.string() + ".occ1", r.occupancy);
  }
}

std::vector<SceneRecord> read_records(const std::string& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw IoError("not a directory: " + dir);
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string f = e.path().filename().string();
    if (f.rfind("scene_", 0) == 0 && e.path().extension() == ".txt") names.push_back(e.path().stem().string());
  }
  std::sort(names.begin(), names.end());
  std::vector<SceneRecord> out;
  for (const auto& n : names) {
    const fs::path base = fs::path(dir) / n;
    SceneRecord r;
    r.name = n;
    r.scene = read_scene(base.string() + ".txt");
    r.observed = read_pcb1(base.string() + ".pcb1");
    r.occupancy = read_occ1(base.string() + ".occ1");
    out.push_back(std::move(r));
  }
  if (out.empty()) throw IoError("no scenes found in " + dir);
  return out;
}

PointCloud network_cloud(const SceneRecord& r, std::size_t n_points, double noise_sigma, double noise_fraction,
                         std::uint64_t noise_seed) {
  if (r.observed.empty()) throw std::invalid_argument(r.name + ": empty observed cloud");
  PointCloud c = sample_fixed(r.observed, n_points, mix_seed(r.scene.rng_seed, 0xc10d));
  if (noise_sigma > 0.0 && noise_fraction > 0.0) c = add_gaussian_noise(c, noise_sigma, noise_fraction, noise_seed);
  return c;
}

std::vector<Vec3> affordance_directions() {
  std::vector<Vec3> d;
  for (int z = -1; z <= 1; ++z)
    for (int y = -1; y <= 1; ++y)
      for (int x = -1; x <= 1; ++x)
        if (x || y || z) d.push_back(Vec3(x, y, z).normalized());
  return d;
}

namespace {

bool cell_success(const SdfScene& scene, GraspPose& pose, const GraspRegionSpec& spec, const GripperBody& body) {
  const auto w = label_width(scene, pose, spec);
  if (!w) return false;
  pose.width = *w;
  return grasp_oracle(scene, pose, kLabelFriction, body, spec);
}

}  // namespace

bool affordance_label(const SdfScene& scene, const Vec3& p, const GraspRegionSpec& spec, const GripperBody& body) {
  static const std::vector<Vec3> dirs = affordance_directions();
  for (const auto& d : dirs) {
    GraspPose pose;
    pose.p_g = p;
    pose.R_g = frame_from_direction(d);
    for (int cell = 0; cell < kPoseCells; ++cell) {
      pose.rot_idx = cell_rot(cell);
      pose.depth_idx = cell_depth(cell);
      if (cell_success(scene, pose, spec, body)) return true;
    }
  }
  return false;
}

PointLabels point_labels(const SdfScene& scene, const Vec3& p, const std::vector<Vec3>& directions,
                         const GraspRegionSpec& spec, const GripperBody& body) {
  PointLabels l;
  const std::size_t V = directions.size();
  l.success.assign(V * kPoseCells, 0.0);
  l.width.assign(V * kPoseCells, 0.0);
  l.view.assign(V, 0.0);
  for (std::size_t v = 0; v < V; ++v) {
    GraspPose pose;
    pose.p_g = p;
    pose.R_g = frame_from_direction(directions[v]);
    int hits = 0;
    for (int cell = 0; cell < kPoseCells; ++cell) {
      pose.rot_idx = cell_rot(cell);
      pose.depth_idx = cell_depth(cell);
      if (!cell_success(scene, pose, spec, body)) continue;
      l.success[v * kPoseCells + static_cast<std::size_t>(cell)] = 1.0;
      l.width[v * kPoseCells + static_cast<std::size_t>(cell)] = pose.width;
      ++hits;
    }
    l.view[v] = static_cast<double>(hits) / kPoseCells;
    if (l.view[v] > l.view[static_cast<std::size_t>(l.best)]) l.best = static_cast<int>(v);
  }
  return l;
}

LabeledScene::LabeledScene(const SceneRecord& record, std::size_t n_points, const std::vector<Vec3>& directions,
                           const GraspRegionSpec& spec, const GripperBody& body, int threads)
    : record_(&record), directions_(directions), spec_(spec), body_(body) {
  cloud_ = network_cloud(record, n_points);
  affordance_.assign(cloud_.size(), 0.0);
  parallel_for(cloud_.size(), threads, [&](std::size_t i) {
    affordance_[i] = affordance_label(record.scene, cloud_[i], spec, body) ? 1.0 : 0.0;
  });
  for (std::size_t i = 0; i < cloud_.size(); ++i)
    if (affordance_[i] > 0.5) area_.push_back(i);
}

const PointLabels& LabeledScene::labels(std::size_t point) {
  {
    std::lock_guard<std::mutex> lock(mu_);
    const auto it = memo_.find(point);
    if (it != memo_.end()) return *it->second;
  }
  auto l = std::make_unique<PointLabels>(point_labels(record_->scene, cloud_.at(point), directions_, spec_, body_));
  std::lock_guard<std::mutex> lock(mu_);
  auto [it, inserted] = memo_.try_emplace(point, std::move(l));
  return *it->second;
}

}  // namespace occugrasp
