#include "occugrasp/model.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <unordered_map>
#include <map>
#include <sstream>
#include <stdexcept>

#include "occugrasp/rng.hpp"

namespace occugrasp {

using nn::Tape;
using nn::Tensor;
using nn::Var;

const char* local_mode_name(LocalMode m) { return m == LocalMode::Nearest ? "nearest" : "ball"; }

LocalMode local_mode_from_name(const std::string& s) {
  if (s == "nearest") return LocalMode::Nearest;
  if (s == "ball") return LocalMode::Ball;
  throw std::invalid_argument("unknown local mode: " + s);
}

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string ModelConfig::descriptor() const {
  std::ostringstream o;
  o << "k_groups=" << k_groups << ";plane_h=" << plane_h << ";plane_w=" << plane_w << ";c_p=" << c_p
    << ";c_t=" << c_t << ";c_q=" << c_q << ";views=" << views << ";gripper_radius=" << fmt_double(spec.r)
    << ";d_min=" << fmt_double(spec.d_min) << ";d_max=" << fmt_double(spec.d_max)
    << ";voxel_size=" << fmt_double(spec.v) << ";finger_thickness=" << fmt_double(body.finger_thickness)
    << ";palm_depth=" << fmt_double(body.palm_depth) << ";use_density=" << use_density
    << ";use_global=" << use_global << ";use_local=" << use_local << ";use_occupancy=" << use_occupancy
    << ";refine=" << refine << ";implicit_mode=" << implicit_mode_name(implicit_mode)
    << ";local_mode=" << local_mode_name(local_mode);
  return o.str();
}

ModelConfig ModelConfig::from_descriptor(const std::string& d) {
  std::map<std::string, std::string> kv;
  std::stringstream ss(d);
  std::string item;
  while (std::getline(ss, item, ';')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("bad model descriptor entry: " + item);
    kv[item.substr(0, eq)] = item.substr(eq + 1);
  }
  auto take = [&](const char* key) {
    const auto it = kv.find(key);
    if (it == kv.end()) throw std::invalid_argument(std::string("model descriptor lacks ") + key);
    std::string v = it->second;
    kv.erase(it);
    return v;
  };
  ModelConfig c;
  c.k_groups = std::stoi(take("k_groups"));
  c.plane_h = std::stoi(take("plane_h"));
  c.plane_w = std::stoi(take("plane_w"));
  c.c_p = std::stoi(take("c_p"));
  c.c_t = std::stoi(take("c_t"));
  c.c_q = std::stoi(take("c_q"));
  c.views = std::stoi(take("views"));
  c.spec.r = std::stod(take("gripper_radius"));
  c.spec.d_min = std::stod(take("d_min"));
  c.spec.d_max = std::stod(take("d_max"));
  c.spec.v = std::stod(take("voxel_size"));
  c.body.finger_thickness = std::stod(take("finger_thickness"));
  c.body.palm_depth = std::stod(take("palm_depth"));
  c.use_density = take("use_density") == "1";
  c.use_global = take("use_global") == "1";
  c.use_local = take("use_local") == "1";
  c.use_occupancy = take("use_occupancy") == "1";
  c.refine = take("refine") == "1";
  c.implicit_mode = implicit_mode_from_name(take("implicit_mode"));
  c.local_mode = local_mode_from_name(take("local_mode"));
  if (!kv.empty()) throw std::invalid_argument("unknown model descriptor key: " + kv.begin()->first);
  c.validate();
  return c;
}

void ModelConfig::validate() const {
  auto need = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("invalid model config: ") + what);
  };
  need(k_groups >= 1, "k_groups must be at least 1");
  need(plane_h >= 4 && plane_w >= 4, "plane_h and plane_w must be at least 4");
  need(c_p >= 1 && c_t >= 1, "c_p and c_t must be positive");
  need(c_q > c_t + c_p, "c_q must exceed c_t + c_p");
  need(c_q >= 4, "c_q must be at least 4");
  need(views >= 1, "views must be at least 1");
  need(spec.r > 0 && spec.v > 0 && spec.d_min < spec.d_max, "grasp region spec");
  need(body.finger_thickness > 0 && body.palm_depth > 0, "gripper body");
}

Model::Model(const ModelConfig& c) : cfg(c) {
  cfg.validate();
  point_encoder = PointEncoder(store, "point", cfg.c_p);
  affordance = nn::Mlp(store, "affordance", {cfg.c_p, cfg.c_p, 1});
  view = nn::Mlp(store, "view", {cfg.c_p, cfg.c_p, cfg.views});
  if (cfg.use_occupancy) {
    const int in = cfg.c_p + (cfg.use_density ? 1 : 0);
    for (int i = 0; i < 3; ++i) plane_encoders[i] = nn::PlaneEncoder(store, "plane" + std::to_string(i), in, cfg.c_t);
    fusers = GlobalFusers(store, "fuse", cfg.k_groups, cfg.c_t);
    occupancy = OccupancyHead(store, "occupancy", cfg.c_t, cfg.c_p, cfg.c_q);
  }
  shape = ShapeEncoder(store, "shape", cfg.c_q, shape_feature_width(), cfg.implicit_mode, cfg.spec.r);
  refine = nn::Mlp(store, "refine", {shape.out_width(), cfg.c_q, cfg.views});
  pose = PoseHead(store, "pose", shape.out_width(), cfg.c_q, cfg.spec.r);
  frames = default_frames(cfg.k_groups);
  directions = fibonacci_sphere(cfg.views);
}

int Model::shape_feature_width() const { return cfg.use_occupancy ? cfg.c_q : cfg.c_p; }

SceneEncoding encode_points_only(Tape& t, const Model& m, const PointCloud& world) {
  if (world.empty()) throw std::invalid_argument("encode: empty cloud");
  SceneEncoding e;
  e.world = world;
  e.affine = unit_cube_affine(world);
  e.normalized.reserve(world.size());
  for (const auto& p : world) e.normalized.push_back(e.affine.apply(p).cwiseMax(0.0).cwiseMin(1.0));
  e.embeddings = encode_points(t, m.point_encoder, point_encoder_input(world, e.affine));
  e.affordance = nn::sigmoid(t, m.affordance(t, e.embeddings));
  return e;
}

void build_planes(Tape& t, const Model& m, SceneEncoding& e, TriplaneCounters* counters) {
  if (!m.cfg.use_occupancy) throw std::logic_error("build_planes: model has no occupancy branch");
  std::vector<RawGroup> raw;
  for (const Mat3& R : m.frames.rotations)
    raw.push_back(project_group(t, e.normalized, e.embeddings, R, m.cfg.plane_h, m.cfg.plane_w, counters));
  e.planes = encode_planes(t, raw, m.plane_encoders, m.cfg.use_density);
  e.has_planes = true;
}

SceneEncoding encode_scene(Tape& t, const Model& m, const PointCloud& world, TriplaneCounters* counters) {
  SceneEncoding e = encode_points_only(t, m, world);
  if (m.cfg.use_occupancy) build_planes(t, m, e, counters);
  return e;
}

Var view_scores(Tape& t, const Model& m, Var rows) { return nn::sigmoid(t, m.view(t, rows)); }

Var refine_scores(Tape& t, const Model& m, Var shape) { return nn::sigmoid(t, m.refine(t, shape)); }

namespace {

// Cloud points within kBallRadius of each query, grouped by query.
void ball_members(const PointCloud& cloud, const std::vector<Vec3>& queries, std::vector<int>& rows,
                  std::vector<int>& group) {
  std::unordered_map<VoxelKey, std::vector<int>, VoxelKeyHash> cells;
  for (std::size_t i = 0; i < cloud.size(); ++i) cells[voxel_key(cloud[i], kBallRadius)].push_back(static_cast<int>(i));
  for (std::size_t q = 0; q < queries.size(); ++q) {
    const VoxelKey k = voxel_key(queries[q], kBallRadius);
    std::vector<int> hits;
    for (std::int64_t dz = -1; dz <= 1; ++dz)
      for (std::int64_t dy = -1; dy <= 1; ++dy)
        for (std::int64_t dx = -1; dx <= 1; ++dx) {
          const auto it = cells.find({k.x + dx, k.y + dy, k.z + dz});
          if (it == cells.end()) continue;
          for (int i : it->second)
            if ((cloud[static_cast<std::size_t>(i)] - queries[q]).norm() <= kBallRadius) hits.push_back(i);
        }
    std::sort(hits.begin(), hits.end());
    for (int i : hits) {
      rows.push_back(i);
      group.push_back(static_cast<int>(q));
    }
  }
}

}  // namespace

Var query_features(Tape& t, const Model& m, const SceneEncoding& enc, const CandidateContext& cands,
                   const std::vector<Vec3>& queries, TriplaneCounters* counters, int threads) {
  if (!enc.has_planes) throw std::logic_error("query_features: planes not built");
  const QueryBatch batch = make_query_batch(queries, cands.points, enc.affine, threads);
  const QueryParts parts{m.cfg.use_global, m.cfg.use_local};
  if (m.cfg.local_mode == LocalMode::Nearest || !m.cfg.use_local) {
    return queried_features(t, enc.planes, m.fusers, m.occupancy, batch, cands.embeddings, cands.points, enc.affine,
                            m.cfg.spec.r, parts, counters);
  }
  const int M = static_cast<int>(queries.size());
  Var global = m.cfg.use_global ? query_global(t, enc.planes, m.fusers, batch.normalized, counters)
                                : t.constant(Tensor({M, m.cfg.c_t}));
  std::vector<int> rows, group;
  ball_members(enc.world, queries, rows, group);
  Var pooled = nn::max_pool(t, nn::gather_rows(t, enc.embeddings, std::move(rows)), group, M);
  Var pe = m.occupancy.pe(
      t, t.constant(relative_position_input(batch.world, cands.points, batch.nearest, enc.affine, m.cfg.spec.r)));
  return nn::concat_cols(t, {global, pooled, pe});
}

Var occupancy_probabilities(Tape& t, const Model& m, Var features) {
  return decode_occupancy(t, m.occupancy, features);
}

std::vector<ShapeInput> shape_inputs_from_region(const LocalRegion& region, const std::vector<bool>& occupied,
                                                 const std::vector<CandidateFrame>& frames,
                                                 const GraspRegionSpec& spec) {
  std::vector<ShapeInput> out(frames.size());
  for (std::size_t b = 0; b < frames.size(); ++b) {
    out[b].frame = frames[b];
    for (std::size_t n : cylinder_members(region, frames[b], spec)) {
      if (!occupied[n]) continue;
      out[b].points.push_back(region.centers[n]);
      out[b].feature_rows.push_back(static_cast<int>(n));
    }
  }
  return out;
}

std::vector<ShapeInput> shape_inputs_from_cloud(const PointCloud& world, const std::vector<CandidateFrame>& frames,
                                                const GraspRegionSpec& spec) {
  std::vector<ShapeInput> out(frames.size());
  for (std::size_t b = 0; b < frames.size(); ++b) {
    out[b].frame = frames[b];
    for (std::size_t i = 0; i < world.size(); ++i) {
      if (!in_grasp_cylinder(world[i], frames[b], spec)) continue;
      out[b].points.push_back(world[i]);
      out[b].feature_rows.push_back(static_cast<int>(i));
    }
  }
  return out;
}

VoxelSet voxelize_points(const PointCloud& world, double v) {
  VoxelSet s;
  for (const auto& p : world) s.insert(voxel_key(p, v));
  return s;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

constexpr std::size_t kQueryChunk = 8192;

}  // namespace

InferResult infer(const Model& m, const PointCloud& world, const InferOptions& opt) {
  InferResult r;
  const auto start = Clock::now();
  const ModelConfig& cfg = m.cfg;
  Tape t(&m.store, false);

  // Encode, candidates, initial directions.
  auto t0 = Clock::now();
  SceneEncoding enc = encode_points_only(t, m, world);
  const auto area = affordance_area(t.value(enc.affordance));
  const auto idx = sample_candidates(world.size(), area, opt.candidates, mix_seed(opt.seed, 1));
  std::vector<int> rows(idx.begin(), idx.end());
  const Var cand_emb = nn::gather_rows(t, enc.embeddings, rows);
  const Tensor vs = t.value(view_scores(t, m, cand_emb));
  CandidateContext ctx{{}, cand_emb};
  for (std::size_t b = 0; b < idx.size(); ++b) {
    const int dir = argmax_row(vs, static_cast<int>(b));
    r.candidates.push_back(make_candidate(idx[b], world[idx[b]], m.directions, dir));
    r.initial_directions.push_back(dir);
    ctx.points.push_back(world[idx[b]]);
  }
  r.times.encode = seconds_since(t0);

  // Planes.
  t0 = Clock::now();
  if (cfg.use_occupancy) build_planes(t, m, enc, &r.counters);
  r.times.planes = seconds_since(t0);

  // Region and occupancy queries.
  t0 = Clock::now();
  auto frames_of = [&]() {
    std::vector<CandidateFrame> f;
    for (const auto& c : r.candidates) f.push_back(c.frame());
    return f;
  };
  Var row_features{};
  VoxelSet occupied_set;
  if (cfg.use_occupancy) {
    const Aabb clip = query_domain_box(enc.affine);
    r.region = build_region(frames_of(), cfg.spec, opt.region_budget, &clip, opt.threads);
    // Queries run in chunks on short-lived tapes holding detached planes.
    auto run_queries = [&](const std::vector<Vec3>& queries, const std::function<void(std::size_t, const double*, double)>& sink) {
      for (std::size_t lo = 0; lo < queries.size(); lo += kQueryChunk) {
        const std::size_t hi = std::min(queries.size(), lo + kQueryChunk);
        Tape u(&m.store, false);
        SceneEncoding local = enc;
        local.planes = detach_planes(t, enc.planes, u);
        local.embeddings = u.constant(t.value(enc.embeddings));
        CandidateContext c{ctx.points, u.constant(t.value(cand_emb))};
        const std::vector<Vec3> q(queries.begin() + static_cast<std::ptrdiff_t>(lo),
                                  queries.begin() + static_cast<std::ptrdiff_t>(hi));
        const Var f = query_features(u, m, local, c, q, &r.counters, opt.threads);
        const Tensor& fv = u.value(f);
        const Tensor& p = u.value(occupancy_probabilities(u, m, f));
        for (std::size_t j = 0; j < hi - lo; ++j) sink(lo + j, fv.data.data() + j * static_cast<std::size_t>(cfg.c_q), p.data[j]);
      }
    };
    const int M = static_cast<int>(r.region.size());
    Tensor feats({M, cfg.c_q});
    r.probabilities.resize(r.region.size());
    const auto qc = static_cast<std::size_t>(cfg.c_q);
    if (opt.dense_grid == 0) {
      r.queried_voxels = r.region.size();
      run_queries(r.region.centers, [&](std::size_t n, const double* f, double p) {
        std::copy(f, f + qc, feats.data.begin() + static_cast<std::ptrdiff_t>(n * qc));
        r.probabilities[n] = p;
      });
    } else {
      // Dense baseline: every cell of an n^3 lattice over the query domain;
      // region voxels read the cell that contains their center.
      const std::size_t n = opt.dense_grid;
      const Vec3 step = (clip.hi - clip.lo) / static_cast<double>(n);
      std::vector<Vec3> lattice;
      lattice.reserve(n * n * n);
      for (std::size_t z = 0; z < n; ++z)
        for (std::size_t y = 0; y < n; ++y)
          for (std::size_t x = 0; x < n; ++x)
            lattice.push_back(clip.lo + Vec3((x + 0.5) * step.x(), (y + 0.5) * step.y(), (z + 0.5) * step.z()));
      std::unordered_map<std::size_t, std::vector<std::size_t>> readers;
      for (std::size_t v = 0; v < r.region.size(); ++v) {
        std::size_t cell[3];
        for (int k = 0; k < 3; ++k) {
          const double u = std::floor((r.region.centers[v][k] - clip.lo[k]) / step[k]);
          cell[k] = static_cast<std::size_t>(std::clamp(u, 0.0, static_cast<double>(n - 1)));
        }
        readers[(cell[2] * n + cell[1]) * n + cell[0]].push_back(v);
      }
      r.queried_voxels = lattice.size();
      run_queries(lattice, [&](std::size_t cell, const double* f, double p) {
        const auto it = readers.find(cell);
        if (it == readers.end()) return;
        for (std::size_t v : it->second) {
          std::copy(f, f + qc, feats.data.begin() + static_cast<std::ptrdiff_t>(v * qc));
          r.probabilities[v] = p;
        }
      });
    }
    r.occupied.resize(r.region.size());
    for (std::size_t v = 0; v < r.region.size(); ++v) {
      r.occupied[v] = r.probabilities[v] > 0.5;
      if (r.occupied[v]) occupied_set.insert(r.region.voxels[v]);
    }
    row_features = t.constant(std::move(feats));
  } else {
    row_features = enc.embeddings;
    occupied_set = voxelize_points(world, cfg.spec.v);
  }
  r.times.query = seconds_since(t0);

  // Shape features, refinement, pose decoding, filtering.
  t0 = Clock::now();
  const std::uint64_t shape_seed = mix_seed(opt.seed, 2);
  auto inputs_for = [&](const std::vector<CandidateFrame>& frames) {
    return cfg.use_occupancy ? shape_inputs_from_region(r.region, r.occupied, frames, cfg.spec)
                             : shape_inputs_from_cloud(world, frames, cfg.spec);
  };
  std::vector<ShapeInput> inputs = inputs_for(frames_of());
  Var shape = m.shape(t, inputs, row_features, shape_seed);
  if (cfg.refine && !r.candidates.empty()) {
    const Tensor rs = t.value(refine_scores(t, m, shape));
    bool changed = false;
    for (std::size_t b = 0; b < r.candidates.size(); ++b) {
      const int dir = argmax_row(rs, static_cast<int>(b));
      if (dir == r.candidates[b].direction) continue;
      r.candidates[b] = make_candidate(r.candidates[b].point_index, r.candidates[b].p_g, m.directions, dir);
      changed = true;
    }
    if (changed) {
      inputs = inputs_for(frames_of());
      shape = m.shape(t, inputs, row_features, shape_seed);
    }
  }
  const auto [sv, wv] = m.pose(t, shape);
  const Tensor& scores = t.value(sv);
  const Tensor& widths = t.value(wv);
  for (std::size_t b = 0; b < r.candidates.size(); ++b)
    r.decoded.push_back(decode_pose(r.candidates[b], scores, widths, static_cast<int>(b)));
  r.poses = pose_nms(collision_filter(r.decoded, occupied_set, cfg.body, cfg.spec), opt.nms_radius, opt.nms_top);
  r.times.decode = seconds_since(t0);
  r.times.total = seconds_since(start);
  return r;
}

}  // namespace occugrasp
