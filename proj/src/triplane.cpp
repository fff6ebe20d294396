#include "occugrasp/triplane.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "binio.hpp"

namespace occugrasp {

using nn::Tape;
using nn::Tensor;
using nn::Var;

PointEncoder::PointEncoder(nn::ParameterStore& store, const std::string& name, int width)
    : mlp(store, name, {6, width, width}) {}

Tensor point_encoder_input(const PointCloud& world, const UnitCubeAffine& affine, double neighborhood) {
  const PointCloud centroids = voxel_neighborhood_centroids(world, neighborhood);
  Tensor x({static_cast<int>(world.size()), 6});
  for (std::size_t i = 0; i < world.size(); ++i) {
    const Vec3 p = affine.apply(world[i]);
    const Vec3 c = affine.apply(centroids[i]);
    if (p.minCoeff() < -kNormalizedSlack || p.maxCoeff() > 1.0 + kNormalizedSlack) {
      throw std::invalid_argument("point encoder: input point outside the normalized unit cube");
    }
    for (int k = 0; k < 3; ++k) {
      x.at(static_cast<int>(i), k) = p[k];
      x.at(static_cast<int>(i), 3 + k) = c[k];
    }
  }
  return x;
}

Var encode_points(Tape& t, const PointEncoder& enc, const Tensor& input) {
  return enc.mlp(t, t.constant(input));
}

std::array<int, 2> plane_cell(double u, double v, int H, int W) {
  const int cu = std::clamp(static_cast<int>(std::floor(u * W)), 0, W - 1);
  const int cv = std::clamp(static_cast<int>(std::floor(v * H)), 0, H - 1);
  return {cu, cv};
}

namespace {

Vec3 group_coords(const GroupProjection& g, const Vec3& normalized) {
  return g.rotated_affine.apply(g.rotation * normalized).cwiseMax(0.0).cwiseMin(1.0);
}

std::array<double, 2> drop_axis(const Vec3& r, int plane) {
  switch (plane) {
    case 0: return {r.y(), r.z()};
    case 1: return {r.x(), r.z()};
    default: return {r.x(), r.y()};
  }
}

}  // namespace

std::array<double, 2> plane_coords(const GroupProjection& g, int plane, const Vec3& normalized) {
  return drop_axis(group_coords(g, normalized), plane);
}

GroupProjection project_indices(const PointCloud& normalized, const Mat3& rotation, int H, int W,
                                TriplaneCounters* counters) {
  if (H < 2 || W < 2) throw std::invalid_argument("plane resolution must be at least 2x2");
  if (normalized.empty()) throw std::invalid_argument("project_indices: empty cloud");
  GroupProjection g;
  g.rotation = rotation;
  g.H = H;
  g.W = W;
  PointCloud rotated;
  rotated.reserve(normalized.size());
  for (const auto& p : normalized) rotated.push_back(rotation * p);
  g.rotated_affine = unit_cube_affine(rotated);
  for (int i = 0; i < 3; ++i) {
    g.cell[i].resize(normalized.size());
    g.density[i].assign(static_cast<std::size_t>(H) * W, 0.0);
  }
  for (std::size_t n = 0; n < rotated.size(); ++n) {
    const Vec3 r = g.rotated_affine.apply(rotated[n]).cwiseMax(0.0).cwiseMin(1.0);
    for (int i = 0; i < 3; ++i) {
      const auto uv = drop_axis(r, i);
      const auto c = plane_cell(uv[0], uv[1], H, W);
      const int flat = c[1] * W + c[0];
      g.cell[i][n] = flat;
      g.density[i][flat] += 1.0;
    }
  }
  if (counters) counters->point_touches += 3 * normalized.size();
  return g;
}

std::vector<double> normalize_density(const std::vector<double>& counts) {
  if (counts.empty()) return {};
  const double m = *std::max_element(counts.begin(), counts.end());
  std::vector<double> out(counts.size());
  double s = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    out[i] = std::exp(counts[i] - m);
    s += out[i];
  }
  for (double& v : out) v /= s;
  return out;
}

RawGroup project_group(Tape& t, const PointCloud& normalized, Var embeddings, const Mat3& rotation, int H, int W,
                       TriplaneCounters* counters) {
  if (t.value(embeddings).rows() != static_cast<int>(normalized.size())) {
    throw std::invalid_argument("project_group: embeddings are not paired with the cloud");
  }
  RawGroup g;
  g.proj = project_indices(normalized, rotation, H, W, counters);
  for (int i = 0; i < 3; ++i) g.features[i] = nn::max_pool(t, embeddings, g.proj.cell[i], H * W);
  return g;
}

EncodedTriplanes encode_planes(Tape& t, const std::vector<RawGroup>& raw,
                               const std::array<nn::PlaneEncoder, 3>& encoders, bool use_density) {
  if (raw.empty()) throw std::invalid_argument("encode_planes: no groups");
  EncodedTriplanes out;
  const int H = raw[0].proj.H, W = raw[0].proj.W, K = static_cast<int>(raw.size());
  for (const auto& g : raw) out.groups.push_back(g.proj);
  for (int i = 0; i < 3; ++i) {
    std::vector<Var> parts;
    for (const auto& g : raw) {
      Var f = g.features[i];
      if (use_density) {
        Tensor d({H * W, 1}, normalize_density(g.proj.density[i]));
        f = nn::concat_cols(t, {f, t.constant(std::move(d))});
      }
      parts.push_back(f);
    }
    Var stacked = parts.size() == 1 ? parts[0] : nn::concat_rows(t, parts);
    const int C = t.value(stacked).cols();
    if (C != encoders[i].in) {
      throw std::invalid_argument("encode_planes: plane has " + std::to_string(C) + " channels, encoder expects " +
                                  std::to_string(encoders[i].in));
    }
    Var enc = encoders[i](t, nn::reshape(t, stacked, {K, H, W, C}));
    out.channels = encoders[i].channels;
    out.planes[i] = nn::reshape(t, enc, {K * H * W, out.channels});
  }
  return out;
}

EncodedTriplanes detach_planes(const Tape& src, const EncodedTriplanes& planes, Tape& dst) {
  EncodedTriplanes out = planes;
  for (int i = 0; i < 3; ++i) out.planes[i] = dst.constant(src.value(planes.planes[i]));
  return out;
}

std::array<std::pair<int, double>, 4> bilinear_taps(double u, double v, int H, int W) {
  const double x = std::clamp(u * W - 0.5, 0.0, static_cast<double>(W - 1));
  const double y = std::clamp(v * H - 0.5, 0.0, static_cast<double>(H - 1));
  const int x0 = std::min(static_cast<int>(std::floor(x)), W - 1);
  const int y0 = std::min(static_cast<int>(std::floor(y)), H - 1);
  const int x1 = std::min(x0 + 1, W - 1), y1 = std::min(y0 + 1, H - 1);
  const double fx = x - x0, fy = y - y0;
  return {{{y0 * W + x0, (1 - fx) * (1 - fy)},
           {y0 * W + x1, fx * (1 - fy)},
           {y1 * W + x0, (1 - fx) * fy},
           {y1 * W + x1, fx * fy}}};
}

GlobalFusers::GlobalFusers(nn::ParameterStore& store, const std::string& name, int K, int channels)
    : e1(store, name + ".e1", {3 * channels, channels, channels}),
      e2(store, name + ".e2", {K * channels, channels, channels}) {}

namespace {

void check_domain(const std::vector<Vec3>& q) {
  for (const auto& p : q) {
    if (!all_finite(p) || p.minCoeff() < -kQueryDomainSlack || p.maxCoeff() > 1.0 + kQueryDomainSlack) {
      throw std::invalid_argument("query point outside the normalized domain");
    }
  }
}

// Per (group, plane) bilinear reads, [Q, C_T] each, indexed [j][i].
std::vector<std::array<Var, 3>> read_planes(Tape& t, const EncodedTriplanes& planes, const std::vector<Vec3>& q,
                                            TriplaneCounters* counters) {
  check_domain(q);
  const int K = planes.K();
  std::vector<std::array<Var, 3>> out(K);
  for (int j = 0; j < K; ++j) {
    const GroupProjection& g = planes.groups[j];
    const int base = j * g.H * g.W;
    std::array<std::vector<int>, 3> idx;
    std::array<std::vector<double>, 3> w;
    for (auto& v : idx) v.reserve(q.size() * 4);
    for (auto& v : w) v.reserve(q.size() * 4);
    for (const auto& p : q) {
      const Vec3 r = group_coords(g, p);
      for (int i = 0; i < 3; ++i) {
        const auto uv = drop_axis(r, i);
        for (const auto& [cell, weight] : bilinear_taps(uv[0], uv[1], g.H, g.W)) {
          idx[i].push_back(base + cell);
          w[i].push_back(weight);
        }
      }
    }
    for (int i = 0; i < 3; ++i) out[j][i] = nn::weighted_rows(t, planes.planes[i], 4, std::move(idx[i]), std::move(w[i]));
  }
  if (counters) counters->bilinear_reads += 3ull * K * q.size();
  return out;
}

}  // namespace

Var sample_planes(Tape& t, const EncodedTriplanes& planes, const std::vector<Vec3>& q, TriplaneCounters* counters) {
  const auto reads = read_planes(t, planes, q, counters);
  std::vector<Var> cols;
  for (const auto& r : reads)
    for (Var v : r) cols.push_back(v);
  return nn::concat_cols(t, cols);
}

Var query_global(Tape& t, const EncodedTriplanes& planes, const GlobalFusers& fusers, const std::vector<Vec3>& q,
                 TriplaneCounters* counters) {
  const auto reads = read_planes(t, planes, q, counters);
  const int K = planes.K();
  const int Q = static_cast<int>(q.size());
  std::vector<Var> per_group;
  for (const auto& r : reads) per_group.push_back(nn::concat_cols(t, {r[0], r[1], r[2]}));
  // One fused E1 call over all groups, then one E2 call.
  Var fused = fusers.e1(t, K == 1 ? per_group[0] : nn::concat_rows(t, per_group));
  std::vector<Var> cols;
  for (int j = 0; j < K; ++j) cols.push_back(K == 1 ? fused : nn::slice_rows(t, fused, j * Q, Q));
  Var out = fusers.e2(t, K == 1 ? cols[0] : nn::concat_cols(t, cols));
  if (counters) counters->mlp_calls += 2ull * q.size();
  return out;
}

void write_tpl1(const std::string& path, const Tape& t, const EncodedTriplanes& planes) {
  binio::Writer w;
  w.magic("TPL1");
  const int K = planes.K();
  const int H = planes.groups.at(0).H, W = planes.groups.at(0).W, C = planes.channels;
  w.u32(static_cast<std::uint32_t>(K));
  w.u32(static_cast<std::uint32_t>(H));
  w.u32(static_cast<std::uint32_t>(W));
  w.u32(static_cast<std::uint32_t>(C));
  const std::size_t per_group = static_cast<std::size_t>(H) * W * C;
  for (int j = 0; j < K; ++j)
    for (int i = 0; i < 3; ++i) {
      const auto& v = t.value(planes.planes[i]).data;
      for (std::size_t e = 0; e < per_group; ++e) w.f32(static_cast<float>(v[j * per_group + e]));
    }
  w.save(path);
}

}  // namespace occugrasp
