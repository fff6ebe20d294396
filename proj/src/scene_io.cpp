#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "binio.hpp"
#include "occugrasp/scene.hpp"

namespace occugrasp {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void append_quat(std::string& s, const Quaternion& q) {
  s += " " + fmt(q.s) + " " + fmt(q.vx) + " " + fmt(q.vy) + " " + fmt(q.vz);
}

}  // namespace

std::string scene_to_text(const SdfScene& scene) {
  std::string s;
  s += "seed " + std::to_string(scene.rng_seed) + "\n";
  s += scene.has_table ? "table " + fmt(scene.table_height) + "\n" : "table none\n";
  s += "bounds";
  for (int k = 0; k < 3; ++k) s += " " + fmt(scene.bounds.lo[k]);
  for (int k = 0; k < 3; ++k) s += " " + fmt(scene.bounds.hi[k]);
  s += "\n";
  const Camera& c = scene.camera;
  s += "camera " + fmt(c.position.x()) + " " + fmt(c.position.y()) + " " + fmt(c.position.z());
  append_quat(s, c.orientation);
  s += " " + fmt(c.fx) + " " + fmt(c.fy) + " " + fmt(c.cx) + " " + fmt(c.cy) + " " +
       std::to_string(c.width) + " " + std::to_string(c.height) + "\n";
  for (const auto& o : scene.objects) {
    s += kind_name(o.kind);
    s += " " + fmt(o.center.x()) + " " + fmt(o.center.y()) + " " + fmt(o.center.z());
    append_quat(s, o.orientation);
    for (double p : o.params) s += " " + fmt(p);
    s += "\n";
  }
  return s;
}

SdfScene scene_from_text(const std::string& text) {
  SdfScene scene;
  scene.objects.clear();
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& why) {
    throw FormatError("scene line " + std::to_string(lineno) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "seed") {
      if (!(ls >> scene.rng_seed)) fail("bad seed");
    } else if (key == "table") {
      std::string v;
      ls >> v;
      if (v == "none") {
        scene.has_table = false;
      } else {
        scene.has_table = true;
        try {
          scene.table_height = std::stod(v);
        } catch (...) {
          fail("bad table height");
        }
      }
    } else if (key == "bounds") {
      for (int k = 0; k < 3; ++k) ls >> scene.bounds.lo[k];
      for (int k = 0; k < 3; ++k) ls >> scene.bounds.hi[k];
      if (!ls) fail("bad bounds");
    } else if (key == "camera") {
      Camera& c = scene.camera;
      Quaternion q;
      ls >> c.position.x() >> c.position.y() >> c.position.z() >> q.s >> q.vx >> q.vy >> q.vz >> c.fx >>
          c.fy >> c.cx >> c.cy >> c.width >> c.height;
      if (!ls) fail("bad camera");
      c.set_orientation(q);
    } else {
      PrimitiveKind kind = PrimitiveKind::Sphere;
      try {
        kind = kind_from_name(key);
      } catch (const std::invalid_argument& e) {
        fail(e.what());
      }
      Vec3 center;
      Quaternion q;
      ls >> center.x() >> center.y() >> center.z() >> q.s >> q.vx >> q.vy >> q.vz;
      std::vector<double> params(kind_param_count(kind));
      for (auto& p : params) ls >> p;
      if (!ls) fail("bad primitive");
      try {
        scene.objects.push_back(make_primitive(kind, center, q, std::move(params)));
      } catch (const std::invalid_argument& e) {
        fail(e.what());
      }
    }
  }
  return scene;
}

void write_scene(const std::string& path, const SdfScene& scene) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << scene_to_text(scene);
  if (!out) throw IoError("write failed: " + path);
}

SdfScene read_scene(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return scene_from_text(ss.str());
}

void write_occ1(const std::string& path, const OccupancyGrid& grid) {
  binio::Writer w;
  w.magic("OCC1");
  for (int k = 0; k < 3; ++k) w.f32(static_cast<float>(grid.origin[k]));
  w.f32(static_cast<float>(grid.voxel_size));
  for (int k = 0; k < 3; ++k) w.u32(grid.dims[k]);
  std::vector<unsigned char> packed((grid.voxel_count() + 7) / 8, 0);
  for (std::size_t i = 0; i < grid.voxel_count(); ++i)
    if (grid.occupancy[i]) packed[i / 8] |= static_cast<unsigned char>(1u << (i % 8));
  w.bytes(packed.data(), packed.size());
  w.save(path);
}

OccupancyGrid read_occ1(const std::string& path) {
  auto r = binio::Reader::load(path);
  r.expect_magic("OCC1");
  OccupancyGrid g;
  for (int k = 0; k < 3; ++k) g.origin[k] = r.f32();
  g.voxel_size = r.f32();
  for (int k = 0; k < 3; ++k) g.dims[k] = r.u32();
  if (!(g.voxel_size > 0.0)) throw FormatError(path + ": voxel size must be positive");
  const double total = static_cast<double>(g.dims[0]) * g.dims[1] * g.dims[2];
  if (total > 1e9) throw FormatError(path + ": grid too large");
  const std::size_t nbytes = (g.voxel_count() + 7) / 8;
  if (r.remaining() != nbytes) throw FormatError(path + ": payload size mismatch");
  const unsigned char* bits = r.take(nbytes);
  g.occupancy.resize(g.voxel_count());
  for (std::size_t i = 0; i < g.voxel_count(); ++i) g.occupancy[i] = (bits[i / 8] >> (i % 8)) & 1u;
  return g;
}

}  // namespace occugrasp
