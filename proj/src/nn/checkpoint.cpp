#include "occugrasp/nn/checkpoint.hpp"

#include "../binio.hpp"

namespace occugrasp::nn {

void write_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  binio::Writer w;
  w.magic("CKPT1");
  w.u32(static_cast<std::uint32_t>(ckpt.descriptor.size()));
  w.bytes(ckpt.descriptor.data(), ckpt.descriptor.size());
  w.u64(ckpt.params.size());
  for (double p : ckpt.params) w.f64(p);
  if (ckpt.adam) {
    w.magic("ADAM");
    w.u64(ckpt.adam->t);
    const auto& m = ckpt.adam->m;
    const auto& v = ckpt.adam->v;
    for (std::size_t i = 0; i < ckpt.params.size(); ++i) w.f64(i < m.size() ? m[i] : 0.0);
    for (std::size_t i = 0; i < ckpt.params.size(); ++i) w.f64(i < v.size() ? v[i] : 0.0);
  }
  w.save(path);
}

Checkpoint read_checkpoint(const std::string& path) {
  auto r = binio::Reader::load(path);
  r.expect_magic("CKPT1");
  Checkpoint c;
  c.descriptor = r.str(r.u32());
  const std::uint64_t n = r.u64();
  if (n > r.remaining() / 8) throw FormatError(path + ": parameter count exceeds file size");
  c.params.resize(n);
  for (auto& p : c.params) p = r.f64();
  if (r.remaining() > 0) {
    r.expect_magic("ADAM");
    AdamState s;
    s.t = r.u64();
    s.m.resize(n);
    s.v.resize(n);
    for (auto& x : s.m) x = r.f64();
    for (auto& x : s.v) x = r.f64();
    c.adam = std::move(s);
  }
  r.expect_end();
  return c;
}

}  // namespace occugrasp::nn
