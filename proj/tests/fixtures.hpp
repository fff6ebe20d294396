#pragma once

#include "occugrasp/dataset.hpp"
#include "occugrasp/model.hpp"

namespace fixtures {

/// Small model so pipeline tests run in seconds.
inline occugrasp::ModelConfig small_config() {
  occugrasp::ModelConfig c;
  c.plane_h = 8;
  c.plane_w = 8;
  c.c_p = 16;
  c.c_t = 8;
  c.c_q = 32;
  c.views = 12;
  return c;
}

}  // namespace fixtures
