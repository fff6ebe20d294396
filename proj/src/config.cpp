#include "occugrasp/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <thread>

#include "occugrasp/errors.hpp"

namespace occugrasp {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

long long to_int(const std::string& k, const std::string& v, long long lo) {
  std::size_t used = 0;
  long long x = 0;
  try {
    x = std::stoll(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty()) throw ConfigError(k + ": expected an integer, got '" + v + "'");
  if (x < lo) throw ConfigError(k + ": must be at least " + std::to_string(lo));
  return x;
}

std::uint64_t to_u64(const std::string& k, const std::string& v) {
  std::size_t used = 0;
  unsigned long long x = 0;
  try {
    if (!v.empty() && v[0] != '-') x = std::stoull(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty()) throw ConfigError(k + ": expected an unsigned integer, got '" + v + "'");
  return x;
}

double to_double(const std::string& k, const std::string& v) {
  std::size_t used = 0;
  double x = 0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty() || !std::isfinite(x)) throw ConfigError(k + ": expected a number, got '" + v + "'");
  return x;
}

bool to_bool(const std::string& k, const std::string& v) {
  std::string l = v;
  std::transform(l.begin(), l.end(), l.begin(), [](unsigned char c) { return std::tolower(c); });
  if (l == "1" || l == "true" || l == "on" || l == "yes") return true;
  if (l == "0" || l == "false" || l == "off" || l == "no") return false;
  throw ConfigError(k + ": expected true or false, got '" + v + "'");
}

struct Field {
  std::string key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

const std::vector<Field>& fields() {
  static const std::vector<Field> f = [] {
    std::vector<Field> v;
    auto add = [&](const char* key, std::function<void(RunConfig&, const std::string&)> set,
                   std::function<std::string(const RunConfig&)> get) { v.push_back({key, std::move(set), std::move(get)}); };
#define OG_INT(KEY, EXPR, LO)                                                               \
  add(KEY, [](RunConfig& c, const std::string& s) { c.EXPR = static_cast<decltype(c.EXPR)>(to_int(KEY, s, LO)); }, \
      [](const RunConfig& c) { return std::to_string(c.EXPR); })
#define OG_DBL(KEY, EXPR)                                                        \
  add(KEY, [](RunConfig& c, const std::string& s) { c.EXPR = to_double(KEY, s); }, \
      [](const RunConfig& c) { return fmt(c.EXPR); })
#define OG_BOOL(KEY, EXPR)                                                     \
  add(KEY, [](RunConfig& c, const std::string& s) { c.EXPR = to_bool(KEY, s); }, \
      [](const RunConfig& c) { return std::string(c.EXPR ? "true" : "false"); })
    add("seed", [](RunConfig& c, const std::string& s) { c.train.seed = to_u64("seed", s); },
        [](const RunConfig& c) { return std::to_string(c.train.seed); });
    OG_INT("k_groups", model.k_groups, 1);
    OG_INT("plane_h", model.plane_h, 4);
    OG_INT("plane_w", model.plane_w, 4);
    OG_INT("c_p", model.c_p, 1);
    OG_INT("c_t", model.c_t, 1);
    OG_INT("c_q", model.c_q, 4);
    OG_INT("views", model.views, 1);
    OG_DBL("voxel_size", model.spec.v);
    OG_DBL("gripper_radius", model.spec.r);
    OG_DBL("d_min", model.spec.d_min);
    OG_DBL("d_max", model.spec.d_max);
    OG_DBL("finger_thickness", model.body.finger_thickness);
    OG_DBL("palm_depth", model.body.palm_depth);
    OG_BOOL("use_density", model.use_density);
    OG_BOOL("use_global", model.use_global);
    OG_BOOL("use_local", model.use_local);
    OG_BOOL("use_occupancy", model.use_occupancy);
    OG_BOOL("refine", model.refine);
    add("implicit_mode", [](RunConfig& c, const std::string& s) {
          try {
            c.model.implicit_mode = implicit_mode_from_name(s);
          } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("implicit_mode: ") + e.what());
          }
        },
        [](const RunConfig& c) { return std::string(implicit_mode_name(c.model.implicit_mode)); });
    add("local_mode", [](RunConfig& c, const std::string& s) {
          try {
            c.model.local_mode = local_mode_from_name(s);
          } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("local_mode: ") + e.what());
          }
        },
        [](const RunConfig& c) { return std::string(local_mode_name(c.model.local_mode)); });
    OG_DBL("lr", train.lr);
    OG_INT("steps", train.steps, 0);
    OG_INT("batch", train.batch, 1);
    OG_INT("n_points", train.n_points, 16);
    OG_INT("train_voxels", train.train_voxels, 1);
    OG_INT("train_candidates", train.train_candidates, 1);
    OG_INT("region_candidates", train.region_candidates, 1);
    OG_DBL("noise_sigma", train.noise_sigma);
    OG_DBL("noise_fraction", train.noise_fraction);
    OG_DBL("lambda_affordance", train.weights.affordance);
    OG_DBL("lambda_view", train.weights.view);
    OG_DBL("lambda_pose", train.weights.pose);
    OG_INT("candidates", candidates, 1);
    OG_INT("region_budget", train.region_budget, 1);
    OG_INT("threads", train.threads, 1);
#undef OG_INT
#undef OG_DBL
#undef OG_BOOL
    return v;
  }();
  return f;
}

const Field* find_field(const std::string& key) {
  for (const auto& f : fields())
    if (f.key == key) return &f;
  return nullptr;
}

}  // namespace

KeyValues parse_config_text(const std::string& text) {
  KeyValues out;
  std::istringstream in(text);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(n) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("config line " + std::to_string(n) + ": empty key");
    out.emplace_back(key, value);
  }
  return out;
}

KeyValues read_config_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read config " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str());
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k{"profile"};
    for (const auto& f : fields()) k.push_back(f.key);
    return k;
  }();
  return keys;
}

std::string config_value(const RunConfig& c, const std::string& key) {
  if (key == "profile") return c.profile;
  const Field* f = find_field(key);
  if (!f) throw ConfigError("unknown config key: " + key);
  return f->get(c);
}

void apply_profile(RunConfig& c, const std::string& name) {
  if (name == "tiny") {
    const ModelConfig d;
    c.model.plane_h = d.plane_h;
    c.model.plane_w = d.plane_w;
    c.model.c_p = d.c_p;
    c.model.c_t = d.c_t;
    c.model.c_q = d.c_q;
  } else if (name == "full") {
    c.model.plane_h = 64;
    c.model.plane_w = 64;
    c.model.c_p = 256;
    c.model.c_t = 128;
    c.model.c_q = 512;
  } else {
    throw ConfigError("unknown profile: " + name + " (expected tiny or full)");
  }
  c.profile = name;
}

RunConfig resolve_config(const KeyValues& file, const KeyValues& flags, const char* env_seed, std::ostream* log) {
  RunConfig c;
  c.train.threads = std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
  for (const auto& k : config_keys()) c.source[k] = "default";

  auto check_keys = [](const KeyValues& kv, const char* where) {
    for (const auto& [k, v] : kv) {
      if (k != "profile" && !find_field(k)) throw ConfigError(std::string("unknown config key in ") + where + ": " + k);
    }
  };
  check_keys(file, "file");
  check_keys(flags, "flags");

  std::string profile = "tiny";
  std::string profile_src = "default";
  for (const auto& [k, v] : file)
    if (k == "profile") profile = v, profile_src = "file";
  for (const auto& [k, v] : flags)
    if (k == "profile") profile = v, profile_src = "flag";
  apply_profile(c, profile);
  c.source["profile"] = profile_src;
  if (profile != "tiny") {
    for (const char* k : {"plane_h", "plane_w", "c_p", "c_t", "c_q"}) c.source[k] = "profile";
  }

  auto apply = [&](const KeyValues& kv, const char* src) {
    for (const auto& [k, v] : kv) {
      if (k == "profile") continue;
      find_field(k)->set(c, v);
      c.source[k] = src;
    }
  };
  apply(file, "file");
  apply(flags, "flag");
  if (c.source["seed"] == "default" && env_seed && *env_seed) {
    c.train.seed = to_u64("OCCUGRASP_SEED", env_seed);
    c.source["seed"] = "env";
  }
  try {
    c.model.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (c.train.noise_fraction < 0 || c.train.noise_fraction > 1) throw ConfigError("noise_fraction must be in [0, 1]");
  if (c.train.noise_sigma < 0) throw ConfigError("noise_sigma must be nonnegative");
  if (c.train.lr < 0) throw ConfigError("lr must be nonnegative");

  if (log) {
    for (const auto& k : config_keys()) {
      if (c.source[k] == "default") *log << "config: " << k << " = " << config_value(c, k) << " (default)\n";
    }
  }
  return c;
}

std::string config_text(const RunConfig& c) {
  std::string out;
  for (const auto& k : config_keys()) out += k + " = " + config_value(c, k) + "\n";
  return out;
}

}  // namespace occugrasp
