#include "spinkernel/config.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "spinkernel/errors.hpp"

namespace spinkernel::config {
namespace {

using nlohmann::json;

const std::set<std::string> kKeys = {
    "model",  "gamma",        "delta", "h",          "axis",           "windows",
    "points_per_side", "sizes", "engine", "kind",     "sector",         "zero_momentum",
    "scan",   "benchmark",    "shots", "sample_diagonal", "bounds",     "include_diagonal",
    "stats_kind", "histogram_bins", "C", "bracket",  "fit",            "seed",
    "out",    "ed"};

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw InvalidArgument(where + ": expected a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (!allowed.count(k)) throw InvalidArgument(where + ": unknown field '" + k + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw InvalidArgument(where + "." + key + ": " + e.what());
  }
}

Window read_window(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2) throw InvalidArgument(where + ": expected [lo, hi]");
  try {
    return {j[0].get<double>(), j[1].get<double>()};
  } catch (const json::exception& e) {
    throw InvalidArgument(where + ": " + e.what());
  }
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

}  // namespace

RunConfig preset(const std::string& model) {
  RunConfig c;
  c.model = model;
  if (model == "ising") {
    c.gamma = 1.0;
  } else if (model == "xy") {
    c.gamma = 0.5;
  } else if (model == "xx") {
    c.gamma = 1e-3;
  } else if (model == "xxz") {
    c.gamma = 1e-3;
    c.h = 0.0;
    c.axis = kernel::Axis::delta;
    c.left = {0.35, 0.45};
    c.right = {0.55, 0.65};
    c.scan = {0.3, 0.7, 0.005, 0.005};
    c.engine = kernel::EngineKind::ed;
  } else if (model == "custom") {
    c.gamma = 1.0;
  } else {
    throw InvalidArgument("model: unknown preset '" + model + "' (expected ising|xy|xx|xxz|custom)");
  }
  return c;
}

void RunConfig::validate() const {
  if (sizes.empty()) throw InvalidArgument("sizes: the list of system sizes is empty");
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    base(sizes[i]).validate();
    if (i > 0 && sizes[i] <= sizes[i - 1]) throw InvalidArgument("sizes: must be strictly increasing");
  }
  if (!(left.lo <= left.hi && right.lo <= right.hi)) throw InvalidArgument("windows: each window needs lo <= hi");
  if (!(left.hi < right.lo)) throw InvalidArgument("windows: the left window must lie entirely below the right one");
  if (axis == kernel::Axis::h && left.lo < 0.0) throw InvalidArgument("windows: h must be >= 0");
  if (points_per_side == 0) throw InvalidArgument("points_per_side: must be >= 1");
  if (engine == kernel::EngineKind::analytic && (delta != 0.0 || axis == kernel::Axis::delta)) {
    throw InvalidArgument("engine: the analytic engine needs delta = 0 and the h axis");
  }
  if (!(scan.lo < scan.hi) || !(scan.grid_step > 0.0) || !(scan.dx > 0.0)) {
    throw InvalidArgument("scan: need lo < hi, grid_step > 0 and dx > 0");
  }
  if (benchmark && (!(benchmark->lo < benchmark->hi) || !(benchmark->step > 0.0))) {
    throw InvalidArgument("benchmark: need lo < hi and step > 0");
  }
  bounds.validate();
  if (histogram_bins < 2) throw InvalidArgument("histogram_bins: must be >= 2");
  if (!(C > 0.0)) throw InvalidArgument("C: must be positive");
  const Window b = resolved_bracket();
  if (!(b.lo < b.hi)) throw InvalidArgument("bracket: need lo < hi");
  if (fit != "auto" && fit != "power" && fit != "bkt" && fit != "none") {
    throw InvalidArgument("fit: expected auto|power|bkt|none");
  }
  if (sector != "auto") parse_sector(sector);
  if (!(ed.tol > 0.0 && ed.tol <= 1e-4)) throw InvalidArgument("ed.tol: must lie in (0, 1e-4]");
  if (out.empty()) throw InvalidArgument("out: empty output directory");
}

ParitySector RunConfig::resolved_sector() const {
  if (sector != "auto") return parse_sector(sector);
  // Field-driven free-fermion runs use the even sector; interacting runs the full space.
  return (delta == 0.0 && axis == kernel::Axis::h) ? ParitySector::even : ParitySector::full;
}

std::string RunConfig::resolved_fit() const {
  if (fit != "auto") return fit;
  return axis == kernel::Axis::h ? "power" : "bkt";
}

Window RunConfig::resolved_bracket() const { return bracket ? *bracket : Window{left.lo, right.hi}; }

ModelParams RunConfig::base(int n_sites) const {
  ModelParams p;
  p.gamma = gamma;
  p.delta = delta;
  p.h = h;
  p.n_sites = n_sites;
  p.sector = resolved_sector();
  p.zero_momentum = zero_momentum;
  return p;
}

RunConfig from_json(const json& j) {
  check_keys(j, kKeys, "config");
  std::string model = "ising";
  read(j, "model", model, "config");
  RunConfig c = preset(model);
  read(j, "gamma", c.gamma, "config");
  read(j, "delta", c.delta, "config");
  read(j, "h", c.h, "config");
  if (j.contains("axis")) c.axis = kernel::parse_axis(j.at("axis").get<std::string>());
  if (j.contains("windows")) {
    const auto& w = j.at("windows");
    check_keys(w, {"left", "right"}, "windows");
    if (w.contains("left")) c.left = read_window(w.at("left"), "windows.left");
    if (w.contains("right")) c.right = read_window(w.at("right"), "windows.right");
  } else if (j.contains("axis") && c.axis == kernel::Axis::delta && model != "xxz") {
    c.left = {0.35, 0.45};
    c.right = {0.55, 0.65};
  }
  read(j, "points_per_side", c.points_per_side, "config");
  read(j, "sizes", c.sizes, "config");
  if (j.contains("engine")) {
    c.engine = kernel::parse_engine(j.at("engine").get<std::string>());
  } else {
    c.engine = (c.delta == 0.0 && c.axis == kernel::Axis::h) ? kernel::EngineKind::analytic
                                                            : kernel::EngineKind::ed;
  }
  if (j.contains("kind")) c.kind = kernel::parse_kind(j.at("kind").get<std::string>());
  read(j, "sector", c.sector, "config");
  read(j, "zero_momentum", c.zero_momentum, "config");
  if (j.contains("scan")) {
    const auto& s = j.at("scan");
    check_keys(s, {"lo", "hi", "grid_step", "dx"}, "scan");
    read(s, "lo", c.scan.lo, "scan");
    read(s, "hi", c.scan.hi, "scan");
    read(s, "grid_step", c.scan.grid_step, "scan");
    read(s, "dx", c.scan.dx, "scan");
  }
  if (j.contains("benchmark") && !j.at("benchmark").is_null()) {
    const auto& b = j.at("benchmark");
    check_keys(b, {"h_ref", "lo", "hi", "step"}, "benchmark");
    BenchmarkSettings bs;
    read(b, "h_ref", bs.h_ref, "benchmark");
    read(b, "lo", bs.lo, "benchmark");
    read(b, "hi", bs.hi, "benchmark");
    read(b, "step", bs.step, "benchmark");
    c.benchmark = bs;
  }
  read(j, "shots", c.shots, "config");
  read(j, "sample_diagonal", c.sample_diagonal, "config");
  if (j.contains("bounds")) {
    const auto& b = j.at("bounds");
    check_keys(b, {"epsilon", "p_spread", "epsilon_ca", "p_ca"}, "bounds");
    read(b, "epsilon", c.bounds.epsilon, "bounds");
    read(b, "p_spread", c.bounds.p_spread, "bounds");
    read(b, "epsilon_ca", c.bounds.epsilon_ca, "bounds");
    read(b, "p_ca", c.bounds.p_ca, "bounds");
  }
  read(j, "include_diagonal", c.include_diagonal, "config");
  if (j.contains("stats_kind")) c.stats_kind = kernel::parse_kind(j.at("stats_kind").get<std::string>());
  read(j, "histogram_bins", c.histogram_bins, "config");
  read(j, "C", c.C, "config");
  if (j.contains("bracket") && !j.at("bracket").is_null()) c.bracket = read_window(j.at("bracket"), "bracket");
  read(j, "fit", c.fit, "config");
  read(j, "seed", c.seed, "config");
  read(j, "out", c.out, "config");
  if (j.contains("ed")) {
    const auto& e = j.at("ed");
    check_keys(e, {"tol", "max_sites", "cache_dir", "threads"}, "ed");
    read(e, "tol", c.ed.tol, "ed");
    read(e, "max_sites", c.ed.max_sites, "ed");
    if (e.contains("cache_dir") && !e.at("cache_dir").is_null()) c.ed.cache_dir = e.at("cache_dir").get<std::string>();
    read(e, "threads", c.ed.threads, "ed");
  }
  return c;
}

RunConfig load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw InvalidArgument("cannot open config file " + path);
  json j;
  try {
    j = json::parse(is);
  } catch (const json::parse_error& e) {
    throw InvalidArgument("config " + path + ": " + e.what());
  }
  return from_json(j);
}

json to_json(const RunConfig& c) {
  json j = {
      {"model", c.model},
      {"gamma", c.gamma},
      {"delta", c.delta},
      {"h", c.h},
      {"axis", kernel::to_string(c.axis)},
      {"windows", {{"left", {c.left.lo, c.left.hi}}, {"right", {c.right.lo, c.right.hi}}}},
      {"points_per_side", c.points_per_side},
      {"sizes", c.sizes},
      {"engine", kernel::to_string(c.engine)},
      {"kind", kernel::to_string(c.kind)},
      {"sector", c.sector},
      {"zero_momentum", c.zero_momentum},
      {"scan", {{"lo", c.scan.lo}, {"hi", c.scan.hi}, {"grid_step", c.scan.grid_step}, {"dx", c.scan.dx}}},
      {"benchmark", nullptr},
      {"shots", c.shots},
      {"sample_diagonal", c.sample_diagonal},
      {"bounds",
       {{"epsilon", c.bounds.epsilon},
        {"p_spread", c.bounds.p_spread},
        {"epsilon_ca", c.bounds.epsilon_ca},
        {"p_ca", c.bounds.p_ca}}},
      {"include_diagonal", c.include_diagonal},
      {"stats_kind", kernel::to_string(c.stats_kind)},
      {"histogram_bins", c.histogram_bins},
      {"C", c.C},
      {"bracket", nullptr},
      {"fit", c.fit},
      {"seed", c.seed},
      {"out", c.out},
      {"ed",
       {{"tol", c.ed.tol},
        {"max_sites", c.ed.max_sites},
        {"cache_dir", c.ed.cache_dir ? json(*c.ed.cache_dir) : json(nullptr)},
        {"threads", c.ed.threads}}}};
  if (c.benchmark) {
    j["benchmark"] = {{"h_ref", c.benchmark->h_ref}, {"lo", c.benchmark->lo},
                      {"hi", c.benchmark->hi}, {"step", c.benchmark->step}};
  }
  if (c.bracket) j["bracket"] = {c.bracket->lo, c.bracket->hi};
  return j;
}

std::string config_hash(const RunConfig& c) {
  json j = to_json(c);
  // Where results go and how many threads compute them do not change them.
  j.erase("out");
  j["ed"].erase("cache_dir");
  j["ed"].erase("threads");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : j.dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return hex64(h);
}

}  // namespace spinkernel::config
