#include "spinkernel/pipeline.hpp"

#include <chrono>
#include <ctime>
#include <iomanip>
#include <map>
#include <sstream>

namespace spinkernel::pipeline {
namespace {

using nlohmann::json;

json read_json_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw InvalidArgument("cannot open " + path);
  try {
    return json::parse(is);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(path + ": " + e.what());
  }
}

std::string size_tag(int n) { return "N" + std::to_string(n); }

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

}  // namespace

Pipeline::Pipeline(config::RunConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  hash_ = config::config_hash(cfg_);
  dir_ = cfg_.out;
  std::filesystem::create_directories(dir_);
  log_.open(dir_ / "run.log", std::ios::app);
  kernel::EdEngineOptions opt;
  opt.tol = cfg_.ed.tol;
  opt.max_sites = cfg_.ed.max_sites;
  if (cfg_.ed.cache_dir) opt.cache_dir = std::filesystem::path(*cfg_.ed.cache_dir);
  opt.threads = cfg_.ed.threads;
  engine_ = kernel::make_engine(cfg_.engine, opt);
}

void Pipeline::log(const std::string& line) const {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  log_ << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ") << ' ' << line << '\n';
  log_.flush();
}

std::ofstream Pipeline::open_csv(const std::string& name, const std::vector<std::string>& extra) {
  std::ofstream os(dir_ / name, std::ios::trunc);
  if (!os) throw InvalidArgument("cannot write " + (dir_ / name).string());
  os << "# " << kCsvVersion << "\n# config_hash=" << hash_ << "\n# seed=" << cfg_.seed << '\n';
  for (const auto& e : extra) os << "# " << e << '\n';
  os.precision(17);
  files_.push_back(name);
  log("wrote " + name);
  return os;
}

void Pipeline::write_json(const std::string& name, json j) {
  j["config_hash"] = hash_;
  j["seed"] = cfg_.seed;
  std::ofstream os(dir_ / name, std::ios::trunc);
  if (!os) throw InvalidArgument("cannot write " + (dir_ / name).string());
  os << j.dump(2) << '\n';
  files_.push_back(name);
  log("wrote " + name);
}

std::uint64_t Pipeline::stage_seed(int n) const {
  return swaptest::entry_seed(cfg_.seed, static_cast<std::size_t>(n), static_cast<std::size_t>(n));
}

svm::LabeledSet Pipeline::training_set(int n) const {
  return svm::two_windows(cfg_.base(n), cfg_.axis, cfg_.left.lo, cfg_.left.hi, cfg_.right.lo,
                          cfg_.right.hi, cfg_.points_per_side);
}

kernel::FidelityScan Pipeline::scan(int n) {
  const auto grid = kernel::arange(cfg_.scan.lo, cfg_.scan.hi, cfg_.scan.grid_step);
  return run_stage("scan", size_tag(n), [&] {
    return kernel::fidelity_scan(cfg_.base(n), cfg_.axis, grid, cfg_.scan.dx, *engine_, cfg_.kind);
  });
}

kernel::GramMatrix Pipeline::gram(int n, kernel::KernelKind kind) {
  const auto set = training_set(n);
  return run_stage("gram", size_tag(n), [&] {
    return kernel::gram(set.points, kind, *engine_, cfg_.ed.threads);
  });
}

kernel::GramMatrix Pipeline::sample(const kernel::GramMatrix& g, int n) const {
  if (cfg_.shots == 0) throw InvalidArgument("shots: sampling needs shots >= 1");
  return run_stage("sample", size_tag(n), [&] {
    return swaptest::sample_gram(g, {cfg_.shots, stage_seed(n)}, cfg_.sample_diagonal);
  });
}

svm::LabeledSet Pipeline::labels_for(const kernel::GramMatrix& g) const {
  svm::LabeledSet set;
  set.axis = cfg_.axis;
  set.points = g.points;
  for (const auto& p : g.points) {
    const double x = kernel::coordinate(p, cfg_.axis);
    if (x <= cfg_.left.hi) set.labels.push_back(-1);
    else if (x >= cfg_.right.lo) set.labels.push_back(1);
    else throw InvalidArgument("point " + std::to_string(x) + " lies between the training windows");
  }
  return set;
}

svm::SvmModel Pipeline::train(const kernel::GramMatrix& g) const {
  const int n = g.points.empty() ? 0 : g.points.front().n_sites;
  svm::SvmOptions opt;
  opt.C = cfg_.C;
  auto model = run_stage("train", size_tag(n), [&] { return svm::train(g, labels_for(g), opt); });
  if (model.gram_min_eigenvalue < -1e-8) {
    std::ostringstream os;
    os << "warning: Gram matrix for N=" << n << " is not PSD (min eigenvalue "
       << model.gram_min_eigenvalue << ")";
    log(os.str());
  }
  return model;
}

BoundaryRecord Pipeline::boundary(const svm::SvmModel& m, int n, const std::string& source) {
  const auto br = cfg_.resolved_bracket();
  BoundaryRecord r;
  r.n_sites = n;
  r.source = source;
  r.estimate = run_stage("boundary", size_tag(n) + " " + source,
                         [&] { return svm::boundary(m, br.lo, br.hi, *engine_); });
  const auto mid = run_stage("boundary", size_tag(n) + " midpoint", [&] {
    return svm::midpoint_diagnostics(m, *engine_, std::vector<double>{});
  });
  r.x_left = mid.x_left;
  r.x_right = mid.x_right;
  r.x_mid = mid.x_mid;
  r.ambiguous = mid.ambiguous;
  return r;
}

void Pipeline::write_gram_files(const kernel::GramMatrix& g, const std::string& stem) {
  std::ofstream os(dir_ / (stem + ".csv"), std::ios::trunc);
  if (!os) throw InvalidArgument("cannot write " + stem + ".csv");
  std::vector<std::string> pre = {kCsvVersion, "config_hash=" + hash_,
                                  "seed=" + std::to_string(cfg_.seed),
                                  "kind=" + kernel::to_string(g.kind),
                                  "provenance=" + kernel::to_string(g.provenance.source)};
  if (g.provenance.source == kernel::Provenance::Source::swap_sampled) {
    pre.push_back("shots=" + std::to_string(g.provenance.shots));
    pre.push_back("sample_seed=" + std::to_string(g.provenance.seed));
  }
  kernel::write_gram_csv(os, g, cfg_.axis, pre);
  files_.push_back(stem + ".csv");
  write_json(stem + ".json", kernel::to_json(g));
}

void Pipeline::write_scan() {
  auto os = open_csv("scan.csv", {"dx=" + std::to_string(cfg_.scan.dx), "kind=" + kernel::to_string(cfg_.kind)});
  os << "N," << kernel::to_string(cfg_.axis) << ",fidelity,argmin\n";
  for (int n : cfg_.sizes) {
    const auto s = scan(n);
    for (std::size_t i = 0; i < s.grid.size(); ++i) {
      os << n << ',' << s.grid[i] << ',' << s.fidelities[i] << ',' << (i == s.argmin_index ? 1 : 0) << '\n';
    }
    log("scan N=" + std::to_string(n) + " argmin=" + std::to_string(s.argmin));
  }
}

void Pipeline::write_gram() {
  for (int n : cfg_.sizes) write_gram_files(gram(n, cfg_.kind), "gram_" + size_tag(n));
}

void Pipeline::write_sample(const std::optional<std::string>& gram_json) {
  if (gram_json) {
    const auto g = kernel::gram_from_json(read_json_file(*gram_json));
    const int n = g.points.at(0).n_sites;
    write_gram_files(sample(g, n), "gram_sampled_" + size_tag(n));
    return;
  }
  for (int n : cfg_.sizes) write_gram_files(sample(gram(n, cfg_.kind), n), "gram_sampled_" + size_tag(n));
}

void Pipeline::write_train(const std::optional<std::string>& gram_json) {
  if (gram_json) {
    const auto g = kernel::gram_from_json(read_json_file(*gram_json));
    std::string stem = std::filesystem::path(*gram_json).stem().string();
    if (stem.rfind("gram_", 0) == 0) stem.erase(0, 5);
    write_json("svm_" + stem + ".json", svm::to_json(train(g)));
    return;
  }
  for (int n : cfg_.sizes) {
    const auto g = gram(n, cfg_.kind);
    write_json("svm_" + size_tag(n) + ".json", svm::to_json(train(g)));
    if (cfg_.shots > 0) write_json("svm_sampled_" + size_tag(n) + ".json", svm::to_json(train(sample(g, n))));
  }
}

std::vector<BoundaryRecord> Pipeline::boundaries(bool sampled) {
  std::vector<BoundaryRecord> recs;
  for (int n : cfg_.sizes) {
    auto g = gram(n, cfg_.kind);
    if (sampled) g = sample(g, n);
    const auto model = train(g);
    const std::string tag = (sampled ? "sampled_" : "") + size_tag(n);
    write_json("svm_" + tag + ".json", svm::to_json(model));
    recs.push_back(boundary(model, n, sampled ? "sampled" : "exact"));
    if (sampled) continue;

    const auto br = cfg_.resolved_bracket();
    const auto grid = kernel::linspace(br.lo, br.hi, 101);
    const auto mid = svm::midpoint_diagnostics(model, *engine_, grid);
    auto os = open_csv("decision_" + tag + ".csv", {"bias=" + std::to_string(model.bias)});
    os << kernel::to_string(cfg_.axis) << ",decision,sim_left,sim_right\n";
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double d = svm::decision(model, kernel::at(cfg_.base(n), cfg_.axis, grid[i]), *engine_);
      os << grid[i] << ',' << d << ',' << mid.sim_left[i] << ',' << mid.sim_right[i] << '\n';
    }
  }
  return recs;
}

void Pipeline::write_boundary_records(const std::vector<BoundaryRecord>& recs) {
  auto os = open_csv("boundary.csv");
  os << "N,source,estimate,x_left,x_right,x_mid,ambiguous\n";
  for (const auto& r : recs) {
    os << r.n_sites << ',' << r.source << ',' << r.estimate << ',' << r.x_left << ',' << r.x_right
       << ',' << r.x_mid << ',' << (r.ambiguous ? 1 : 0) << '\n';
  }
}

void Pipeline::write_boundary(const std::optional<std::string>& svm_json) {
  if (svm_json) {
    const auto m = svm::model_from_json(read_json_file(*svm_json));
    write_boundary_records({boundary(m, m.points.at(0).n_sites, "exact")});
    return;
  }
  auto recs = boundaries(false);
  if (cfg_.shots > 0) {
    auto s = boundaries(true);
    recs.insert(recs.end(), s.begin(), s.end());
  }
  write_boundary_records(recs);
}

void Pipeline::write_bounds(const std::optional<std::string>& gram_json) {
  std::vector<kernel::GramMatrix> grams;
  if (gram_json) {
    grams.push_back(kernel::gram_from_json(read_json_file(*gram_json)));
  } else {
    for (int n : cfg_.sizes) grams.push_back(gram(n, cfg_.stats_kind));
  }
  auto os = open_csv("bounds.csv", {"stats_kind=" + kernel::to_string(cfg_.stats_kind),
                                    std::string("include_diagonal=") + (cfg_.include_diagonal ? "1" : "0")});
  resources::write_bounds_header(os);
  auto hist = open_csv("histogram.csv");
  hist << "N,bin_lo,bin_hi,count\n";
  for (const auto& g : grams) {
    const int n = g.points.at(0).n_sites;
    const auto stats = run_stage("bounds", size_tag(n), [&] { return resources::ensemble_stats(g, cfg_.include_diagonal); });
    resources::write_bounds_row(os, cfg_.model, g.points.front(), stats, resources::shot_bounds(stats, cfg_.bounds));
    const auto counts = resources::kernel_histogram(g, cfg_.histogram_bins);
    for (std::size_t b = 0; b < counts.size(); ++b) {
      const double w = 1.0 / static_cast<double>(counts.size());
      hist << n << ',' << w * static_cast<double>(b) << ',' << w * static_cast<double>(b + 1) << ',' << counts[b] << '\n';
    }
  }
}

std::vector<std::pair<int, double>> Pipeline::benchmark_estimates(bool write) {
  std::vector<std::pair<int, double>> out;
  if (!cfg_.benchmark || cfg_.axis != kernel::Axis::h) return out;
  const auto& b = *cfg_.benchmark;
  const auto grid = kernel::arange(b.lo, b.hi, b.step);
  std::optional<std::ofstream> os;
  if (write) {
    os.emplace(open_csv("benchmark.csv", {"h_ref=" + std::to_string(b.h_ref)}));
    *os << "N,h,similarity,slope\n";
  }
  for (int n : cfg_.sizes) {
    const auto r = run_stage("benchmark", size_tag(n), [&] {
      return kernel::benchmark_critical(cfg_.base(n), b.h_ref, grid, cfg_.kind, *engine_);
    });
    if (os) {
      for (std::size_t i = 0; i < r.grid.size(); ++i) {
        *os << n << ',' << r.grid[i] << ',' << r.similarity[i] << ',' << r.slope[i] << '\n';
      }
    }
    out.emplace_back(n, r.estimate);
  }
  return out;
}

void Pipeline::fit_and_write(const std::vector<fss::DriftData>& data) {
  {
    auto os = open_csv("drift.csv");
    os << "source,N,estimate\n";
    for (const auto& d : data) {
      for (std::size_t i = 0; i < d.sizes.size(); ++i) os << d.source << ',' << d.sizes[i] << ',' << d.estimates[i] << '\n';
    }
  }
  const std::string form = cfg_.resolved_fit();
  if (form == "none") return;
  const auto model = fss::parse_drift_model(form);
  auto os = open_csv("fit.csv");
  fss::write_fit_header(os);
  json fits = json::array();
  for (const auto& d : data) {
    const std::size_t need = model == fss::DriftModel::power ? 3 : 4;
    if (d.sizes.size() < need) {
      log("fit skipped for " + d.source + ": " + std::to_string(d.sizes.size()) + " sizes");
      continue;
    }
    const auto r = run_stage("fit", d.source, [&] { return fss::fit(model, d); });
    fss::write_fit_row(os, d.source, r);
    json j = fss::to_json(r);
    j["source"] = d.source;
    fits.push_back(j);
  }
  write_json("fit.json", {{"fits", fits}});
}

void Pipeline::write_fit(const std::optional<std::string>& drift_csv) {
  std::vector<fss::DriftData> data;
  if (drift_csv) {
    std::ifstream is(*drift_csv);
    if (!is) throw InvalidArgument("cannot open " + *drift_csv);
    std::string line;
    std::vector<std::string> header;
    std::map<std::string, fss::DriftData> by_source;
    while (std::getline(is, line)) {
      if (line.empty() || line[0] == '#') continue;
      const auto cells = split_csv(line);
      if (header.empty()) {
        header = cells;
        continue;
      }
      auto col = [&](const std::string& name) -> std::optional<std::string> {
        for (std::size_t k = 0; k < header.size() && k < cells.size(); ++k) {
          if (header[k] == name) return cells[k];
        }
        return std::nullopt;
      };
      const auto n = col("N");
      const auto e = col("estimate");
      if (!n || !e) throw InvalidArgument(*drift_csv + ": needs columns N and estimate");
      const std::string src = col("source").value_or("input");
      auto& d = by_source[src];
      d.source = src;
      d.sizes.push_back(std::stod(*n));
      d.estimates.push_back(std::stod(*e));
    }
    for (auto& [k, d] : by_source) data.push_back(std::move(d));
  } else {
    const auto recs = boundaries(false);
    fss::DriftData d{{}, {}, "svm-exact"};
    for (const auto& r : recs) {
      d.sizes.push_back(r.n_sites);
      d.estimates.push_back(r.estimate);
    }
    data.push_back(d);
    fss::DriftData b{{}, {}, "benchmark"};
    for (const auto& [n, x] : benchmark_estimates(false)) {
      b.sizes.push_back(n);
      b.estimates.push_back(x);
    }
    if (!b.sizes.empty()) data.push_back(b);
  }
  fit_and_write(data);
}

void Pipeline::run_all() {
  log("pipeline start config_hash=" + hash_);
  write_scan();
  write_gram();
  if (cfg_.shots > 0) write_sample(std::nullopt);
  auto recs = boundaries(false);
  std::vector<BoundaryRecord> sampled;
  if (cfg_.shots > 0) sampled = boundaries(true);
  auto all = recs;
  all.insert(all.end(), sampled.begin(), sampled.end());
  write_boundary_records(all);
  write_bounds(std::nullopt);

  std::vector<fss::DriftData> data;
  auto drift = [](const std::string& src, const std::vector<BoundaryRecord>& rs) {
    fss::DriftData d{{}, {}, src};
    for (const auto& r : rs) {
      d.sizes.push_back(r.n_sites);
      d.estimates.push_back(r.estimate);
    }
    return d;
  };
  data.push_back(drift("svm-exact", recs));
  if (!sampled.empty()) data.push_back(drift("svm-sampled", sampled));
  const auto bench = benchmark_estimates(true);
  if (!bench.empty()) {
    fss::DriftData b{{}, {}, "benchmark"};
    for (const auto& [n, x] : bench) {
      b.sizes.push_back(n);
      b.estimates.push_back(x);
    }
    data.push_back(b);
  }
  fit_and_write(data);
  log("pipeline done");
}

void Pipeline::write_manifest() {
  json j = {{"config", config::to_json(cfg_)}, {"files", files_}, {"csv_version", kCsvVersion}};
  j["config_hash"] = hash_;
  j["seed"] = cfg_.seed;
  std::ofstream os(dir_ / "manifest.json", std::ios::trunc);
  os << j.dump(2) << '\n';
}

}  // namespace spinkernel::pipeline
