#pragma once

// Stage orchestration for the CLI: scan -> gram -> sample -> train ->
// boundary -> bounds -> fit. Every CSV starts with
//   # spinkernel-csv v1
//   # config_hash=<hex>
//   # seed=<n>
// and every JSON document carries "config_hash" and "seed". Timestamps go to
// run.log only, so payload files are byte-identical across reruns.

#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "spinkernel/config.hpp"
#include "spinkernel/fss.hpp"
#include "spinkernel/kernel.hpp"
#include "spinkernel/resources.hpp"
#include "spinkernel/svm.hpp"
#include "spinkernel/swaptest.hpp"

namespace spinkernel::pipeline {

inline constexpr const char* kCsvVersion = "spinkernel-csv v1";

struct BoundaryRecord {
  int n_sites = 0;
  std::string source;  // exact | sampled
  double estimate = 0.0;
  double x_left = 0.0;
  double x_right = 0.0;
  double x_mid = 0.0;
  bool ambiguous = false;
};

class Pipeline {
 public:
  explicit Pipeline(config::RunConfig cfg);

  const config::RunConfig& config() const { return cfg_; }
  const std::string& hash() const { return hash_; }
  kernel::FidelityEngine& engine() { return *engine_; }

  // Computations, no I/O.
  svm::LabeledSet training_set(int n) const;
  kernel::FidelityScan scan(int n);
  kernel::GramMatrix gram(int n, kernel::KernelKind kind);
  kernel::GramMatrix sample(const kernel::GramMatrix& g, int n) const;
  svm::SvmModel train(const kernel::GramMatrix& g) const;
  BoundaryRecord boundary(const svm::SvmModel& m, int n, const std::string& source);
  std::uint64_t stage_seed(int n) const;

  // Stages that write into the output directory.
  void write_scan();
  void write_gram();
  void write_sample(const std::optional<std::string>& gram_json);
  void write_train(const std::optional<std::string>& gram_json);
  void write_boundary(const std::optional<std::string>& svm_json);
  void write_bounds(const std::optional<std::string>& gram_json);
  void write_fit(const std::optional<std::string>& drift_csv);
  void run_all();
  void write_manifest();

  void log(const std::string& line) const;

 private:
  std::ofstream open_csv(const std::string& name, const std::vector<std::string>& extra = {});
  void write_json(const std::string& name, nlohmann::json j);
  void write_gram_files(const kernel::GramMatrix& g, const std::string& stem);
  std::vector<BoundaryRecord> boundaries(bool sampled);
  std::vector<std::pair<int, double>> benchmark_estimates(bool write);
  void write_boundary_records(const std::vector<BoundaryRecord>& recs);
  void fit_and_write(const std::vector<fss::DriftData>& data);
  svm::LabeledSet labels_for(const kernel::GramMatrix& g) const;

  config::RunConfig cfg_;
  std::string hash_;
  std::filesystem::path dir_;
  std::unique_ptr<kernel::FidelityEngine> engine_;
  std::vector<std::string> files_;
  mutable std::ofstream log_;
};

// Rethrows failures with the stage name and its parameters prepended.
template <typename F>
auto run_stage(const std::string& stage, const std::string& what, F&& f) -> decltype(f());

}  // namespace spinkernel::pipeline

#include "spinkernel/errors.hpp"

namespace spinkernel::pipeline {

template <typename F>
auto run_stage(const std::string& stage, const std::string& what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const NumericalFailure& e) {
    throw NumericalFailure("stage " + stage + " (" + what + "): " + e.what());
  } catch (const InvalidArgument& e) {
    throw InvalidArgument("stage " + stage + " (" + what + "): " + e.what());
  }
}

}  // namespace spinkernel::pipeline
