#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "alstop/cost.hpp"
#include "alstop/criteria.hpp"
#include "alstop/ingest.hpp"
#include "alstop/learners.hpp"
#include "alstop/trace.hpp"

namespace alstop {

// Experiment description, read from JSON:
//   {
//     "datasets": [DatasetSource...],
//     "learners": ["linear", {"kind": "forest", "params": {...}}, ...],
//     "batch_size": 10, "subsample_size": 1000, "reserve": 500,
//     "initial_size": 10, "test_fraction": 0.5, "stopset_size": 1000,
//     "repeats": 30, "seed": 0, "output_dir": "out", "threads": 0,
//     "criteria": [CriterionSpec...]          (optional, default suite)
//   }
struct ExperimentConfig {
  std::vector<DatasetSource> datasets;
  std::vector<LearnerSpec> learners;
  TraceConfig protocol;
  std::size_t repeats = 30;
  std::uint64_t base_seed = 0;
  std::string output_dir = "out";
  std::size_t threads = 0;  // 0 = hardware concurrency
  std::vector<CriterionSpec> criteria = CriterionSpec::default_suite();

  void validate() const;
  static ExperimentConfig from_json(const nlohmann::json& j, const std::string& base_dir = "");
  static ExperimentConfig load(const std::string& path);
};

// Throws ConfigError when the protocol cannot run on a dataset of this size.
void check_feasible(const TraceConfig& protocol, std::size_t dataset_rows);

std::uint64_t derive_run_seed(std::uint64_t base_seed, const std::string& dataset, std::size_t repeat);

struct RunOptions {
  nlohmann::json source;  // copied into the trace header
  std::size_t repeat = 0;
  TraceWriter* writer = nullptr;  // receives the header and each record as it is produced
};

// One active-learning run: split, initial set, stop set, subsample, then per
// round fit, record, and query a batch until at most `reserve` unlabeled
// instances remain. Learner failures end the run with an abort marker.
RunTrace run_al(const Dataset& dataset, const LearnerSpec& learner, const TraceConfig& protocol, std::uint64_t seed,
                const RunOptions& options = {});

// Test accuracy when trained on every non-test row minus test accuracy when
// trained on the initial set alone.
double al_potential(const Dataset& dataset, const LearnerSpec& learner, std::uint64_t seed,
                    double test_fraction = 0.5, std::size_t initial_size = 10);

struct DecisionRow {
  std::string dataset;
  std::string model;
  std::size_t repeat = 0;
  std::string criterion;
  std::string status;  // "ok", "skipped" (inapplicable or aborted run), "error"
  bool stopped = false;
  std::optional<std::size_t> stop_round;
  std::size_t labels_used = 0;
  double accuracy = 0.0;
  std::optional<double> correlation;
  std::string note;

  bool operator==(const DecisionRow&) const = default;
};

struct StopRate {
  std::string model;
  std::string criterion;
  std::size_t runs = 0;
  std::size_t stops = 0;
  double rate() const { return runs == 0 ? 0.0 : static_cast<double>(stops) / static_cast<double>(runs); }
};

struct CorrelationSummary {
  std::string model;
  std::string criterion;
  std::size_t datasets = 0;
  double mean = 0.0;  // mean over datasets of the per-dataset mean r
  double se = 0.0;    // standard error across datasets
};

struct Evaluation {
  std::vector<DecisionRow> rows;
  std::vector<StopRate> stop_rates;
  std::vector<CorrelationSummary> correlations;

  nlohmann::json summary_json() const;
};

// Rows follow trace order, then criterion order. Datasets are looked up by
// trace dataset name and are only needed for SSNCut.
Evaluation evaluate_all(const std::vector<RunTrace>& traces, const std::vector<CriterionSpec>& criteria,
                        const std::map<std::string, const Dataset*>& datasets, std::size_t threads = 1);

std::vector<StopRate> stop_rates(const std::vector<DecisionRow>& rows);
std::vector<CorrelationSummary> correlation_summary(const std::vector<DecisionRow>& rows);

// Decision rows of one model as cost-module outcomes (skipped rows dropped).
std::vector<CriterionOutcome> outcomes_from_rows(const std::vector<DecisionRow>& rows, const std::string& model);

std::string decisions_to_csv(const std::vector<DecisionRow>& rows);
std::vector<DecisionRow> decisions_from_csv(const std::string& text);

// Runs fn(0..n-1) on up to `threads` workers; rethrows the first failure by index.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

}  // namespace alstop
