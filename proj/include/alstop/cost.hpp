#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "alstop/stats.hpp"

namespace alstop {

struct CostParams {
  double label_cost = 0.0;              // l, per label
  double misclassification_cost = 0.0;  // m, per error
  double lifetime = 0.0;                // n, predictions over the model's life

  void validate() const;
  bool operator==(const CostParams&) const = default;
};

// (1 - a) m n + j l
double cost(double accuracy, double labels, const CostParams& params);
// Same measure with the product n m given directly.
double cost_nm(double accuracy, double labels, double nm, double label_cost);

struct Scenario {
  std::string name;
  CostParams params;
};

const std::vector<Scenario>& builtin_scenarios();  // mammogram, marketing
const Scenario& scenario_by_name(std::string_view name);

struct RunOutcome {
  std::string dataset;
  std::string run;  // key matching the same split across criteria
  bool stopped = false;
  double accuracy = 0.0;
  double labels = 0.0;

  bool operator==(const RunOutcome&) const = default;
};

struct CriterionOutcome {
  std::string criterion;
  std::vector<RunOutcome> runs;

  double mean_accuracy() const;
  double mean_labels() const;
  std::size_t stops() const;
  bool operator==(const CriterionOutcome&) const = default;
};

enum class Treatment { penalize, include, exclude };
std::string_view to_string(Treatment t);
Treatment treatment_from_string(std::string_view name);

struct WorstValues {
  double accuracy = 1.0;
  double labels = 0.0;
};

// Per dataset: the lowest accuracy and highest label count any criterion
// produced on it, counting non-stopping runs at their final round.
std::map<std::string, WorstValues> worst_values(std::span<const CriterionOutcome> outcomes);

struct TreatedOutcomes {
  std::vector<CriterionOutcome> outcomes;
  std::vector<std::string> removed;
  std::vector<std::string> warnings;
};

// penalize: non-stopping runs take their dataset's worst (a, j)
// include:  non-stopping runs are dropped; a criterion left without runs is
//           removed with a warning
// exclude:  criteria with any non-stopping run are removed
TreatedOutcomes apply_treatment(std::span<const CriterionOutcome> outcomes, Treatment treatment,
                                const std::map<std::string, WorstValues>& worst);
TreatedOutcomes apply_treatment(std::span<const CriterionOutcome> outcomes, Treatment treatment);

std::vector<double> log_axis(double lo, double hi, std::size_t count);

struct RegionCell {
  std::string winner;
  std::string runner_up;  // empty with a single criterion
  double p_value = 1.0;
  bool indeterminate = true;
};

struct RegionGrid {
  std::vector<double> nm_axis;
  std::vector<double> l_axis;
  std::vector<std::string> criteria;
  Treatment treatment = Treatment::penalize;
  double alpha = 0.05;
  std::vector<std::vector<RegionCell>> cells;  // [l index][nm index]

  std::string to_csv() const;
  nlohmann::json to_json() const;
};

// Winner per (n m, l) cell is the lowest mean cost; the cell is indeterminate
// unless a paired signed-rank test between winner and runner-up over their
// common runs rejects at alpha.
RegionGrid region_map(std::span<const CriterionOutcome> outcomes, std::span<const double> nm_axis,
                      std::span<const double> l_axis, Treatment treatment, double alpha = 0.05);

struct ParetoPoint {
  double labels = 0.0;
  double accuracy = 0.0;
  std::string name;

  bool operator==(const ParetoPoint&) const = default;
};

bool dominates(const ParetoPoint& a, const ParetoPoint& b);
// Non-dominated points in input order. Exact duplicates are all kept.
std::vector<ParetoPoint> pareto_frontier(std::span<const ParetoPoint> points);

struct RankedCriterion {
  std::size_t rank = 0;
  std::string criterion;
  double mean_cost = 0.0;
  double mean_accuracy = 0.0;
  double mean_labels = 0.0;
  std::size_t runs = 0;
};

// Sorted by mean cost, ties to fewer mean labels, then by name.
std::vector<RankedCriterion> scenario_rank(std::span<const CriterionOutcome> outcomes, const CostParams& params);
std::string rankings_to_csv(std::span<const RankedCriterion> ranking);
nlohmann::json rankings_to_json(std::span<const RankedCriterion> ranking);

// Per-run costs on the runs every criterion shares, for Friedman/Nemenyi.
RankMatrix cost_rank_matrix(std::span<const CriterionOutcome> outcomes, const CostParams& params);

}  // namespace alstop
