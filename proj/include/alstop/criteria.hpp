#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "alstop/conditions.hpp"
#include "alstop/dataset.hpp"
#include "alstop/trace.hpp"

namespace alstop {

enum class CriterionId {
  max_confidence,
  entropy_mcs,
  mes,
  oracle_acc_mcs,
  classification_change,
  overall_uncertainty,
  performance_convergence,
  uncertainty_convergence,
  contradictory_information,
  stabilizing_predictions,
  vm,
  evm,
  ssncut,
};

inline constexpr std::size_t kCriterionCount = 13;

std::string_view to_string(CriterionId id);
CriterionId criterion_id_from_string(std::string_view name);
const std::array<CriterionId, kCriterionCount>& all_criteria();

// Which models a criterion supports.
enum class Support { all, probabilistic, linear_binary };
Support support_of(CriterionId id);

struct CriterionSpec {
  CriterionId id = CriterionId::mes;
  ConditionSpec condition;
  std::size_t agreement_window = 3;  // stabilizing predictions only

  static CriterionSpec defaults(CriterionId id);
  static std::vector<CriterionSpec> default_suite();
  // {"id": ..., "condition": {...}, "agreement_window": ...}; missing fields take defaults.
  static CriterionSpec from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  void validate() const;
};

struct StopDecision {
  CriterionId criterion = CriterionId::mes;
  bool stopped = false;
  std::optional<std::size_t> stop_round;
  std::optional<std::size_t> fire_round;
  std::size_t labels_used = 0;  // at stop_round, or the final round when not stopped
  double accuracy = 0.0;

  bool operator==(const StopDecision&) const = default;
};

// Normalized entropy H(p) / ln C in [0, 1].
double uncertainty(std::span<const double> posterior);

double metric_max_confidence(const IterationRecord& record);
double metric_entropy_mcs(const IterationRecord& record);
double metric_mes(const IterationRecord& record);
double metric_oracle_acc(const IterationRecord& record);
double metric_classification_change(const IterationRecord& previous, const IterationRecord& record);
double metric_overall_uncertainty(const IterationRecord& record);
// Macro-averaged expected F-score over classes with a nonzero expected denominator.
double metric_performance_convergence(const IterationRecord& record);
double metric_uncertainty_convergence(const IterationRecord& record);
double metric_contradictory_information(const IterationRecord& record);
// Mean Cohen's kappa over all pairs of the given prediction vectors.
double metric_stabilizing_predictions(std::span<const std::vector<int>> predictions);
double metric_variance_uncertainty(const IterationRecord& record);
double metric_ssncut(const IterationRecord& record, const FeatureMatrix& features, std::uint64_t seed);

bool is_applicable(CriterionId id, const RunTrace& trace);
// Throws InapplicableCriterion with the reason.
void check_applicable(CriterionId id, const RunTrace& trace);

// Metric value per round; nullopt where it is undefined (no batch on the
// final round, no previous classifier, too few rounds for the window).
// `dataset` is required for SSNCut only.
std::vector<std::optional<double>> metric_series(const RunTrace& trace, const CriterionSpec& spec,
                                                 const Dataset* dataset = nullptr);

StopDecision evaluate_criterion(const RunTrace& trace, const CriterionSpec& spec, const Dataset* dataset = nullptr);

// Pearson r between the defined metric values and test accuracy on the same rounds.
double metric_accuracy_correlation(const RunTrace& trace, const CriterionSpec& spec, const Dataset* dataset = nullptr);

nlohmann::json criteria_catalogue(std::span<const CriterionSpec> specs);

}  // namespace alstop
