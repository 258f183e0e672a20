#include "alstop/criteria.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "alstop/error.hpp"
#include "alstop/rng.hpp"
#include "alstop/spectral.hpp"
#include "alstop/stats.hpp"

namespace alstop {

using nlohmann::json;

namespace {

struct Entry {
  CriterionId id;
  const char* name;
  const char* metric;
  Support support;
};

constexpr std::array<Entry, kCriterionCount> kEntries = {{
    {CriterionId::max_confidence, "max_confidence", "selected uncertainty (min)", Support::probabilistic},
    {CriterionId::entropy_mcs, "entropy_mcs", "subsample uncertainty (max)", Support::probabilistic},
    {CriterionId::mes, "mes", "expected error", Support::probabilistic},
    {CriterionId::oracle_acc_mcs, "oracle_acc_mcs", "selected accuracy", Support::all},
    {CriterionId::classification_change, "classification_change", "prediction agreement", Support::all},
    {CriterionId::overall_uncertainty, "overall_uncertainty", "subsample uncertainty (mean)", Support::probabilistic},
    {CriterionId::performance_convergence, "performance_convergence", "expected F-score", Support::probabilistic},
    {CriterionId::uncertainty_convergence, "uncertainty_convergence", "selected uncertainty (min)",
     Support::probabilistic},
    {CriterionId::contradictory_information, "contradictory_information", "contradictory information",
     Support::probabilistic},
    {CriterionId::stabilizing_predictions, "stabilizing_predictions", "stop-set kappa", Support::all},
    {CriterionId::vm, "vm", "uncertainty variance", Support::probabilistic},
    {CriterionId::evm, "evm", "uncertainty variance", Support::probabilistic},
    {CriterionId::ssncut, "ssncut", "spectral disagreement", Support::linear_binary},
}};

const Entry& entry(CriterionId id) { return kEntries[static_cast<std::size_t>(id)]; }

const char* support_name(Support s) {
  switch (s) {
    case Support::all: return "all";
    case Support::probabilistic: return "probabilistic";
    case Support::linear_binary: return "linear, binary";
  }
  return "";
}

void require_batch(const IterationRecord& r) {
  if (r.selected.empty()) throw DataError("metric needs a nonempty selected batch");
}

void require_subsample(const IterationRecord& r) {
  if (r.subsample_posteriors.rows() == 0) throw DataError("metric needs a nonempty subsample");
}

std::vector<double> subsample_uncertainty(const IterationRecord& r) {
  require_subsample(r);
  std::vector<double> u(r.subsample_posteriors.rows());
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = uncertainty(r.subsample_posteriors.row(i));
  return u;
}

double min_selected_uncertainty(const IterationRecord& r) {
  require_batch(r);
  double best = 1.0;
  for (const auto& s : r.selected) best = std::min(best, uncertainty(s.posterior));
  return best;
}

bool is_probabilistic(const std::string& model) { return model == "linear" || model == "forest" || model == "mlp"; }

}  // namespace

std::string_view to_string(CriterionId id) { return entry(id).name; }

CriterionId criterion_id_from_string(std::string_view name) {
  for (const auto& e : kEntries)
    if (name == e.name) return e.id;
  throw ConfigError("unknown criterion '" + std::string(name) + "'");
}

const std::array<CriterionId, kCriterionCount>& all_criteria() {
  static const std::array<CriterionId, kCriterionCount> ids = [] {
    std::array<CriterionId, kCriterionCount> out{};
    for (std::size_t i = 0; i < kCriterionCount; ++i) out[i] = kEntries[i].id;
    return out;
  }();
  return ids;
}

Support support_of(CriterionId id) { return entry(id).support; }

CriterionSpec CriterionSpec::defaults(CriterionId id) {
  CriterionSpec s;
  s.id = id;
  switch (id) {
    case CriterionId::max_confidence: s.condition = Threshold{Direction::at_most, 0.001}; break;
    case CriterionId::entropy_mcs: s.condition = Threshold{Direction::at_most, 0.01}; break;
    case CriterionId::mes: s.condition = Threshold{Direction::at_most, 0.01}; break;
    case CriterionId::oracle_acc_mcs: s.condition = Threshold{Direction::at_least, 0.9}; break;
    case CriterionId::classification_change: s.condition = Threshold{Direction::at_least, 1.0}; break;
    case CriterionId::overall_uncertainty: s.condition = Threshold{Direction::at_most, 0.01}; break;
    case CriterionId::performance_convergence:
      s.condition = WindowGradient{10, 5e-5, Aggregate::mean, Extremum::max};
      break;
    case CriterionId::uncertainty_convergence:
      s.condition = WindowGradient{10, 5e-5, Aggregate::median, Extremum::min};
      break;
    case CriterionId::contradictory_information: s.condition = ConsecutiveChange{3, 0.0}; break;
    case CriterionId::stabilizing_predictions: s.condition = Threshold{Direction::at_least, 0.99}; break;
    case CriterionId::vm: s.condition = ConsecutiveChange{2, 0.0}; break;
    case CriterionId::evm: s.condition = ConsecutiveChange{2, 0.001}; break;
    case CriterionId::ssncut: s.condition = PatienceMinimum{10, true}; break;
  }
  return s;
}

std::vector<CriterionSpec> CriterionSpec::default_suite() {
  std::vector<CriterionSpec> out;
  for (CriterionId id : all_criteria()) out.push_back(defaults(id));
  return out;
}

CriterionSpec CriterionSpec::from_json(const json& j) {
  CriterionSpec s = defaults(criterion_id_from_string(j.at("id").get<std::string>()));
  if (j.contains("condition")) s.condition = condition_from_json(j.at("condition"));
  if (j.contains("agreement_window")) s.agreement_window = j.at("agreement_window").get<std::size_t>();
  s.validate();
  return s;
}

json CriterionSpec::to_json() const {
  json j = {{"id", to_string(id)}, {"condition", alstop::to_json(condition)}};
  if (id == CriterionId::stabilizing_predictions) j["agreement_window"] = agreement_window;
  return j;
}

void CriterionSpec::validate() const {
  alstop::validate(condition);
  if (const auto* t = std::get_if<Threshold>(&condition))
    if (t->value < 0.0 || t->value > 1.0) throw ConfigError("criterion thresholds must lie in [0, 1]");
  if (agreement_window < 2) throw ConfigError("agreement window must be at least 2");
}

double uncertainty(std::span<const double> posterior) {
  if (posterior.size() < 2) return 0.0;
  double h = 0.0;
  for (double p : posterior)
    if (p > 0.0) h -= p * std::log(p);
  return std::clamp(h / std::log(static_cast<double>(posterior.size())), 0.0, 1.0);
}

double metric_max_confidence(const IterationRecord& record) { return min_selected_uncertainty(record); }

double metric_entropy_mcs(const IterationRecord& record) {
  const auto u = subsample_uncertainty(record);
  return *std::max_element(u.begin(), u.end());
}

double metric_mes(const IterationRecord& record) {
  require_subsample(record);
  double s = 0.0;
  for (std::size_t i = 0; i < record.subsample_posteriors.rows(); ++i) {
    const auto row = record.subsample_posteriors.row(i);
    s += 1.0 - *std::max_element(row.begin(), row.end());
  }
  return s / static_cast<double>(record.subsample_posteriors.rows());
}

double metric_oracle_acc(const IterationRecord& record) {
  require_batch(record);
  std::size_t correct = 0;
  for (const auto& s : record.selected)
    if (argmax(s.posterior) == s.label) ++correct;
  return static_cast<double>(correct) / static_cast<double>(record.selected.size());
}

double metric_classification_change(const IterationRecord& previous, const IterationRecord& record) {
  std::size_t i = 0, j = 0, common = 0, equal = 0;
  while (i < previous.subsample.size() && j < record.subsample.size()) {
    if (previous.subsample[i] < record.subsample[j]) {
      ++i;
    } else if (record.subsample[j] < previous.subsample[i]) {
      ++j;
    } else {
      ++common;
      if (previous.subsample_predictions[i] == record.subsample_predictions[j]) ++equal;
      ++i;
      ++j;
    }
  }
  if (common == 0) throw DataError("classification change: subsamples do not intersect");
  return static_cast<double>(equal) / static_cast<double>(common);
}

double metric_overall_uncertainty(const IterationRecord& record) {
  const auto u = subsample_uncertainty(record);
  double s = 0.0;
  for (double v : u) s += v;
  return s / static_cast<double>(u.size());
}

double metric_performance_convergence(const IterationRecord& record) {
  require_subsample(record);
  const auto& post = record.subsample_posteriors;
  const std::size_t c = post.cols();
  std::vector<double> tp(c, 0.0), fp(c, 0.0), fn(c, 0.0);
  for (std::size_t i = 0; i < post.rows(); ++i) {
    const auto row = post.row(i);
    const auto pred = static_cast<std::size_t>(argmax(row));
    for (std::size_t k = 0; k < c; ++k) {
      if (k == pred) {
        tp[k] += row[k];
        fp[k] += 1.0 - row[k];
      } else {
        fn[k] += row[k];
      }
    }
  }
  double sum = 0.0;
  std::size_t counted = 0;
  for (std::size_t k = 0; k < c; ++k) {
    const double denom = 2.0 * tp[k] + fp[k] + fn[k];
    if (denom <= 0.0) continue;
    sum += 2.0 * tp[k] / denom;
    ++counted;
  }
  if (counted == 0) throw DataError("expected F-score has no class with a nonzero denominator");
  return sum / static_cast<double>(counted);
}

double metric_uncertainty_convergence(const IterationRecord& record) { return min_selected_uncertainty(record); }

double metric_contradictory_information(const IterationRecord& record) {
  require_batch(record);
  double s = 0.0;
  std::size_t wrong = 0;
  for (const auto& sel : record.selected) {
    const int pred = argmax(sel.posterior);
    if (pred == sel.label) continue;
    s += sel.posterior[static_cast<std::size_t>(pred)];
    ++wrong;
  }
  return wrong == 0 ? 0.0 : s / static_cast<double>(wrong);
}

double metric_stabilizing_predictions(std::span<const std::vector<int>> predictions) {
  if (predictions.size() < 2) throw DataError("stabilizing predictions needs at least two prediction vectors");
  double s = 0.0;
  std::size_t pairs = 0;
  for (std::size_t a = 0; a < predictions.size(); ++a)
    for (std::size_t b = a + 1; b < predictions.size(); ++b) {
      if (predictions[a].empty()) throw DataError("stabilizing predictions: empty stop set");
      s += cohen_kappa(predictions[a], predictions[b]);
      ++pairs;
    }
  return s / static_cast<double>(pairs);
}

double metric_variance_uncertainty(const IterationRecord& record) {
  const auto u = subsample_uncertainty(record);
  double mean = 0.0;
  for (double v : u) mean += v;
  mean /= static_cast<double>(u.size());
  double var = 0.0;
  for (double v : u) var += (v - mean) * (v - mean);
  return var / static_cast<double>(u.size());
}

double metric_ssncut(const IterationRecord& record, const FeatureMatrix& features, std::uint64_t seed) {
  if (record.subsample_posteriors.cols() != 2) throw InapplicableCriterion("ssncut requires a binary task");
  if (record.subsample.size() < 2) throw DataError("ssncut needs at least 2 subsample points");
  const auto clusters = spectral_bipartition(features, record.subsample, seed);
  return cluster_disagreement(clusters, record.subsample_predictions);
}

bool is_applicable(CriterionId id, const RunTrace& trace) {
  switch (support_of(id)) {
    case Support::all: return true;
    case Support::probabilistic: return is_probabilistic(trace.model);
    case Support::linear_binary: return trace.model == "linear" && trace.num_classes == 2;
  }
  return false;
}

void check_applicable(CriterionId id, const RunTrace& trace) {
  if (is_applicable(id, trace)) return;
  std::string why = std::string(to_string(id)) + " does not apply to model '" + trace.model + "'";
  if (support_of(id) == Support::linear_binary && trace.num_classes != 2)
    why += " with " + std::to_string(trace.num_classes) + " classes";
  throw InapplicableCriterion(why);
}

std::vector<std::optional<double>> metric_series(const RunTrace& trace, const CriterionSpec& spec,
                                                 const Dataset* dataset) {
  const auto& recs = trace.records;
  std::vector<std::optional<double>> out(recs.size());
  if (spec.id == CriterionId::ssncut && dataset == nullptr)
    throw ConfigError("ssncut needs the dataset to rebuild subsample features");

  for (std::size_t t = 0; t < recs.size(); ++t) {
    const auto& r = recs[t];
    const bool has_batch = !r.selected.empty();
    const bool has_subsample = r.subsample_posteriors.rows() > 0;
    switch (spec.id) {
      case CriterionId::max_confidence:
        if (has_batch) out[t] = metric_max_confidence(r);
        break;
      case CriterionId::entropy_mcs:
        if (has_subsample) out[t] = metric_entropy_mcs(r);
        break;
      case CriterionId::mes:
        if (has_subsample) out[t] = metric_mes(r);
        break;
      case CriterionId::oracle_acc_mcs:
        if (has_batch) out[t] = metric_oracle_acc(r);
        break;
      case CriterionId::classification_change:
        if (t > 0) {
          try {
            out[t] = metric_classification_change(recs[t - 1], r);
          } catch (const DataError&) {
          }
        }
        break;
      case CriterionId::overall_uncertainty:
        if (has_subsample) out[t] = metric_overall_uncertainty(r);
        break;
      case CriterionId::performance_convergence:
        if (has_subsample) out[t] = metric_performance_convergence(r);
        break;
      case CriterionId::uncertainty_convergence:
        if (has_batch) out[t] = metric_uncertainty_convergence(r);
        break;
      case CriterionId::contradictory_information:
        if (has_batch) out[t] = metric_contradictory_information(r);
        break;
      case CriterionId::stabilizing_predictions: {
        const std::size_t w = spec.agreement_window;
        if (t + 1 < w) break;
        std::vector<std::vector<int>> preds;
        for (std::size_t s = t + 1 - w; s <= t; ++s) preds.push_back(recs[s].stopset_predictions);
        out[t] = metric_stabilizing_predictions(preds);
        break;
      }
      case CriterionId::vm:
      case CriterionId::evm:
        if (has_subsample) out[t] = metric_variance_uncertainty(r);
        break;
      case CriterionId::ssncut:
        if (r.subsample.size() >= 2)
          out[t] = metric_ssncut(r, dataset->features, derive_seed(trace.seed, fnv1a("ssncut") + t));
        break;
    }
  }
  return out;
}

StopDecision evaluate_criterion(const RunTrace& trace, const CriterionSpec& spec, const Dataset* dataset) {
  spec.validate();
  check_applicable(spec.id, trace);
  if (trace.records.empty()) throw DataError("cannot evaluate a criterion on a trace without records");
  const auto series = metric_series(trace, spec, dataset);

  StopDecision d;
  d.criterion = spec.id;
  std::size_t at = trace.records.size() - 1;
  if (const auto f = first_firing(spec.condition, series)) {
    d.stopped = true;
    d.fire_round = f->fire_round;
    d.stop_round = f->stop_round;
    at = f->stop_round;
  }
  d.labels_used = trace.records[at].labels_used;
  d.accuracy = trace.records[at].test_accuracy;
  return d;
}

double metric_accuracy_correlation(const RunTrace& trace, const CriterionSpec& spec, const Dataset* dataset) {
  check_applicable(spec.id, trace);
  const auto series = metric_series(trace, spec, dataset);
  std::vector<double> m, a;
  for (std::size_t t = 0; t < series.size(); ++t)
    if (series[t]) {
      m.push_back(*series[t]);
      a.push_back(trace.records[t].test_accuracy);
    }
  if (m.size() < 3) throw UndefinedStatistic("correlation needs at least 3 rounds with a defined metric");
  return pearson(m, a);
}

json criteria_catalogue(std::span<const CriterionSpec> specs) {
  json out = json::array();
  for (const auto& s : specs) {
    json j = s.to_json();
    j["metric"] = entry(s.id).metric;
    j["models"] = support_name(support_of(s.id));
    out.push_back(std::move(j));
  }
  return out;
}

}  // namespace alstop
