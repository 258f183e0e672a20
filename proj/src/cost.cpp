#include "alstop/cost.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <set>
#include <sstream>

#include "alstop/error.hpp"

namespace alstop {

using nlohmann::json;

namespace {

double mean_of(const std::vector<RunOutcome>& runs, double RunOutcome::*field) {
  if (runs.empty()) return 0.0;
  double s = 0.0;
  for (const auto& r : runs) s += r.*field;
  return s / static_cast<double>(runs.size());
}

std::string run_key(const RunOutcome& r) { return r.dataset + '\x1f' + r.run; }

std::string format_double(double v) {
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  return ss.str();
}

}  // namespace

void CostParams::validate() const {
  if (!(label_cost >= 0.0) || !(misclassification_cost >= 0.0) || !(lifetime >= 0.0))
    throw ConfigError("cost parameters must be nonnegative");
}

double cost(double accuracy, double labels, const CostParams& params) {
  if (!(accuracy >= 0.0 && accuracy <= 1.0)) throw DataError("accuracy must lie in [0, 1]");
  params.validate();
  return (1.0 - accuracy) * params.misclassification_cost * params.lifetime + labels * params.label_cost;
}

double cost_nm(double accuracy, double labels, double nm, double label_cost) {
  if (!(accuracy >= 0.0 && accuracy <= 1.0)) throw DataError("accuracy must lie in [0, 1]");
  return (1.0 - accuracy) * nm + labels * label_cost;
}

const std::vector<Scenario>& builtin_scenarios() {
  static const std::vector<Scenario> s = {
      {"mammogram", {13.60, 10742.0, 336000.0}},
      {"marketing", {1.0, 20.0, 2000.0}},
  };
  return s;
}

const Scenario& scenario_by_name(std::string_view name) {
  for (const auto& s : builtin_scenarios())
    if (s.name == name) return s;
  throw ConfigError("unknown scenario '" + std::string(name) + "'");
}

double CriterionOutcome::mean_accuracy() const { return mean_of(runs, &RunOutcome::accuracy); }
double CriterionOutcome::mean_labels() const { return mean_of(runs, &RunOutcome::labels); }
std::size_t CriterionOutcome::stops() const {
  return static_cast<std::size_t>(std::count_if(runs.begin(), runs.end(), [](const auto& r) { return r.stopped; }));
}

std::string_view to_string(Treatment t) {
  switch (t) {
    case Treatment::penalize: return "penalize";
    case Treatment::include: return "include";
    case Treatment::exclude: return "exclude";
  }
  return "";
}

Treatment treatment_from_string(std::string_view name) {
  if (name == "penalize") return Treatment::penalize;
  if (name == "include") return Treatment::include;
  if (name == "exclude") return Treatment::exclude;
  throw ConfigError("unknown treatment '" + std::string(name) + "'");
}

std::map<std::string, WorstValues> worst_values(std::span<const CriterionOutcome> outcomes) {
  std::map<std::string, WorstValues> worst;
  for (const auto& c : outcomes)
    for (const auto& r : c.runs) {
      auto [it, fresh] = worst.try_emplace(r.dataset, WorstValues{r.accuracy, r.labels});
      if (!fresh) {
        it->second.accuracy = std::min(it->second.accuracy, r.accuracy);
        it->second.labels = std::max(it->second.labels, r.labels);
      }
    }
  return worst;
}

TreatedOutcomes apply_treatment(std::span<const CriterionOutcome> outcomes, Treatment treatment,
                                const std::map<std::string, WorstValues>& worst) {
  TreatedOutcomes out;
  for (const auto& c : outcomes) {
    CriterionOutcome t{c.criterion, {}};
    const bool all_stopped = c.stops() == c.runs.size();
    switch (treatment) {
      case Treatment::penalize:
        for (auto r : c.runs) {
          if (!r.stopped) {
            const auto it = worst.find(r.dataset);
            if (it == worst.end()) throw DataError("no worst values for dataset '" + r.dataset + "'");
            r.accuracy = it->second.accuracy;
            r.labels = it->second.labels;
          }
          t.runs.push_back(r);
        }
        break;
      case Treatment::include:
        for (const auto& r : c.runs)
          if (r.stopped) t.runs.push_back(r);
        if (t.runs.empty()) {
          out.removed.push_back(c.criterion);
          out.warnings.push_back(c.criterion + " never stopped; excluded under the include treatment");
          continue;
        }
        break;
      case Treatment::exclude:
        if (!all_stopped) {
          out.removed.push_back(c.criterion);
          continue;
        }
        t.runs = c.runs;
        break;
    }
    out.outcomes.push_back(std::move(t));
  }
  return out;
}

TreatedOutcomes apply_treatment(std::span<const CriterionOutcome> outcomes, Treatment treatment) {
  return apply_treatment(outcomes, treatment, worst_values(outcomes));
}

std::vector<double> log_axis(double lo, double hi, std::size_t count) {
  if (count == 0) throw ConfigError("axis needs at least one point");
  if (!(lo > 0.0) || !(hi >= lo)) throw ConfigError("log axis needs 0 < lo <= hi");
  std::vector<double> v(count);
  if (count == 1) {
    v[0] = lo;
    return v;
  }
  const double a = std::log10(lo), b = std::log10(hi);
  for (std::size_t i = 0; i < count; ++i)
    v[i] = std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1));
  v.front() = lo;
  v.back() = hi;
  return v;
}

std::string RegionGrid::to_csv() const {
  std::ostringstream ss;
  ss << "l,nm,winner,runner_up,p_value,indeterminate\n";
  for (std::size_t i = 0; i < l_axis.size(); ++i)
    for (std::size_t j = 0; j < nm_axis.size(); ++j) {
      const auto& c = cells[i][j];
      ss << format_double(l_axis[i]) << ',' << format_double(nm_axis[j]) << ',' << c.winner << ',' << c.runner_up
         << ',' << format_double(c.p_value) << ',' << (c.indeterminate ? 1 : 0) << '\n';
    }
  return ss.str();
}

json RegionGrid::to_json() const {
  json rows = json::array();
  for (const auto& row : cells) {
    json r = json::array();
    for (const auto& c : row)
      r.push_back({{"winner", c.winner}, {"runner_up", c.runner_up}, {"p_value", c.p_value},
                   {"indeterminate", c.indeterminate}});
    rows.push_back(std::move(r));
  }
  return {{"nm_axis", nm_axis}, {"l_axis", l_axis},     {"criteria", criteria},
          {"treatment", to_string(treatment)}, {"alpha", alpha}, {"cells", std::move(rows)}};
}

RegionGrid region_map(std::span<const CriterionOutcome> outcomes, std::span<const double> nm_axis,
                      std::span<const double> l_axis, Treatment treatment, double alpha) {
  if (nm_axis.empty() || l_axis.empty()) throw ConfigError("region map axes must be nonempty");
  const auto treated = apply_treatment(outcomes, treatment);
  const auto& crit = treated.outcomes;
  if (crit.size() < 2) throw DataError("region map needs at least 2 criteria after treatment");

  RegionGrid g;
  g.nm_axis.assign(nm_axis.begin(), nm_axis.end());
  g.l_axis.assign(l_axis.begin(), l_axis.end());
  g.treatment = treatment;
  g.alpha = alpha;
  for (const auto& c : crit) g.criteria.push_back(c.criterion);

  std::vector<double> mean_a(crit.size()), mean_j(crit.size());
  std::vector<std::map<std::string, const RunOutcome*>> by_key(crit.size());
  for (std::size_t c = 0; c < crit.size(); ++c) {
    mean_a[c] = crit[c].mean_accuracy();
    mean_j[c] = crit[c].mean_labels();
    for (const auto& r : crit[c].runs) by_key[c][run_key(r)] = &r;
  }

  g.cells.assign(l_axis.size(), std::vector<RegionCell>(nm_axis.size()));
  std::vector<std::size_t> order(crit.size());
  for (std::size_t li = 0; li < l_axis.size(); ++li)
    for (std::size_t ni = 0; ni < nm_axis.size(); ++ni) {
      const double nm = nm_axis[ni], l = l_axis[li];
      std::vector<double> mc(crit.size());
      for (std::size_t c = 0; c < crit.size(); ++c) mc[c] = (1.0 - mean_a[c]) * nm + mean_j[c] * l;
      for (std::size_t c = 0; c < order.size(); ++c) order[c] = c;
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (mc[a] != mc[b]) return mc[a] < mc[b];
        if (mean_j[a] != mean_j[b]) return mean_j[a] < mean_j[b];
        return crit[a].criterion < crit[b].criterion;
      });
      RegionCell& cell = g.cells[li][ni];
      const std::size_t best = order[0], second = order[1];
      cell.winner = crit[best].criterion;
      cell.runner_up = crit[second].criterion;

      std::vector<double> x, y;
      for (const auto& [key, r] : by_key[best]) {
        const auto it = by_key[second].find(key);
        if (it == by_key[second].end()) continue;
        x.push_back(cost_nm(r->accuracy, r->labels, nm, l));
        y.push_back(cost_nm(it->second->accuracy, it->second->labels, nm, l));
      }
      if (!x.empty()) cell.p_value = wilcoxon_signed_rank(x, y).p_value;
      cell.indeterminate = !(cell.p_value < alpha);
    }
  return g;
}

bool dominates(const ParetoPoint& a, const ParetoPoint& b) {
  return a.labels <= b.labels && a.accuracy >= b.accuracy && (a.labels < b.labels || a.accuracy > b.accuracy);
}

std::vector<ParetoPoint> pareto_frontier(std::span<const ParetoPoint> points) {
  const std::size_t n = points.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (points[a].labels != points[b].labels) return points[a].labels < points[b].labels;
    return points[a].accuracy > points[b].accuracy;
  });
  std::vector<char> keep(n, 0);
  bool have_prev = false;
  double best_prev = 0.0;  // max accuracy among strictly fewer labels
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && points[order[j + 1]].labels == points[order[i]].labels) ++j;
    const double group_max = points[order[i]].accuracy;
    for (std::size_t k = i; k <= j; ++k) {
      const double a = points[order[k]].accuracy;
      if (a == group_max && !(have_prev && best_prev >= a)) keep[order[k]] = 1;
    }
    best_prev = have_prev ? std::max(best_prev, group_max) : group_max;
    have_prev = true;
    i = j + 1;
  }
  std::vector<ParetoPoint> out;
  for (std::size_t i = 0; i < n; ++i)
    if (keep[i]) out.push_back(points[i]);
  return out;
}

std::vector<RankedCriterion> scenario_rank(std::span<const CriterionOutcome> outcomes, const CostParams& params) {
  params.validate();
  std::vector<RankedCriterion> out;
  for (const auto& c : outcomes) {
    if (c.runs.empty()) continue;
    RankedCriterion r;
    r.criterion = c.criterion;
    r.runs = c.runs.size();
    double s = 0.0;
    for (const auto& run : c.runs) s += cost(run.accuracy, run.labels, params);
    r.mean_cost = s / static_cast<double>(c.runs.size());
    r.mean_accuracy = c.mean_accuracy();
    r.mean_labels = c.mean_labels();
    out.push_back(std::move(r));
  }
  std::sort(out.begin(), out.end(), [](const RankedCriterion& a, const RankedCriterion& b) {
    if (a.mean_cost != b.mean_cost) return a.mean_cost < b.mean_cost;
    if (a.mean_labels != b.mean_labels) return a.mean_labels < b.mean_labels;
    return a.criterion < b.criterion;
  });
  for (std::size_t i = 0; i < out.size(); ++i) out[i].rank = i + 1;
  return out;
}

std::string rankings_to_csv(std::span<const RankedCriterion> ranking) {
  std::ostringstream ss;
  ss << "rank,criterion,mean_cost,mean_accuracy,mean_labels,runs\n";
  for (const auto& r : ranking)
    ss << r.rank << ',' << r.criterion << ',' << format_double(r.mean_cost) << ',' << format_double(r.mean_accuracy)
       << ',' << format_double(r.mean_labels) << ',' << r.runs << '\n';
  return ss.str();
}

json rankings_to_json(std::span<const RankedCriterion> ranking) {
  json out = json::array();
  for (const auto& r : ranking)
    out.push_back({{"rank", r.rank},
                   {"criterion", r.criterion},
                   {"mean_cost", r.mean_cost},
                   {"mean_accuracy", r.mean_accuracy},
                   {"mean_labels", r.mean_labels},
                   {"runs", r.runs}});
  return out;
}

RankMatrix cost_rank_matrix(std::span<const CriterionOutcome> outcomes, const CostParams& params) {
  RankMatrix m;
  std::set<std::string> common;
  bool first = true;
  for (const auto& c : outcomes) {
    std::set<std::string> keys;
    for (const auto& r : c.runs) keys.insert(run_key(r));
    if (first) {
      common = std::move(keys);
      first = false;
    } else {
      std::set<std::string> both;
      std::set_intersection(common.begin(), common.end(), keys.begin(), keys.end(), std::inserter(both, both.end()));
      common = std::move(both);
    }
    m.columns.push_back(c.criterion);
  }
  std::map<std::string, std::vector<double>> rows;
  for (const auto& key : common) rows[key].assign(outcomes.size(), 0.0);
  for (std::size_t c = 0; c < outcomes.size(); ++c)
    for (const auto& r : outcomes[c].runs) {
      const auto it = rows.find(run_key(r));
      if (it != rows.end()) it->second[c] = cost(r.accuracy, r.labels, params);
    }
  for (auto& [key, row] : rows) m.rows.push_back(std::move(row));
  return m;
}

}  // namespace alstop
