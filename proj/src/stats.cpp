#include "alstop/stats.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>

#include <boost/math/special_functions/gamma.hpp>

#include "alstop/error.hpp"

namespace alstop {

double cohen_kappa(std::span<const int> p, std::span<const int> q) {
  if (p.size() != q.size()) throw DataError("kappa: label vectors differ in length");
  if (p.empty()) throw DataError("kappa: empty label vectors");
  const double n = static_cast<double>(p.size());
  std::map<int, std::pair<double, double>> marginals;
  double agree = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    marginals[p[i]].first += 1.0;
    marginals[q[i]].second += 1.0;
    if (p[i] == q[i]) agree += 1.0;
  }
  const double po = agree / n;
  double pe = 0.0;
  for (const auto& [label, m] : marginals) pe += (m.first / n) * (m.second / n);
  if (pe >= 1.0) return po >= 1.0 ? 1.0 : 0.0;
  return (po - pe) / (1.0 - pe);
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DataError("pearson: vectors differ in length");
  if (x.size() < 2) throw UndefinedStatistic("pearson: need at least 2 points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw UndefinedStatistic("pearson: constant input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

void RankMatrix::validate() const {
  if (columns.size() < 2) throw DataError("rank matrix needs at least 2 columns");
  if (rows.size() < 2) throw DataError("rank matrix needs at least 2 rows");
  for (const auto& r : rows) {
    if (r.size() != columns.size()) throw DataError("rank matrix row has the wrong width");
    for (double v : r)
      if (std::isnan(v)) throw DataError("rank matrix has a missing entry");
  }
}

std::vector<double> RankMatrix::mean_ranks() const {
  std::vector<double> sum(columns.size(), 0.0);
  for (const auto& r : rows) {
    const auto ranks = average_ranks(r);
    for (std::size_t j = 0; j < ranks.size(); ++j) sum[j] += ranks[j];
  }
  for (double& s : sum) s /= static_cast<double>(rows.size());
  return sum;
}

FriedmanResult friedman(const RankMatrix& costs) {
  costs.validate();
  const double k = static_cast<double>(costs.columns.size());
  const double n = static_cast<double>(costs.rows.size());
  FriedmanResult out;
  out.mean_ranks = costs.mean_ranks();
  double ss = 0.0;
  for (double r : out.mean_ranks) ss += r * r;
  out.statistic = std::max(0.0, 12.0 * n / (k * (k + 1.0)) * (ss - k * (k + 1.0) * (k + 1.0) / 4.0));
  out.p_value = out.statistic <= 0.0 ? 1.0 : boost::math::gamma_q((k - 1.0) / 2.0, out.statistic / 2.0);
  return out;
}

double nemenyi_q(std::size_t k, double alpha) {
  static constexpr std::array<double, 19> q05 = {1.959964, 2.343701, 2.569032, 2.727774, 2.849705,
                                                 2.948320, 3.030878, 3.101730, 3.163684, 3.218654,
                                                 3.268004, 3.312739, 3.353618, 3.391230, 3.426041,
                                                 3.458425, 3.488685, 3.517073, 3.543799};
  if (alpha != 0.05) throw ConfigError("critical difference is tabulated for alpha = 0.05 only");
  if (k < 2 || k > 20) throw ConfigError("critical difference needs 2 <= k <= 20, got " + std::to_string(k));
  return q05[k - 2];
}

double nemenyi_cd(std::size_t k, std::size_t n, double alpha) {
  if (n == 0) throw DataError("critical difference needs at least one problem");
  const double kd = static_cast<double>(k);
  return nemenyi_q(k, alpha) * std::sqrt(kd * (kd + 1.0) / (6.0 * static_cast<double>(n)));
}

nlohmann::json CdDiagram::to_json() const {
  nlohmann::json ranks = nlohmann::json::array();
  for (std::size_t i = 0; i < names.size(); ++i) ranks.push_back({{"criterion", names[i]}, {"mean_rank", mean_ranks[i]}});
  nlohmann::json gs = nlohmann::json::array();
  for (const auto& [a, b] : groups) {
    nlohmann::json members = nlohmann::json::array();
    for (std::size_t i = a; i <= b; ++i) members.push_back(names[i]);
    gs.push_back(members);
  }
  return {{"ranks", ranks},
          {"critical_difference", critical_difference},
          {"friedman_statistic", friedman_statistic},
          {"friedman_p", friedman_p},
          {"problems", problems},
          {"groups", gs}};
}

CdDiagram cd_diagram_data(const RankMatrix& costs, double alpha) {
  const FriedmanResult fr = friedman(costs);
  CdDiagram d;
  d.critical_difference = nemenyi_cd(costs.columns.size(), costs.rows.size(), alpha);
  d.friedman_statistic = fr.statistic;
  d.friedman_p = fr.p_value;
  d.problems = costs.rows.size();

  std::vector<std::size_t> order(costs.columns.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return fr.mean_ranks[a] < fr.mean_ranks[b]; });
  for (std::size_t i : order) {
    d.names.push_back(costs.columns[i]);
    d.mean_ranks.push_back(fr.mean_ranks[i]);
  }

  const std::size_t k = order.size();
  if (fr.p_value >= alpha) {
    d.groups.emplace_back(0, k - 1);
    return d;
  }
  std::size_t reach = 0;
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t j = i;
    while (j + 1 < k && d.mean_ranks[j + 1] - d.mean_ranks[i] < d.critical_difference) ++j;
    if (i == 0 || j > reach) d.groups.emplace_back(i, j);
    reach = std::max(reach, j);
  }
  return d;
}

WilcoxonResult wilcoxon_signed_rank(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DataError("wilcoxon: samples differ in length");
  std::vector<double> diff;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] != y[i]) diff.push_back(x[i] - y[i]);
  WilcoxonResult out;
  out.nonzero = diff.size();
  if (diff.empty()) return out;

  std::vector<double> mag(diff.size());
  for (std::size_t i = 0; i < diff.size(); ++i) mag[i] = std::abs(diff[i]);
  const auto ranks = average_ranks(mag);
  double w_plus = 0.0;
  for (std::size_t i = 0; i < diff.size(); ++i)
    if (diff[i] > 0) w_plus += ranks[i];
  out.statistic = w_plus;

  const std::size_t n = diff.size();
  const double nd = static_cast<double>(n);
  bool ties = false;
  for (double r : ranks)
    if (r != std::floor(r)) ties = true;
  std::vector<double> sorted = mag;
  std::sort(sorted.begin(), sorted.end());
  double tie_term = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && sorted[j + 1] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i + 1);
    if (t > 1) ties = true;
    tie_term += t * t * t - t;
    i = j + 1;
  }

  if (n <= 50 && !ties) {
    const std::size_t total = n * (n + 1) / 2;
    std::vector<double> exact(total + 1, 0.0);
    exact[0] = 1.0;
    for (std::size_t r = 1; r <= n; ++r)
      for (std::size_t s = total + 1; s-- > 0;) exact[s] = 0.5 * exact[s] + (s >= r ? 0.5 * exact[s - r] : 0.0);
    const auto w_low = static_cast<std::size_t>(std::min(w_plus, nd * (nd + 1.0) / 2.0 - w_plus));
    double tail = 0.0;
    for (std::size_t s = 0; s <= w_low; ++s) tail += exact[s];
    out.p_value = std::min(1.0, 2.0 * tail);
    out.exact = true;
    return out;
  }

  const double mean = nd * (nd + 1.0) / 4.0;
  const double var = nd * (nd + 1.0) * (2.0 * nd + 1.0) / 24.0 - tie_term / 48.0;
  if (var <= 0.0) return out;
  const double z = (w_plus - mean) / std::sqrt(var);
  out.p_value = std::min(1.0, std::erfc(std::abs(z) / std::sqrt(2.0)));
  return out;
}

}  // namespace alstop
