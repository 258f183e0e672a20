#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace alstop {

// Chance-corrected agreement of two label vectors. 1 when both observed and
// chance agreement are 1.
double cohen_kappa(std::span<const int> p, std::span<const int> q);

// Product-moment correlation. Throws UndefinedStatistic on constant input.
double pearson(std::span<const double> x, std::span<const double> y);

// Average ranks (1 = smallest, ties share the mean rank).
std::vector<double> average_ranks(std::span<const double> values);

// Rows are matched problems, columns are criteria; lower values rank better.
struct RankMatrix {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  void validate() const;
  std::vector<double> mean_ranks() const;
};

struct FriedmanResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::vector<double> mean_ranks;  // column order
};

FriedmanResult friedman(const RankMatrix& costs);

// Studentized-range based q at alpha = 0.05, for 2 <= k <= 20.
double nemenyi_q(std::size_t k, double alpha = 0.05);
double nemenyi_cd(std::size_t k, std::size_t n, double alpha = 0.05);

struct CdDiagram {
  std::vector<std::string> names;  // sorted by mean rank
  std::vector<double> mean_ranks;
  double critical_difference = 0.0;
  double friedman_statistic = 0.0;
  double friedman_p = 1.0;
  std::size_t problems = 0;
  // Each group is a contiguous [first, last] range over the sorted order.
  std::vector<std::pair<std::size_t, std::size_t>> groups;

  nlohmann::json to_json() const;
};

// Groups are the maximal runs whose mean-rank span is below the critical
// difference. When Friedman does not reject at alpha every criterion shares
// one group.
CdDiagram cd_diagram_data(const RankMatrix& costs, double alpha = 0.05);

struct WilcoxonResult {
  double statistic = 0.0;  // sum of ranks of positive differences
  double p_value = 1.0;    // two-sided
  std::size_t nonzero = 0;
  bool exact = false;
};

// Paired two-sided signed-rank test. Zero differences are dropped; the null
// distribution is exact for up to 50 untied pairs, otherwise a normal
// approximation with tie correction.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> x, std::span<const double> y);

}  // namespace alstop
