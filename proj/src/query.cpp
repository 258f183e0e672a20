#include "alstop/query.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "alstop/error.hpp"
#include "alstop/rng.hpp"

namespace alstop {

std::vector<std::size_t> greedy_ranked_batch(std::span<const double> uncertainty, std::span<const std::size_t> ids,
                                             std::vector<double> max_sim, std::size_t labeled_count,
                                             const std::function<double(std::size_t, std::size_t)>& similarity,
                                             std::size_t batch_size) {
  const std::size_t n = uncertainty.size();
  if (n == 0) throw DataError("rank_batch: empty candidate set");
  if (ids.size() != n || max_sim.size() != n) throw DataError("rank_batch: input lengths differ");
  if (labeled_count == 0) std::fill(max_sim.begin(), max_sim.end(), -std::numeric_limits<double>::infinity());

  std::vector<char> picked(n, 0);
  std::vector<std::size_t> order;
  std::size_t remaining = n;
  std::size_t reference = labeled_count;  // |L + selected|
  const std::size_t picks = std::min(batch_size, n);
  while (order.size() < picks) {
    const double alpha = static_cast<double>(remaining) / static_cast<double>(remaining + reference);
    std::size_t best = n;
    double best_score = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (picked[i]) continue;
      const double sim = reference == 0 ? 0.0 : max_sim[i];
      const double score = alpha * (1.0 - sim) + (1.0 - alpha) * uncertainty[i];
      if (best == n || score > best_score || (score == best_score && ids[i] < ids[best])) {
        best = i;
        best_score = score;
      }
    }
    picked[best] = 1;
    order.push_back(best);
    --remaining;
    ++reference;
    for (std::size_t i = 0; i < n; ++i)
      if (!picked[i]) max_sim[i] = std::max(max_sim[i], similarity(i, best));
  }
  return order;
}

double median_pairwise_distance(const FeatureMatrix& features, std::span<const std::size_t> rows,
                                std::uint64_t seed, std::size_t max_points) {
  std::vector<std::size_t> sorted(rows.begin(), rows.end());
  std::sort(sorted.begin(), sorted.end());
  Rng rng(seed);
  std::vector<std::size_t> pts = rng.sample(std::span<const std::size_t>(sorted), max_points);
  if (pts.size() < 2) return 0.0;
  std::vector<double> d;
  d.reserve(pts.size() * (pts.size() - 1) / 2);
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      d.push_back(std::sqrt(features.squared_distance(pts[i], features, pts[j])));
  auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  return *mid;
}

std::vector<std::size_t> rank_batch(const TrainedModel& model, const FeatureMatrix& features,
                                    std::span<const std::size_t> candidates, std::span<const std::size_t> labeled,
                                    const QueryConfig& config, std::uint64_t seed) {
  if (candidates.empty()) throw DataError("rank_batch: empty candidate set");
  if (config.batch_size < 1) throw ConfigError("batch_size must be at least 1");

  const FeatureMatrix cand = features.select(candidates);
  std::vector<double> uncertainty = model.confidence(cand);
  for (double& u : uncertainty) u = 1.0 - u;

  Similarity kind = config.similarity;
  if (kind == Similarity::automatic) kind = features.is_sparse() ? Similarity::cosine : Similarity::rbf;

  std::function<double(std::size_t, std::size_t)> sim_rows;
  if (kind == Similarity::cosine) {
    sim_rows = [&features](std::size_t a, std::size_t b) {
      const double na = features.squared_norm(a), nb = features.squared_norm(b);
      if (na == 0.0 || nb == 0.0) return 0.0;
      return features.row_dot(a, features, b) / std::sqrt(na * nb);
    };
  } else {
    std::vector<std::size_t> pool(candidates.begin(), candidates.end());
    pool.insert(pool.end(), labeled.begin(), labeled.end());
    const double sigma = median_pairwise_distance(features, pool, seed);
    sim_rows = [&features, sigma](std::size_t a, std::size_t b) {
      const double d2 = features.squared_distance(a, features, b);
      if (sigma <= 0.0) return d2 == 0.0 ? 1.0 : 0.0;
      return std::exp(-d2 / (2.0 * sigma * sigma));
    };
  }

  std::vector<double> max_sim(candidates.size(), -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < candidates.size(); ++i)
    for (std::size_t l : labeled) max_sim[i] = std::max(max_sim[i], sim_rows(candidates[i], l));

  auto order = greedy_ranked_batch(
      uncertainty, candidates, std::move(max_sim), labeled.size(),
      [&](std::size_t i, std::size_t j) { return sim_rows(candidates[i], candidates[j]); }, config.batch_size);
  std::vector<std::size_t> out;
  out.reserve(order.size());
  for (std::size_t pos : order) out.push_back(candidates[pos]);
  return out;
}

}  // namespace alstop
