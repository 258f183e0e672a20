#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "alstop/dataset.hpp"
#include "alstop/learners.hpp"

namespace alstop {

enum class Similarity {
  automatic,  // cosine for sparse features, RBF otherwise
  cosine,
  rbf,        // exp(-d^2 / (2 sigma^2)), sigma = median pairwise distance
};

struct QueryConfig {
  std::size_t batch_size = 10;
  Similarity similarity = Similarity::automatic;
};

// Ranked batch-mode uncertainty sampling. Picks candidates one at a time by
//
//   score(x) = alpha * (1 - maxsim(x, L + selected)) + (1 - alpha) * u(x)
//   alpha    = |remaining| / (|remaining| + |L + selected|)
//
// with u(x) = 1 - confidence(x). Returns row ids in pick order; ties go to
// the lowest row id. The seed only drives the bandwidth estimate sample.
std::vector<std::size_t> rank_batch(const TrainedModel& model, const FeatureMatrix& features,
                                    std::span<const std::size_t> candidates, std::span<const std::size_t> labeled,
                                    const QueryConfig& config, std::uint64_t seed);

// The greedy selection itself, on precomputed inputs:
//   uncertainty[i]    u of candidate i
//   ids[i]            row id of candidate i, used for tie-breaking
//   max_sim[i]        max similarity of candidate i to the labeled set
//                     (ignored when labeled_count == 0)
//   similarity(i, j)  similarity between candidates i and j
// Returns candidate positions (not ids) in pick order.
std::vector<std::size_t> greedy_ranked_batch(std::span<const double> uncertainty, std::span<const std::size_t> ids,
                                             std::vector<double> max_sim, std::size_t labeled_count,
                                             const std::function<double(std::size_t, std::size_t)>& similarity,
                                             std::size_t batch_size);

// Median Euclidean distance over pairs drawn from `rows` (at most
// `max_points` of them, sampled with `seed`).
double median_pairwise_distance(const FeatureMatrix& features, std::span<const std::size_t> rows,
                                std::uint64_t seed, std::size_t max_points = 300);

}  // namespace alstop
