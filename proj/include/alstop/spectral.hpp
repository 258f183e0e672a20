#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "alstop/dataset.hpp"

namespace alstop {

// Two-way normalized-cut relaxation of the given rows: RBF similarity with
// median-distance bandwidth, second eigenvector of D^-1/2 W D^-1/2, then an
// exact 1-D 2-means on D^-1/2 v. Returns a 0/1 cluster id per row, in the
// order of `rows`. Deterministic for a fixed seed.
std::vector<int> spectral_bipartition(const FeatureMatrix& features, std::span<const std::size_t> rows,
                                      std::uint64_t seed);

// Optimal 2-means split of scalars: 1 for the upper group, 0 for the lower.
// All-equal input yields a single group of zeros.
std::vector<int> two_means_1d(std::span<const double> values);

// Fraction of positions where clusters and predictions disagree, minimized
// over both ways of matching the two clusters to the two classes.
double cluster_disagreement(std::span<const int> clusters, std::span<const int> predictions);

}  // namespace alstop
