#include "alstop/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "alstop/error.hpp"
#include "alstop/query.hpp"
#include "alstop/rng.hpp"

namespace alstop {

namespace {

constexpr std::size_t kDenseLimit = 200;
constexpr std::size_t kLanczosSteps = 100;

// Largest eigenvector of symmetric m restricted to the complement of unit q.
Eigen::VectorXd deflated_top_dense(const Eigen::MatrixXd& m, const Eigen::VectorXd& q) {
  const Eigen::MatrixXd p = Eigen::MatrixXd::Identity(m.rows(), m.cols()) - q * q.transpose();
  // Push the q direction far below the spectrum of m, whose eigenvalues lie in [-1, 1].
  const Eigen::MatrixXd a = p * m * p - 4.0 * q * q.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  return es.eigenvectors().col(a.rows() - 1);
}

Eigen::VectorXd deflated_top_lanczos(const Eigen::MatrixXd& m, const Eigen::VectorXd& q, std::uint64_t seed) {
  const auto n = m.rows();
  const auto steps = static_cast<Eigen::Index>(std::min<std::size_t>(kLanczosSteps, static_cast<std::size_t>(n - 1)));
  Eigen::MatrixXd basis(n, steps);
  std::vector<double> alpha, beta;

  Rng rng(seed);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.normal();
  v -= q * q.dot(v);
  v.normalize();

  Eigen::Index used = 0;
  for (Eigen::Index j = 0; j < steps; ++j) {
    basis.col(j) = v;
    used = j + 1;
    Eigen::VectorXd w = m * v;
    alpha.push_back(v.dot(w));
    // Full reorthogonalization against q and every basis vector, twice.
    for (int pass = 0; pass < 2; ++pass) {
      w -= q * q.dot(w);
      w -= basis.leftCols(used) * (basis.leftCols(used).transpose() * w);
    }
    const double b = w.norm();
    if (j + 1 == steps || b < 1e-12) break;
    if (used >= 10 && used % 5 == 0) {
      Eigen::MatrixXd t = Eigen::MatrixXd::Zero(used, used);
      for (Eigen::Index i = 0; i < used; ++i) {
        t(i, i) = alpha[static_cast<std::size_t>(i)];
        if (i + 1 < used) t(i, i + 1) = t(i + 1, i) = beta[static_cast<std::size_t>(i)];
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
      if (b * std::abs(es.eigenvectors()(used - 1, used - 1)) < 1e-9) break;
    }
    beta.push_back(b);
    v = w / b;
  }

  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(used, used);
  for (Eigen::Index i = 0; i < used; ++i) {
    t(i, i) = alpha[static_cast<std::size_t>(i)];
    if (i + 1 < used) t(i, i + 1) = t(i + 1, i) = beta[static_cast<std::size_t>(i)];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
  return basis.leftCols(used) * es.eigenvectors().col(used - 1);
}

}  // namespace

std::vector<int> two_means_1d(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

  std::vector<double> prefix(n + 1, 0.0), prefix_sq(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    prefix[i + 1] = prefix[i] + values[order[i]];
    prefix_sq[i + 1] = prefix_sq[i] + values[order[i]] * values[order[i]];
  }
  auto sse = [&](std::size_t lo, std::size_t hi) {
    const double cnt = static_cast<double>(hi - lo);
    const double s = prefix[hi] - prefix[lo];
    return (prefix_sq[hi] - prefix_sq[lo]) - s * s / cnt;
  };

  std::size_t best_split = 0;
  double best = 0.0;
  for (std::size_t k = 1; k < n; ++k) {
    if (!(values[order[k - 1]] < values[order[k]])) continue;
    const double cost = sse(0, k) + sse(k, n);
    if (best_split == 0 || cost < best) {
      best = cost;
      best_split = k;
    }
  }
  std::vector<int> out(n, 0);
  if (best_split > 0)
    for (std::size_t i = best_split; i < n; ++i) out[order[i]] = 1;
  return out;
}

double cluster_disagreement(std::span<const int> clusters, std::span<const int> predictions) {
  if (clusters.size() != predictions.size()) throw DataError("cluster and prediction lengths differ");
  if (clusters.empty()) throw DataError("cluster disagreement of an empty set");
  std::size_t direct = 0, swapped = 0;
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    if (clusters[i] != predictions[i]) ++direct;
    if ((1 - clusters[i]) != predictions[i]) ++swapped;
  }
  return static_cast<double>(std::min(direct, swapped)) / static_cast<double>(clusters.size());
}

std::vector<int> spectral_bipartition(const FeatureMatrix& features, std::span<const std::size_t> rows,
                                      std::uint64_t seed) {
  const std::size_t n = rows.size();
  if (n < 2) throw DataError("spectral bipartition needs at least 2 points");

  const double sigma = median_pairwise_distance(features, rows, derive_seed(seed, 1));
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d2 = features.squared_distance(rows[i], features, rows[j]);
      const double s = sigma > 0.0 ? std::exp(-d2 / (2.0 * sigma * sigma)) : (d2 == 0.0 ? 1.0 : 0.0);
      w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = s;
      w(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = s;
    }

  const Eigen::VectorXd degree = w.rowwise().sum();
  Eigen::VectorXd inv_sqrt(degree.size());
  for (Eigen::Index i = 0; i < degree.size(); ++i) inv_sqrt[i] = degree[i] > 0.0 ? 1.0 / std::sqrt(degree[i]) : 0.0;
  const Eigen::MatrixXd m = inv_sqrt.asDiagonal() * w * inv_sqrt.asDiagonal();

  Eigen::VectorXd q = degree.cwiseSqrt();
  if (q.norm() == 0.0) return std::vector<int>(n, 0);
  q.normalize();

  const Eigen::VectorXd v = n <= kDenseLimit ? deflated_top_dense(m, q) : deflated_top_lanczos(m, q, derive_seed(seed, 2));
  std::vector<double> embed(n);
  for (std::size_t i = 0; i < n; ++i) embed[i] = inv_sqrt[static_cast<Eigen::Index>(i)] * v[static_cast<Eigen::Index>(i)];
  return two_means_1d(embed);
}

}  // namespace alstop
