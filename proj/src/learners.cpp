#include "alstop/learners.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <string>
#include <variant>

#include "alstop/error.hpp"
#include "alstop/rng.hpp"

namespace alstop {

using nlohmann::json;

std::string_view to_string(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::linear: return "linear";
    case LearnerKind::forest: return "forest";
    case LearnerKind::mlp: return "mlp";
  }
  return "unknown";
}

LearnerKind learner_kind_from_string(std::string_view name) {
  if (name == "linear") return LearnerKind::linear;
  if (name == "forest") return LearnerKind::forest;
  if (name == "mlp") return LearnerKind::mlp;
  throw ConfigError("unknown learner kind '" + std::string(name) + "'");
}

LearnerSpec LearnerSpec::defaults(LearnerKind kind) {
  LearnerSpec s;
  s.kind = kind;
  if (kind == LearnerKind::mlp) s.l2 = 1e-4;
  return s;
}

LearnerSpec LearnerSpec::from_json(const json& j) {
  LearnerSpec s = defaults(learner_kind_from_string(j.at("kind").get<std::string>()));
  s.seed = j.value("seed", std::uint64_t{0});
  if (j.contains("params")) {
    for (const auto& [key, value] : j.at("params").items()) {
      if (key == "l2") s.l2 = value.get<double>();
      else if (key == "epochs") s.epochs = value.get<int>();
      else if (key == "learning_rate") s.learning_rate = value.get<double>();
      else if (key == "hidden") s.hidden = value.get<int>();
      else if (key == "trees") s.trees = value.get<int>();
      else if (key == "max_depth") s.max_depth = value.get<int>();
      else if (key == "min_samples_leaf") s.min_samples_leaf = value.get<int>();
      else throw ConfigError("unknown learner parameter '" + key + "'");
    }
  }
  s.validate();
  return s;
}

json LearnerSpec::to_json() const {
  json params = {{"l2", l2},
                 {"epochs", epochs},
                 {"learning_rate", learning_rate},
                 {"hidden", hidden},
                 {"trees", trees},
                 {"max_depth", max_depth},
                 {"min_samples_leaf", min_samples_leaf}};
  return {{"kind", std::string(alstop::to_string(kind))}, {"seed", seed}, {"params", std::move(params)}};
}

void LearnerSpec::validate() const {
  if (!(l2 >= 0.0)) throw ConfigError("l2 must be nonnegative");
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (hidden < 1) throw ConfigError("hidden must be at least 1");
  if (trees < 1) throw ConfigError("trees must be at least 1");
  if (max_depth < 0) throw ConfigError("max_depth must be nonnegative");
  if (min_samples_leaf < 1) throw ConfigError("min_samples_leaf must be at least 1");
}

double accuracy(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size()) throw DataError("accuracy: length mismatch");
  if (truth.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i];
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

namespace detail {

// Per-feature affine map z = (x - mean) * scale. Fitting on sparse inputs
// leaves the mean at zero so transformed rows stay sparse.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer fit(const FeatureMatrix& x) {
    const std::size_t d = x.cols();
    const auto n = static_cast<double>(x.rows());
    std::vector<double> sum(d, 0.0), sq(d, 0.0);
    for (std::size_t r = 0; r < x.rows(); ++r)
      x.for_each_nonzero(r, [&](std::size_t c, double v) {
        sum[c] += v;
        sq[c] += v * v;
      });
    Standardizer s;
    s.mean.assign(d, 0.0);
    s.scale.assign(d, 1.0);
    for (std::size_t c = 0; c < d; ++c) {
      double spread;
      if (x.is_sparse()) {
        spread = std::sqrt(sq[c] / n);
      } else {
        s.mean[c] = sum[c] / n;
        spread = std::sqrt(std::max(0.0, sq[c] / n - s.mean[c] * s.mean[c]));
      }
      if (spread > 1e-12) s.scale[c] = 1.0 / spread;
    }
    return s;
  }

  FeatureMatrix transform(const FeatureMatrix& x) const {
    const bool centered = std::any_of(mean.begin(), mean.end(), [](double m) { return m != 0.0; });
    if (x.is_sparse() && !centered) {
      std::vector<std::size_t> ptr{0};
      std::vector<std::uint32_t> idx;
      std::vector<double> val;
      for (std::size_t r = 0; r < x.rows(); ++r) {
        x.for_each_nonzero(r, [&](std::size_t c, double v) {
          idx.push_back(static_cast<std::uint32_t>(c));
          val.push_back(v * scale[c]);
        });
        ptr.push_back(idx.size());
      }
      return FeatureMatrix::sparse(x.rows(), x.cols(), std::move(ptr), std::move(idx), std::move(val));
    }
    std::vector<double> v(x.rows() * x.cols());
    for (std::size_t r = 0; r < x.rows(); ++r)
      for (std::size_t c = 0; c < x.cols(); ++c) v[r * x.cols() + c] = (x.at(r, c) - mean[c]) * scale[c];
    return FeatureMatrix::dense(x.rows(), x.cols(), std::move(v));
  }

  json to_json() const { return {{"mean", mean}, {"scale", scale}}; }
};

struct ConstantState {
  int label = 0;
};

struct LinearState {
  Standardizer standardizer;
  // One row of (weights..., bias) per class.
  std::vector<std::vector<double>> weights;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::size_t leaf = 0;  // offset into Tree::leaves when feature == -1
};

struct Tree {
  std::vector<TreeNode> nodes;
  std::vector<double> leaves;  // class fractions, num_classes per leaf

  std::span<const double> distribution(const FeatureMatrix& x, std::size_t row, std::size_t num_classes) const {
    std::size_t n = 0;
    while (nodes[n].feature >= 0) {
      const auto& node = nodes[n];
      n = static_cast<std::size_t>(x.at(row, static_cast<std::size_t>(node.feature)) <= node.threshold ? node.left
                                                                                                         : node.right);
    }
    return {leaves.data() + nodes[n].leaf, num_classes};
  }
};

struct ForestState {
  std::vector<Tree> trees;
};

struct MlpState {
  Standardizer standardizer;
  mlp::Parameters params;
};

struct ModelState {
  std::variant<ConstantState, LinearState, ForestState, MlpState> impl;
};

}  // namespace detail

namespace {

using detail::Standardizer;

void softmax_inplace(std::span<double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (double& x : v) {
    x = std::exp(x - m);
    s += x;
  }
  for (double& x : v) x /= s;
}

// ---- linear ---------------------------------------------------------------

std::vector<double> train_logistic(const FeatureMatrix& z, std::span<const int> labels, int positive, double l2,
                                   int epochs) {
  const std::size_t d = z.cols();
  const std::size_t n = z.rows();
  // Lipschitz bound of the mean logistic loss gradient, via the trace of the
  // (bias-augmented) Gram matrix.
  double mean_sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean_sq += z.squared_norm(i) + 1.0;
  mean_sq /= static_cast<double>(n);
  const double lipschitz = 0.25 * mean_sq + l2;
  const double step = 1.0 / lipschitz;

  std::vector<double> w(d + 1, 0.0), y(d + 1, 0.0), w_next(d + 1), grad(d + 1);
  double t = 1.0;
  for (int e = 0; e < epochs; ++e) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double s = labels[i] == positive ? 1.0 : -1.0;
      const double margin = s * (z.dot(i, y) + y[d]);
      // d/dm log(1 + exp(-m)) = -1 / (1 + exp(m))
      const double r = -s / (1.0 + std::exp(margin));
      z.for_each_nonzero(i, [&](std::size_t c, double v) { grad[c] += r * v; });
      grad[d] += r;
    }
    for (std::size_t c = 0; c <= d; ++c) grad[c] /= static_cast<double>(n);
    for (std::size_t c = 0; c < d; ++c) grad[c] += l2 * y[c];
    for (std::size_t c = 0; c <= d; ++c) w_next[c] = y[c] - step * grad[c];
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const double momentum = (t - 1.0) / t_next;
    for (std::size_t c = 0; c <= d; ++c) y[c] = w_next[c] + momentum * (w_next[c] - w[c]);
    w.swap(w_next);
    t = t_next;
  }
  return w;
}

ProbabilityMatrix linear_decisions(const detail::LinearState& s, const FeatureMatrix& x) {
  const FeatureMatrix z = s.standardizer.transform(x);
  const std::size_t k = s.weights.size();
  ProbabilityMatrix out(z.rows(), k);
  for (std::size_t i = 0; i < z.rows(); ++i) {
    auto row = out.row(i);
    for (std::size_t c = 0; c < k; ++c) row[c] = z.dot(i, s.weights[c]) + s.weights[c].back();
  }
  return out;
}

// ---- forest ---------------------------------------------------------------

struct SplitCandidate {
  double impurity = 0.0;
  int feature = -1;
  double threshold = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const FeatureMatrix& x, std::span<const int> labels, std::size_t num_classes, const LearnerSpec& spec,
              std::uint64_t seed)
      : x_(x), labels_(labels), k_(num_classes), spec_(spec), rng_(seed) {}

  detail::Tree build() {
    const std::size_t n = x_.rows();
    std::vector<std::size_t> sample(n);
    for (auto& s : sample) s = rng_.uniform_index(n);
    std::sort(sample.begin(), sample.end());

    struct Work {
      std::size_t node, begin, end;
      int depth;
    };
    tree_.nodes.emplace_back();
    std::vector<Work> stack{{0, 0, n, 0}};
    while (!stack.empty()) {
      Work w = stack.back();
      stack.pop_back();
      std::span<std::size_t> rows(sample.data() + w.begin, w.end - w.begin);
      auto split = find_split(rows, w.depth);
      if (split.feature < 0) {
        make_leaf(w.node, rows);
        continue;
      }
      auto mid = std::stable_partition(rows.begin(), rows.end(), [&](std::size_t r) {
        return x_.at(r, static_cast<std::size_t>(split.feature)) <= split.threshold;
      });
      const std::size_t cut = w.begin + static_cast<std::size_t>(mid - rows.begin());
      const auto left = tree_.nodes.size();
      tree_.nodes.emplace_back();
      tree_.nodes.emplace_back();
      auto& node = tree_.nodes[w.node];
      node.feature = split.feature;
      node.threshold = split.threshold;
      node.left = static_cast<int>(left);
      node.right = static_cast<int>(left + 1);
      stack.push_back({left + 1, cut, w.end, w.depth + 1});
      stack.push_back({left, w.begin, cut, w.depth + 1});
    }
    return std::move(tree_);
  }

 private:
  void make_leaf(std::size_t node, std::span<const std::size_t> rows) {
    tree_.nodes[node].feature = -1;
    tree_.nodes[node].leaf = tree_.leaves.size();
    std::vector<double> dist(k_, 0.0);
    for (std::size_t r : rows) dist[static_cast<std::size_t>(labels_[r])] += 1.0;
    for (double& v : dist) v /= static_cast<double>(rows.size());
    tree_.leaves.insert(tree_.leaves.end(), dist.begin(), dist.end());
  }

  SplitCandidate find_split(std::span<const std::size_t> rows, int depth) {
    SplitCandidate best;
    const auto min_leaf = static_cast<std::size_t>(spec_.min_samples_leaf);
    if (rows.size() < 2 * min_leaf) return best;
    if (spec_.max_depth > 0 && depth >= spec_.max_depth) return best;
    std::vector<double> total(k_, 0.0);
    for (std::size_t r : rows) total[static_cast<std::size_t>(labels_[r])] += 1.0;
    if (std::count_if(total.begin(), total.end(), [](double c) { return c > 0.0; }) < 2) return best;

    const std::size_t d = x_.cols();
    const std::size_t mtry = std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(d))));
    std::vector<std::size_t> features(d);
    std::iota(features.begin(), features.end(), 0);
    double best_impurity = std::numeric_limits<double>::infinity();
    std::vector<std::pair<double, int>> column(rows.size());
    std::vector<double> left(k_);
    // Keep drawing features past mtry until at least one valid split exists.
    for (std::size_t drawn = 0; drawn < d; ++drawn) {
      if (drawn >= mtry && best.feature >= 0) break;
      std::size_t j = drawn + rng_.uniform_index(d - drawn);
      std::swap(features[drawn], features[j]);
      const std::size_t f = features[drawn];
      for (std::size_t i = 0; i < rows.size(); ++i) column[i] = {x_.at(rows[i], f), labels_[rows[i]]};
      std::sort(column.begin(), column.end());
      if (column.front().first == column.back().first) continue;
      std::fill(left.begin(), left.end(), 0.0);
      const auto n = static_cast<double>(rows.size());
      for (std::size_t i = 0; i + 1 < column.size(); ++i) {
        left[static_cast<std::size_t>(column[i].second)] += 1.0;
        if (column[i].first == column[i + 1].first) continue;
        const auto nl = static_cast<double>(i + 1);
        const double nr = n - nl;
        if (i + 1 < min_leaf || static_cast<std::size_t>(nr) < min_leaf) continue;
        double sl = 0.0, sr = 0.0;
        for (std::size_t c = 0; c < k_; ++c) {
          sl += left[c] * left[c];
          const double rc = total[c] - left[c];
          sr += rc * rc;
        }
        // n_left * gini_left + n_right * gini_right
        const double impurity = (nl - sl / nl) + (nr - sr / nr);
        if (impurity < best_impurity) {
          best_impurity = impurity;
          best.feature = static_cast<int>(f);
          double thr = column[i].first + 0.5 * (column[i + 1].first - column[i].first);
          if (!(thr < column[i + 1].first)) thr = column[i].first;
          best.threshold = thr;
          best.impurity = impurity;
        }
      }
    }
    return best;
  }

  const FeatureMatrix& x_;
  std::span<const int> labels_;
  std::size_t k_;
  const LearnerSpec& spec_;
  Rng rng_;
  detail::Tree tree_;
};

// ---- mlp ------------------------------------------------------------------

struct AdamState {
  std::vector<double> m, v;
};

void adam_update(std::vector<double>& p, const std::vector<double>& g, AdamState& s, double lr, int t) {
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  if (s.m.empty()) {
    s.m.assign(p.size(), 0.0);
    s.v.assign(p.size(), 0.0);
  }
  const double c1 = 1.0 - std::pow(b1, t);
  const double c2 = 1.0 - std::pow(b2, t);
  for (std::size_t i = 0; i < p.size(); ++i) {
    s.m[i] = b1 * s.m[i] + (1.0 - b1) * g[i];
    s.v[i] = b2 * s.v[i] + (1.0 - b2) * g[i] * g[i];
    p[i] -= lr * (s.m[i] / c1) / (std::sqrt(s.v[i] / c2) + eps);
  }
}

void mlp_forward(const mlp::Parameters& p, const FeatureMatrix& x, std::size_t row, std::vector<double>& hidden,
                 std::span<double> out) {
  hidden.assign(p.b1.begin(), p.b1.end());
  x.for_each_nonzero(row, [&](std::size_t c, double v) {
    for (std::size_t h = 0; h < p.hidden; ++h) hidden[h] += p.w1[h * p.inputs + c] * v;
  });
  for (double& h : hidden) h = std::tanh(h);
  for (std::size_t k = 0; k < p.classes; ++k) {
    double s = p.b2[k];
    for (std::size_t h = 0; h < p.hidden; ++h) s += p.w2[k * p.hidden + h] * hidden[h];
    out[k] = s;
  }
}

}  // namespace

void mlp::Parameters::resize(std::size_t in, std::size_t hid, std::size_t out) {
  inputs = in;
  hidden = hid;
  classes = out;
  w1.assign(hid * in, 0.0);
  b1.assign(hid, 0.0);
  w2.assign(out * hid, 0.0);
  b2.assign(out, 0.0);
}

double mlp::loss_and_gradient(const Parameters& p, const FeatureMatrix& x, std::span<const int> labels, double l2,
                              Parameters* grad) {
  if (x.cols() != p.inputs || x.rows() != labels.size()) throw DataError("mlp: input shape mismatch");
  if (grad) grad->resize(p.inputs, p.hidden, p.classes);
  const std::size_t n = x.rows();
  std::vector<double> hidden, logits(p.classes), dh(p.hidden);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mlp_forward(p, x, i, hidden, logits);
    const double m = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double l : logits) z += std::exp(l - m);
    const double log_z = m + std::log(z);
    const auto y = static_cast<std::size_t>(labels[i]);
    loss += log_z - logits[y];
    if (!grad) continue;
    std::fill(dh.begin(), dh.end(), 0.0);
    for (std::size_t k = 0; k < p.classes; ++k) {
      const double dl = std::exp(logits[k] - log_z) - (k == y ? 1.0 : 0.0);
      grad->b2[k] += dl;
      for (std::size_t h = 0; h < p.hidden; ++h) {
        grad->w2[k * p.hidden + h] += dl * hidden[h];
        dh[h] += dl * p.w2[k * p.hidden + h];
      }
    }
    for (std::size_t h = 0; h < p.hidden; ++h) {
      dh[h] *= 1.0 - hidden[h] * hidden[h];
      grad->b1[h] += dh[h];
    }
    x.for_each_nonzero(i, [&](std::size_t c, double v) {
      for (std::size_t h = 0; h < p.hidden; ++h) grad->w1[h * p.inputs + c] += dh[h] * v;
    });
  }
  const auto nd = static_cast<double>(n);
  loss /= nd;
  double reg = 0.0;
  for (double w : p.w1) reg += w * w;
  for (double w : p.w2) reg += w * w;
  loss += 0.5 * l2 * reg;
  if (grad) {
    for (auto* v : {&grad->w1, &grad->b1, &grad->w2, &grad->b2})
      for (double& g : *v) g /= nd;
    for (std::size_t i = 0; i < p.w1.size(); ++i) grad->w1[i] += l2 * p.w1[i];
    for (std::size_t i = 0; i < p.w2.size(); ++i) grad->w2[i] += l2 * p.w2[i];
  }
  return loss;
}

TrainedModel fit(const LearnerSpec& spec, const FeatureMatrix& features, std::span<const int> labels,
                 std::size_t num_classes) {
  spec.validate();
  if (features.rows() == 0) throw DataError("fit: no training instances");
  if (features.rows() != labels.size()) throw DataError("fit: feature rows do not match label count");
  if (num_classes < 2) throw DataError("fit: at least two classes are required");
  for (int y : labels)
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes) throw DataError("fit: label outside the class set");

  TrainedModel model;
  model.spec_ = spec;
  model.num_classes_ = num_classes;
  model.num_features_ = features.cols();
  auto state = std::make_shared<detail::ModelState>();

  if (std::set<int>(labels.begin(), labels.end()).size() < 2) {
    state->impl = detail::ConstantState{labels.front()};
    model.state_ = std::move(state);
    return model;
  }

  switch (spec.kind) {
    case LearnerKind::linear: {
      detail::LinearState s;
      s.standardizer = Standardizer::fit(features);
      const FeatureMatrix z = s.standardizer.transform(features);
      for (std::size_t c = 0; c < num_classes; ++c)
        s.weights.push_back(train_logistic(z, labels, static_cast<int>(c), spec.l2, spec.epochs));
      state->impl = std::move(s);
      break;
    }
    case LearnerKind::forest: {
      detail::ForestState s;
      const FeatureMatrix x = features.is_sparse() ? features : features.to_dense();
      for (int t = 0; t < spec.trees; ++t)
        s.trees.push_back(TreeBuilder(x, labels, num_classes, spec, derive_seed(spec.seed, static_cast<std::uint64_t>(t))).build());
      state->impl = std::move(s);
      break;
    }
    case LearnerKind::mlp: {
      detail::MlpState s;
      s.standardizer = Standardizer::fit(features);
      const FeatureMatrix z = s.standardizer.transform(features);
      auto& p = s.params;
      const auto hidden = static_cast<std::size_t>(spec.hidden);
      p.resize(z.cols(), hidden, num_classes);
      Rng rng(derive_seed(spec.seed, 0x6d6c70));
      const double a1 = std::sqrt(6.0 / static_cast<double>(z.cols() + hidden));
      const double a2 = std::sqrt(6.0 / static_cast<double>(hidden + num_classes));
      for (double& w : p.w1) w = a1 * (2.0 * rng.uniform() - 1.0);
      for (double& w : p.w2) w = a2 * (2.0 * rng.uniform() - 1.0);
      AdamState sw1, sb1, sw2, sb2;
      mlp::Parameters g;
      for (int e = 1; e <= spec.epochs; ++e) {
        mlp::loss_and_gradient(p, z, labels, spec.l2, &g);
        adam_update(p.w1, g.w1, sw1, spec.learning_rate, e);
        adam_update(p.b1, g.b1, sb1, spec.learning_rate, e);
        adam_update(p.w2, g.w2, sw2, spec.learning_rate, e);
        adam_update(p.b2, g.b2, sb2, spec.learning_rate, e);
      }
      state->impl = std::move(s);
      break;
    }
  }
  model.state_ = std::move(state);
  return model;
}

bool TrainedModel::degenerate() const noexcept {
  return state_ && std::holds_alternative<detail::ConstantState>(state_->impl);
}

void TrainedModel::check_dims(const FeatureMatrix& x) const {
  if (!state_) throw Error("model is not trained");
  if (x.cols() != num_features_)
    throw DataError("feature dimension mismatch: model expects " + std::to_string(num_features_) + ", got " +
                    std::to_string(x.cols()));
}

ProbabilityMatrix TrainedModel::posterior(const FeatureMatrix& x) const {
  check_dims(x);
  const std::size_t k = num_classes_;
  return std::visit(
      [&](const auto& s) -> ProbabilityMatrix {
        using T = std::decay_t<decltype(s)>;
        ProbabilityMatrix out(x.rows(), k);
        if constexpr (std::is_same_v<T, detail::ConstantState>) {
          for (std::size_t i = 0; i < x.rows(); ++i) out.row(i)[static_cast<std::size_t>(s.label)] = 1.0;
        } else if constexpr (std::is_same_v<T, detail::LinearState>) {
          out = linear_decisions(s, x);
          for (std::size_t i = 0; i < out.rows(); ++i) softmax_inplace(out.row(i));
        } else if constexpr (std::is_same_v<T, detail::ForestState>) {
          for (const auto& tree : s.trees)
            for (std::size_t i = 0; i < x.rows(); ++i) {
              auto dist = tree.distribution(x, i, k);
              auto row = out.row(i);
              for (std::size_t c = 0; c < k; ++c) row[c] += dist[c];
            }
          const auto nt = static_cast<double>(s.trees.size());
          for (std::size_t i = 0; i < x.rows(); ++i)
            for (double& v : out.row(i)) v /= nt;
        } else {
          const FeatureMatrix z = s.standardizer.transform(x);
          std::vector<double> hidden;
          for (std::size_t i = 0; i < z.rows(); ++i) {
            mlp_forward(s.params, z, i, hidden, out.row(i));
            softmax_inplace(out.row(i));
          }
        }
        return out;
      },
      state_->impl);
}

std::vector<int> TrainedModel::predict(const FeatureMatrix& x) const {
  const ProbabilityMatrix p = posterior(x);
  std::vector<int> out(p.rows());
  for (std::size_t i = 0; i < p.rows(); ++i) out[i] = argmax(p.row(i));
  return out;
}

std::vector<double> TrainedModel::confidence(const FeatureMatrix& x) const {
  check_dims(x);
  std::vector<double> out(x.rows());
  if (const auto* lin = std::get_if<detail::LinearState>(&state_->impl)) {
    const ProbabilityMatrix dec = linear_decisions(*lin, x);
    for (std::size_t i = 0; i < dec.rows(); ++i) {
      auto row = dec.row(i);
      double top = -std::numeric_limits<double>::infinity(), second = top;
      for (double v : row) {
        if (v > top) {
          second = top;
          top = v;
        } else if (v > second) {
          second = v;
        }
      }
      out[i] = std::tanh(0.5 * (top - second));
    }
    return out;
  }
  const ProbabilityMatrix p = posterior(x);
  for (std::size_t i = 0; i < p.rows(); ++i) out[i] = p(i, static_cast<std::size_t>(argmax(p.row(i))));
  return out;
}

json TrainedModel::to_json() const {
  if (!state_) throw Error("model is not trained");
  json j = {{"format", "alstop-model"},
            {"version", 1},
            {"spec", spec_.to_json()},
            {"classes", num_classes_},
            {"features", num_features_}};
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, detail::ConstantState>) {
          j["constant"] = s.label;
        } else if constexpr (std::is_same_v<T, detail::LinearState>) {
          j["standardizer"] = s.standardizer.to_json();
          j["weights"] = s.weights;
        } else if constexpr (std::is_same_v<T, detail::ForestState>) {
          json trees = json::array();
          for (const auto& t : s.trees) {
            json nodes = json::array();
            for (const auto& n : t.nodes) nodes.push_back({n.feature, n.threshold, n.left, n.right, n.leaf});
            trees.push_back({{"nodes", std::move(nodes)}, {"leaves", t.leaves}});
          }
          j["trees"] = std::move(trees);
        } else {
          j["standardizer"] = s.standardizer.to_json();
          j["w1"] = s.params.w1;
          j["b1"] = s.params.b1;
          j["w2"] = s.params.w2;
          j["b2"] = s.params.b2;
        }
      },
      state_->impl);
  return j;
}

}  // namespace alstop
