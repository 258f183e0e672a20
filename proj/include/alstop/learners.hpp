#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "alstop/dataset.hpp"

namespace alstop {

enum class LearnerKind { linear, forest, mlp };

std::string_view to_string(LearnerKind kind);
LearnerKind learner_kind_from_string(std::string_view name);

// Learner hyperparameters. Every field has a default; `from_json` accepts
// {"kind": ..., "seed": ..., "params": {key: value}} with these keys:
//
//   l2              L2 penalty (linear 1e-3, mlp 1e-4)
//   epochs          full-batch passes (linear 300, mlp 300)
//   learning_rate   Adam step size (mlp 0.01)
//   hidden          hidden units (mlp 64)
//   trees           forest size (100)
//   max_depth       tree depth limit, 0 = unlimited
//   min_samples_leaf
struct LearnerSpec {
  LearnerKind kind = LearnerKind::linear;
  std::uint64_t seed = 0;
  double l2 = 1e-3;
  int epochs = 300;
  double learning_rate = 0.01;
  int hidden = 64;
  int trees = 100;
  int max_depth = 0;
  int min_samples_leaf = 1;

  static LearnerSpec defaults(LearnerKind kind);
  static LearnerSpec from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  void validate() const;

  bool operator==(const LearnerSpec&) const = default;
};

namespace detail {
struct ModelState;
}

// Immutable trained classifier. Cheap to copy; copies share state.
class TrainedModel {
 public:
  const LearnerSpec& spec() const noexcept { return spec_; }
  std::size_t num_classes() const noexcept { return num_classes_; }
  std::size_t num_features() const noexcept { return num_features_; }
  // True when training saw a single class and the model predicts it constantly.
  bool degenerate() const noexcept;

  // Rows are nonnegative and sum to one.
  ProbabilityMatrix posterior(const FeatureMatrix& x) const;
  // argmax of the posterior, ties to the lowest class id.
  std::vector<int> predict(const FeatureMatrix& x) const;
  // Confidence in the predicted class, in [0, 1].
  //   linear: tanh(margin / 2) where margin is the gap between the two
  //           largest decision values (0 on the decision boundary)
  //   forest: mean over trees of the predicted class's leaf fraction
  //   mlp:    softmax output of the predicted class
  std::vector<double> confidence(const FeatureMatrix& x) const;

  nlohmann::json to_json() const;

 private:
  friend TrainedModel fit(const LearnerSpec&, const FeatureMatrix&, std::span<const int>, std::size_t);
  void check_dims(const FeatureMatrix& x) const;

  LearnerSpec spec_;
  std::size_t num_classes_ = 0;
  std::size_t num_features_ = 0;
  std::shared_ptr<const detail::ModelState> state_;
};

// Deterministic given (spec, features, labels). Labels are class ids in
// [0, num_classes).
TrainedModel fit(const LearnerSpec& spec, const FeatureMatrix& features, std::span<const int> labels,
                 std::size_t num_classes);

double accuracy(std::span<const int> predicted, std::span<const int> truth);

namespace mlp {

// Single hidden layer network: softmax(w2 * tanh(w1 * x + b1) + b2).
// Weight matrices are row-major: w1 is hidden x inputs, w2 is classes x hidden.
struct Parameters {
  std::size_t inputs = 0;
  std::size_t hidden = 0;
  std::size_t classes = 0;
  std::vector<double> w1, b1, w2, b2;

  void resize(std::size_t in, std::size_t hid, std::size_t out);
};

// Mean cross-entropy plus (l2 / 2) * (|w1|^2 + |w2|^2). Writes the exact
// gradient into `grad` when non-null.
double loss_and_gradient(const Parameters& params, const FeatureMatrix& x, std::span<const int> labels, double l2,
                         Parameters* grad);

}  // namespace mlp

}  // namespace alstop
