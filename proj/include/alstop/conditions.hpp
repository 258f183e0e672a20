#pragma once

#include <cstddef>
#include <deque>
#include <optional>
#include <span>
#include <variant>

#include <json.hpp>

namespace alstop {

enum class Direction { at_most, at_least };
enum class Aggregate { mean, median };
enum class Extremum { max, min };

// Fires on the first defined value v with v <= value (at_most) or v >= value.
struct Threshold {
  Direction direction = Direction::at_most;
  double value = 0.0;
};

// Fires at round t once the metric has decreased, by at least min_delta, at
// each of the `count` rounds t-count+1 .. t. A decrease at round s means
// m[s] < m[s-1] and m[s-1] - m[s] >= min_delta, both values defined.
struct ConsecutiveChange {
  int count = 2;
  double min_delta = 0.0;
};

// Stationarity test over the last `window` values m[t-window+1 .. t]:
//   level      = aggregate of the window
//   derivative = aggregate of the window's window-1 successive differences
// With extremum = max it fires when the level is a new maximum and
// 0 < derivative < epsilon; with extremum = min when the level is a new
// minimum and -epsilon < derivative < 0. The first complete window counts as
// a new extremum. Never fires before round window-1.
struct WindowGradient {
  int window = 10;
  double epsilon = 5e-5;
  Aggregate aggregate = Aggregate::mean;
  Extremum extremum = Extremum::max;
};

// Fires at round t when the running minimum was last improved (strictly) at
// round t - patience. With rollback the reported stop round is t - patience.
struct PatienceMinimum {
  int patience = 10;
  bool rollback = true;
};

using ConditionSpec = std::variant<Threshold, ConsecutiveChange, WindowGradient, PatienceMinimum>;

void validate(const ConditionSpec& spec);
nlohmann::json to_json(const ConditionSpec& spec);
ConditionSpec condition_from_json(const nlohmann::json& j);

struct Firing {
  std::size_t fire_round = 0;  // round at which the condition became true
  std::size_t stop_round = 0;  // round the decision reports (differs under rollback)

  bool operator==(const Firing&) const = default;
};

// Streaming evaluation: feed one metric value per round (nullopt where the
// metric is undefined) and get a Firing on every round the condition holds.
class ConditionMonitor {
 public:
  explicit ConditionMonitor(ConditionSpec spec);
  std::optional<Firing> observe(std::optional<double> value);
  std::size_t rounds_seen() const noexcept { return round_; }

 private:
  ConditionSpec spec_;
  std::size_t round_ = 0;
  std::optional<double> previous_;
  int run_ = 0;
  std::deque<std::optional<double>> window_;
  std::optional<double> best_level_;
  std::optional<double> best_value_;
  std::size_t best_round_ = 0;
};

std::optional<Firing> first_firing(const ConditionSpec& spec, std::span<const std::optional<double>> series);

double aggregate(std::span<const double> values, Aggregate how);

}  // namespace alstop
