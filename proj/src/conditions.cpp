#include "alstop/conditions.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "alstop/error.hpp"

namespace alstop {

using nlohmann::json;

namespace {
template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;
}  // namespace

void validate(const ConditionSpec& spec) {
  std::visit(overloaded{
                 [](const Threshold& c) {
                   if (!std::isfinite(c.value)) throw ConfigError("threshold must be finite");
                 },
                 [](const ConsecutiveChange& c) {
                   if (c.count < 1) throw ConfigError("consecutive-change count must be at least 1");
                   if (!(c.min_delta >= 0.0)) throw ConfigError("consecutive-change min_delta must be >= 0");
                 },
                 [](const WindowGradient& c) {
                   if (c.window < 2) throw ConfigError("window-gradient window must be at least 2");
                   if (!(c.epsilon > 0.0)) throw ConfigError("window-gradient epsilon must be positive");
                 },
                 [](const PatienceMinimum& c) {
                   if (c.patience < 1) throw ConfigError("patience must be at least 1");
                 },
             },
             spec);
}

json to_json(const ConditionSpec& spec) {
  return std::visit(
      overloaded{
          [](const Threshold& c) -> json {
            return {{"type", "threshold"},
                    {"direction", c.direction == Direction::at_most ? "<=" : ">="},
                    {"value", c.value}};
          },
          [](const ConsecutiveChange& c) -> json {
            return {{"type", "consecutive_change"}, {"direction", "decrease"}, {"count", c.count},
                    {"min_delta", c.min_delta}};
          },
          [](const WindowGradient& c) -> json {
            return {{"type", "window_gradient"},
                    {"window", c.window},
                    {"epsilon", c.epsilon},
                    {"aggregate", c.aggregate == Aggregate::mean ? "mean" : "median"},
                    {"extremum", c.extremum == Extremum::max ? "max" : "min"}};
          },
          [](const PatienceMinimum& c) -> json {
            return {{"type", "patience_minimum"}, {"patience", c.patience}, {"rollback", c.rollback}};
          },
      },
      spec);
}

ConditionSpec condition_from_json(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  ConditionSpec out;
  if (type == "threshold") {
    const std::string dir = j.at("direction").get<std::string>();
    if (dir != "<=" && dir != ">=") throw ConfigError("threshold direction must be <= or >=");
    out = Threshold{dir == "<=" ? Direction::at_most : Direction::at_least, j.at("value").get<double>()};
  } else if (type == "consecutive_change") {
    out = ConsecutiveChange{j.at("count").get<int>(), j.value("min_delta", 0.0)};
  } else if (type == "window_gradient") {
    WindowGradient w;
    w.window = j.at("window").get<int>();
    w.epsilon = j.at("epsilon").get<double>();
    w.aggregate = j.value("aggregate", std::string("mean")) == "median" ? Aggregate::median : Aggregate::mean;
    w.extremum = j.value("extremum", std::string("max")) == "min" ? Extremum::min : Extremum::max;
    out = w;
  } else if (type == "patience_minimum") {
    out = PatienceMinimum{j.at("patience").get<int>(), j.value("rollback", true)};
  } else {
    throw ConfigError("unknown condition type '" + type + "'");
  }
  validate(out);
  return out;
}

double aggregate(std::span<const double> values, Aggregate how) {
  if (values.empty()) throw Error("aggregate of an empty window");
  if (how == Aggregate::mean) {
    double s = 0.0;
    for (double v : values) s += v;
    return s / static_cast<double>(values.size());
  }
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

ConditionMonitor::ConditionMonitor(ConditionSpec spec) : spec_(std::move(spec)) { validate(spec_); }

std::optional<Firing> ConditionMonitor::observe(std::optional<double> value) {
  const std::size_t t = round_++;
  std::optional<Firing> result;
  std::visit(overloaded{
                 [&](const Threshold& c) {
                   if (!value) return;
                   const bool hit = c.direction == Direction::at_most ? *value <= c.value : *value >= c.value;
                   if (hit) result = Firing{t, t};
                 },
                 [&](const ConsecutiveChange& c) {
                   const bool decreased =
                       value && previous_ && *value < *previous_ && *previous_ - *value >= c.min_delta;
                   run_ = decreased ? run_ + 1 : 0;
                   if (run_ >= c.count) result = Firing{t, t};
                 },
                 [&](const WindowGradient& c) {
                   window_.push_back(value);
                   if (window_.size() > static_cast<std::size_t>(c.window)) window_.pop_front();
                   if (window_.size() < static_cast<std::size_t>(c.window)) return;
                   if (std::any_of(window_.begin(), window_.end(), [](const auto& v) { return !v; })) return;
                   std::vector<double> vals, diffs;
                   for (const auto& v : window_) vals.push_back(*v);
                   for (std::size_t i = 1; i < vals.size(); ++i) diffs.push_back(vals[i] - vals[i - 1]);
                   const double level = aggregate(vals, c.aggregate);
                   const double slope = aggregate(diffs, c.aggregate);
                   const bool is_max = c.extremum == Extremum::max;
                   const bool new_extremum =
                       !best_level_ || (is_max ? level > *best_level_ : level < *best_level_);
                   if (new_extremum) best_level_ = level;
                   const bool flat = is_max ? (slope > 0.0 && slope < c.epsilon) : (slope < 0.0 && -slope < c.epsilon);
                   if (new_extremum && flat) result = Firing{t, t};
                 },
                 [&](const PatienceMinimum& c) {
                   if (value && (!best_value_ || *value < *best_value_)) {
                     best_value_ = value;
                     best_round_ = t;
                   }
                   const auto patience = static_cast<std::size_t>(c.patience);
                   if (best_value_ && t - best_round_ >= patience) result = Firing{t, c.rollback ? t - patience : t};
                 },
             },
             spec_);
  previous_ = value;
  return result;
}

std::optional<Firing> first_firing(const ConditionSpec& spec, std::span<const std::optional<double>> series) {
  ConditionMonitor monitor(spec);
  for (const auto& v : series)
    if (auto f = monitor.observe(v)) return f;
  return std::nullopt;
}

}  // namespace alstop
