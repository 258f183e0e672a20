#pragma once

// Non-streaming reference evaluation of stopping conditions: every round is
// decided from the raw series prefix, recomputing all state from scratch.

#include <algorithm>
#include <cstddef>
#include <optional>
#include <vector>

#include "alstop/conditions.hpp"

namespace oracle {

using Series = std::vector<std::optional<double>>;

inline double agg(std::vector<double> v, alstop::Aggregate how) {
  if (how == alstop::Aggregate::mean) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  }
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

// Level of the window ending at t, when the window is complete and defined.
inline std::optional<double> level_at(const Series& s, std::size_t t, const alstop::WindowGradient& c) {
  const auto k = static_cast<std::size_t>(c.window);
  if (t + 1 < k) return std::nullopt;
  std::vector<double> vals;
  for (std::size_t i = t + 1 - k; i <= t; ++i) {
    if (!s[i]) return std::nullopt;
    vals.push_back(*s[i]);
  }
  return agg(vals, c.aggregate);
}

inline std::optional<double> slope_at(const Series& s, std::size_t t, const alstop::WindowGradient& c) {
  const auto k = static_cast<std::size_t>(c.window);
  std::vector<double> d;
  for (std::size_t i = t + 2 - k; i <= t; ++i) d.push_back(*s[i] - *s[i - 1]);
  return agg(d, c.aggregate);
}

// Whether the condition holds at round t, and the round it would report.
inline std::optional<std::size_t> holds(const alstop::ConditionSpec& spec, const Series& s, std::size_t t) {
  if (const auto* c = std::get_if<alstop::Threshold>(&spec)) {
    if (!s[t]) return std::nullopt;
    const bool ok = c->direction == alstop::Direction::at_most ? *s[t] <= c->value : *s[t] >= c->value;
    return ok ? std::optional<std::size_t>(t) : std::nullopt;
  }
  if (const auto* c = std::get_if<alstop::ConsecutiveChange>(&spec)) {
    const auto n = static_cast<std::size_t>(c->count);
    if (t + 1 < n + 1) return std::nullopt;
    for (std::size_t r = t + 1 - n; r <= t; ++r) {
      if (!s[r] || !s[r - 1]) return std::nullopt;
      if (!(*s[r] < *s[r - 1]) || !(*s[r - 1] - *s[r] >= c->min_delta)) return std::nullopt;
    }
    return t;
  }
  if (const auto* c = std::get_if<alstop::WindowGradient>(&spec)) {
    const auto level = level_at(s, t, *c);
    if (!level) return std::nullopt;
    const bool is_max = c->extremum == alstop::Extremum::max;
    for (std::size_t r = 0; r < t; ++r) {
      const auto earlier = level_at(s, r, *c);
      if (earlier && (is_max ? !(*level > *earlier) : !(*level < *earlier))) return std::nullopt;
    }
    const double d = *slope_at(s, t, *c);
    const bool flat = is_max ? (d > 0.0 && d < c->epsilon) : (d < 0.0 && d > -c->epsilon);
    return flat ? std::optional<std::size_t>(t) : std::nullopt;
  }
  const auto& c = std::get<alstop::PatienceMinimum>(spec);
  std::optional<double> best;
  std::size_t best_round = 0;
  for (std::size_t r = 0; r <= t; ++r)
    if (s[r] && (!best || *s[r] < *best)) {
      best = s[r];
      best_round = r;
    }
  const auto p = static_cast<std::size_t>(c.patience);
  if (!best || t - best_round < p) return std::nullopt;
  return c.rollback ? t - p : t;
}

struct Fire {
  std::size_t fire_round;
  std::size_t stop_round;
};

inline std::optional<Fire> first(const alstop::ConditionSpec& spec, const Series& s) {
  for (std::size_t t = 0; t < s.size(); ++t)
    if (const auto stop = holds(spec, s, t)) return Fire{t, *stop};
  return std::nullopt;
}

}  // namespace oracle
