#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "alstop/dataset.hpp"
#include "alstop/ingest.hpp"
#include "alstop/rng.hpp"
#include "alstop/trace.hpp"

namespace fixtures {

inline alstop::Dataset blobs(std::size_t per_class, double separation, std::uint64_t seed, std::size_t classes = 2,
                             std::size_t dims = 2) {
  alstop::SyntheticSpec s;
  s.num_classes = classes;
  s.per_class = per_class;
  s.separation = separation;
  s.dims = dims;
  s.seed = seed;
  return alstop::generate_synthetic(s, "blobs");
}

inline std::vector<double> random_distribution(alstop::Rng& rng, std::size_t classes) {
  std::vector<double> p(classes);
  double s = 0.0;
  for (auto& v : p) {
    v = rng.uniform() < 0.2 ? 0.0 : rng.uniform();
    s += v;
  }
  if (s == 0.0) {
    p[rng.uniform_index(classes)] = 1.0;
    return p;
  }
  for (auto& v : p) v /= s;
  return p;
}

// A structurally valid trace with random contents.
inline alstop::RunTrace random_trace(alstop::Rng& rng, std::size_t rounds, std::size_t classes = 2) {
  alstop::RunTrace t;
  t.dataset = "random";
  t.model = "linear";
  t.learner = {{"kind", "linear"}};
  t.source = {{"name", "random"}};
  t.repeat = rng.uniform_index(30);
  t.seed = rng.next();
  t.num_classes = classes;
  t.config.batch_size = 1 + rng.uniform_index(4);
  t.config.test_fraction = 0.25 + 0.5 * rng.uniform();
  const std::size_t stopset = 1 + rng.uniform_index(6);
  for (std::size_t i = 0; i < stopset; ++i) t.stopset.push_back(2 * i + 1);
  std::size_t labels = 10;
  for (std::size_t r = 0; r < rounds; ++r) {
    alstop::IterationRecord rec;
    rec.round = r;
    rec.labels_used = labels;
    const std::size_t batch = r + 1 < rounds ? t.config.batch_size : rng.uniform_index(t.config.batch_size + 1);
    for (std::size_t b = 0; b < batch; ++b)
      rec.selected.push_back({rng.uniform_index(1000), static_cast<int>(rng.uniform_index(classes)),
                              random_distribution(rng, classes)});
    labels += batch;
    const std::size_t n = 1 + rng.uniform_index(8);
    std::vector<double> flat;
    for (std::size_t i = 0; i < n; ++i) {
      rec.subsample.push_back(3 * i + r);
      const auto p = random_distribution(rng, classes);
      flat.insert(flat.end(), p.begin(), p.end());
      rec.subsample_predictions.push_back(alstop::argmax(p));
    }
    rec.subsample_posteriors = alstop::ProbabilityMatrix(n, classes, flat);
    for (std::size_t i = 0; i < stopset; ++i)
      rec.stopset_predictions.push_back(static_cast<int>(rng.uniform_index(classes)));
    rec.test_accuracy = rng.uniform();
    t.records.push_back(std::move(rec));
  }
  return t;
}

}  // namespace fixtures
