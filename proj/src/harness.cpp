#include "alstop/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include "alstop/error.hpp"
#include "alstop/query.hpp"
#include "alstop/rng.hpp"

namespace alstop {

using nlohmann::json;

namespace {

enum : std::uint64_t {
  kSplitStream = 1,
  kInitStream,
  kStopsetStream,
  kSubsampleStream,
  kReplenishStream,
  kLearnerStream,
  kQueryStream,
};

std::vector<int> labels_of(const Dataset& ds, std::span<const std::size_t> rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(ds.labels[r]);
  return out;
}

void insert_sorted(std::vector<std::size_t>& into, std::vector<std::size_t> add) {
  std::sort(add.begin(), add.end());
  std::vector<std::size_t> merged;
  merged.reserve(into.size() + add.size());
  std::merge(into.begin(), into.end(), add.begin(), add.end(), std::back_inserter(merged));
  into = std::move(merged);
}

}  // namespace

void ExperimentConfig::validate() const {
  if (datasets.empty()) throw ConfigError("config lists no datasets");
  if (learners.empty()) throw ConfigError("config lists no learners");
  if (repeats < 1) throw ConfigError("repeats must be at least 1");
  if (protocol.batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (protocol.subsample_size < 1) throw ConfigError("subsample_size must be at least 1");
  if (protocol.stopset_size < 1) throw ConfigError("stopset_size must be at least 1");
  if (!(protocol.test_fraction > 0.0 && protocol.test_fraction < 1.0))
    throw ConfigError("test_fraction must lie in (0, 1)");
  for (const auto& l : learners) l.validate();
  for (const auto& c : criteria) c.validate();
}

ExperimentConfig ExperimentConfig::from_json(const json& j, const std::string& base_dir) {
  static const std::vector<std::string> known = {"datasets",     "learners",      "batch_size", "subsample_size",
                                                 "reserve",      "initial_size",  "test_fraction",
                                                 "stopset_size", "repeats",       "seed",       "output_dir",
                                                 "threads",      "criteria"};
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, value] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end()) throw ConfigError("unknown config key '" + key + "'");

  ExperimentConfig c;
  try {
    for (const auto& d : j.at("datasets")) c.datasets.push_back(DatasetSource::from_json(d, base_dir));
    for (const auto& l : j.at("learners"))
      c.learners.push_back(l.is_string() ? LearnerSpec::defaults(learner_kind_from_string(l.get<std::string>()))
                                         : LearnerSpec::from_json(l));
    c.protocol.batch_size = j.value("batch_size", c.protocol.batch_size);
    c.protocol.subsample_size = j.value("subsample_size", c.protocol.subsample_size);
    c.protocol.reserve = j.value("reserve", c.protocol.reserve);
    c.protocol.initial_size = j.value("initial_size", c.protocol.initial_size);
    c.protocol.test_fraction = j.value("test_fraction", c.protocol.test_fraction);
    c.protocol.stopset_size = j.value("stopset_size", c.protocol.stopset_size);
    c.repeats = j.value("repeats", c.repeats);
    c.base_seed = j.value("seed", c.base_seed);
    c.threads = j.value("threads", c.threads);
    std::filesystem::path out = j.value("output_dir", c.output_dir);
    if (out.is_relative() && !base_dir.empty()) out = std::filesystem::path(base_dir) / out;
    c.output_dir = out.lexically_normal().string();
    if (j.contains("criteria")) {
      c.criteria.clear();
      for (const auto& s : j.at("criteria"))
        c.criteria.push_back(s.is_string() ? CriterionSpec::defaults(criterion_id_from_string(s.get<std::string>()))
                                           : CriterionSpec::from_json(s));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config: ") + e.what());
  }
  std::vector<std::string> names;
  for (const auto& d : c.datasets) names.push_back(d.name);
  std::sort(names.begin(), names.end());
  if (std::adjacent_find(names.begin(), names.end()) != names.end()) throw ConfigError("dataset names must be unique");
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError("config " + path + " is not valid JSON");
  return from_json(j, std::filesystem::absolute(path).parent_path().string());
}

void check_feasible(const TraceConfig& protocol, std::size_t dataset_rows) {
  const auto test = static_cast<std::size_t>(std::floor(protocol.test_fraction * static_cast<double>(dataset_rows)));
  if (dataset_rows < test + protocol.initial_size + 1)
    throw ConfigError("dataset of " + std::to_string(dataset_rows) + " rows is too small for the protocol");
  if (protocol.reserve >= dataset_rows - test - protocol.initial_size)
    throw ConfigError("reserve " + std::to_string(protocol.reserve) + " leaves nothing to query on a dataset of " +
                      std::to_string(dataset_rows) + " rows");
}

std::uint64_t derive_run_seed(std::uint64_t base_seed, const std::string& dataset, std::size_t repeat) {
  return derive_seed(derive_seed(base_seed, fnv1a(dataset)), repeat);
}

RunTrace run_al(const Dataset& dataset, const LearnerSpec& learner, const TraceConfig& protocol, std::uint64_t seed,
                const RunOptions& options) {
  dataset.validate();
  learner.validate();
  if (protocol.batch_size < 1) throw ConfigError("batch_size must be at least 1");

  PoolState pool = make_split(dataset, derive_seed(seed, kSplitStream), protocol.test_fraction);
  pool = make_initial_set(pool, dataset, derive_seed(seed, kInitStream), protocol.initial_size);
  if (pool.unlabeled.empty()) throw ConfigError("no unlabeled instances left after the initial set");

  RunTrace trace;
  trace.dataset = dataset.name;
  trace.model = std::string(to_string(learner.kind));
  trace.learner = learner.to_json();
  trace.source = options.source;
  trace.repeat = options.repeat;
  trace.seed = seed;
  trace.num_classes = dataset.num_classes();
  trace.config = protocol;
  {
    Rng rng(derive_seed(seed, kStopsetStream));
    trace.stopset = rng.sample(std::span<const std::size_t>(pool.unlabeled), protocol.stopset_size);
    std::sort(trace.stopset.begin(), trace.stopset.end());
  }
  pool = draw_subsample(pool, derive_seed(seed, kSubsampleStream), protocol.subsample_size);
  if (options.writer) options.writer->write_header(trace);

  const FeatureMatrix test_x = dataset.features.select(pool.test);
  const std::vector<int> test_y = labels_of(dataset, pool.test);
  const FeatureMatrix stop_x = dataset.features.select(trace.stopset);
  Rng replenish(derive_seed(seed, kReplenishStream));
  const std::uint64_t learner_seed = derive_seed(derive_seed(seed, kLearnerStream), learner.seed);
  const QueryConfig query{protocol.batch_size, Similarity::automatic};

  for (std::size_t round = 0;; ++round) {
    LearnerSpec spec = learner;
    spec.seed = derive_seed(learner_seed, round);
    TrainedModel model;
    IterationRecord rec;
    try {
      model = fit(spec, dataset.features.select(pool.labeled), labels_of(dataset, pool.labeled),
                  dataset.num_classes());
      rec.subsample_posteriors = model.posterior(dataset.features.select(pool.subsample));
      rec.stopset_predictions = model.predict(stop_x);
      rec.test_accuracy = accuracy(model.predict(test_x), test_y);
    } catch (const std::exception& e) {
      trace.abort_reason = "learner failure in round " + std::to_string(round) + ": " + e.what();
      if (options.writer) options.writer->mark_aborted(*trace.abort_reason);
      return trace;
    }
    rec.round = round;
    rec.labels_used = pool.labeled.size();
    rec.subsample = pool.subsample;
    rec.subsample_predictions.resize(pool.subsample.size());
    for (std::size_t i = 0; i < pool.subsample.size(); ++i)
      rec.subsample_predictions[i] = argmax(rec.subsample_posteriors.row(i));

    const bool querying = pool.unlabeled.size() > protocol.reserve;
    if (querying) {
      QueryConfig q = query;
      q.batch_size = std::min(protocol.batch_size, pool.unlabeled.size() - protocol.reserve);
      const auto picks =
          rank_batch(model, dataset.features, pool.subsample, pool.labeled, q, derive_seed(seed, kQueryStream + 16 * round));
      for (std::size_t row : picks) {
        const auto pos = static_cast<std::size_t>(
            std::lower_bound(pool.subsample.begin(), pool.subsample.end(), row) - pool.subsample.begin());
        const auto p = rec.subsample_posteriors.row(pos);
        rec.selected.push_back({row, dataset.labels[row], std::vector<double>(p.begin(), p.end())});
      }
      std::vector<std::size_t> moved = picks;
      std::sort(moved.begin(), moved.end());
      erase_sorted(pool.unlabeled, moved);
      erase_sorted(pool.subsample, moved);
      insert_sorted(pool.labeled, moved);

      if (pool.subsample.size() < protocol.batch_size + 1 && pool.unlabeled.size() > pool.subsample.size()) {
        std::vector<std::size_t> outside;
        std::set_difference(pool.unlabeled.begin(), pool.unlabeled.end(), pool.subsample.begin(),
                            pool.subsample.end(), std::back_inserter(outside));
        const std::size_t want = protocol.subsample_size > pool.subsample.size()
                                     ? protocol.subsample_size - pool.subsample.size()
                                     : protocol.batch_size + 1 - pool.subsample.size();
        insert_sorted(pool.subsample, replenish.sample(std::span<const std::size_t>(outside), want));
      }
    }

    if (options.writer) options.writer->append(rec);
    trace.records.push_back(std::move(rec));
    if (!querying || pool.unlabeled.size() <= protocol.reserve) break;
  }
  return trace;
}

double al_potential(const Dataset& dataset, const LearnerSpec& learner, std::uint64_t seed, double test_fraction,
                    std::size_t initial_size) {
  PoolState pool = make_split(dataset, derive_seed(seed, kSplitStream), test_fraction);
  std::vector<std::size_t> half = pool.unlabeled;
  pool = make_initial_set(pool, dataset, derive_seed(seed, kInitStream), initial_size);

  const FeatureMatrix test_x = dataset.features.select(pool.test);
  const std::vector<int> test_y = labels_of(dataset, pool.test);
  LearnerSpec spec = learner;
  spec.seed = derive_seed(derive_seed(seed, kLearnerStream), learner.seed);
  const auto full = fit(spec, dataset.features.select(half), labels_of(dataset, half), dataset.num_classes());
  const auto init =
      fit(spec, dataset.features.select(pool.labeled), labels_of(dataset, pool.labeled), dataset.num_classes());
  return accuracy(full.predict(test_x), test_y) - accuracy(init.predict(test_x), test_y);
}

json Evaluation::summary_json() const {
  json stops = json::array();
  for (const auto& s : stop_rates)
    stops.push_back({{"model", s.model}, {"criterion", s.criterion}, {"runs", s.runs}, {"stops", s.stops},
                     {"rate", s.rate()}});
  json corr = json::array();
  for (const auto& c : correlations)
    corr.push_back({{"model", c.model}, {"criterion", c.criterion}, {"datasets", c.datasets}, {"mean", c.mean},
                    {"se", c.se}});
  return {{"stop_rates", stops}, {"correlations", corr}};
}

Evaluation evaluate_all(const std::vector<RunTrace>& traces, const std::vector<CriterionSpec>& criteria,
                        const std::map<std::string, const Dataset*>& datasets, std::size_t threads) {
  if (traces.empty()) throw DataError("no traces to evaluate");
  const std::size_t k = criteria.size();
  Evaluation ev;
  ev.rows.resize(traces.size() * k);

  parallel_for(traces.size() * k, threads, [&](std::size_t job) {
    const RunTrace& t = traces[job / k];
    const CriterionSpec& spec = criteria[job % k];
    DecisionRow& row = ev.rows[job];
    row.dataset = t.dataset;
    row.model = t.model;
    row.repeat = t.repeat;
    row.criterion = std::string(to_string(spec.id));
    if (t.aborted()) {
      row.status = "skipped";
      row.note = "aborted run: " + *t.abort_reason;
      return;
    }
    if (!is_applicable(spec.id, t)) {
      row.status = "skipped";
      row.note = "not applicable";
      return;
    }
    const auto it = datasets.find(t.dataset);
    const Dataset* ds = it == datasets.end() ? nullptr : it->second;
    try {
      const StopDecision d = evaluate_criterion(t, spec, ds);
      row.status = "ok";
      row.stopped = d.stopped;
      row.stop_round = d.stop_round;
      row.labels_used = d.labels_used;
      row.accuracy = d.accuracy;
      try {
        row.correlation = metric_accuracy_correlation(t, spec, ds);
      } catch (const UndefinedStatistic&) {
      }
    } catch (const Error& e) {
      row.status = "error";
      row.note = e.what();
    }
  });
  ev.stop_rates = stop_rates(ev.rows);
  ev.correlations = correlation_summary(ev.rows);
  return ev;
}

std::vector<StopRate> stop_rates(const std::vector<DecisionRow>& rows) {
  std::map<std::pair<std::string, std::string>, StopRate> acc;
  std::vector<std::pair<std::string, std::string>> order;
  for (const auto& r : rows) {
    if (r.status != "ok") continue;
    const auto key = std::make_pair(r.model, r.criterion);
    auto [it, fresh] = acc.try_emplace(key, StopRate{r.model, r.criterion, 0, 0});
    if (fresh) order.push_back(key);
    ++it->second.runs;
    if (r.stopped) ++it->second.stops;
  }
  std::vector<StopRate> out;
  for (const auto& key : order) out.push_back(acc[key]);
  return out;
}

std::vector<CorrelationSummary> correlation_summary(const std::vector<DecisionRow>& rows) {
  // (model, criterion) -> dataset -> r values
  std::map<std::pair<std::string, std::string>, std::map<std::string, std::vector<double>>> acc;
  std::vector<std::pair<std::string, std::string>> order;
  for (const auto& r : rows) {
    if (r.status != "ok" || !r.correlation) continue;
    const auto key = std::make_pair(r.model, r.criterion);
    if (!acc.count(key)) order.push_back(key);
    acc[key][r.dataset].push_back(*r.correlation);
  }
  std::vector<CorrelationSummary> out;
  for (const auto& key : order) {
    std::vector<double> per_dataset;
    for (const auto& [ds, values] : acc[key]) {
      double s = 0.0;
      for (double v : values) s += v;
      per_dataset.push_back(s / static_cast<double>(values.size()));
    }
    CorrelationSummary c{key.first, key.second, per_dataset.size(), 0.0, 0.0};
    for (double v : per_dataset) c.mean += v;
    c.mean /= static_cast<double>(per_dataset.size());
    if (per_dataset.size() > 1) {
      double ss = 0.0;
      for (double v : per_dataset) ss += (v - c.mean) * (v - c.mean);
      const double n = static_cast<double>(per_dataset.size());
      c.se = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    }
    out.push_back(c);
  }
  return out;
}

std::vector<CriterionOutcome> outcomes_from_rows(const std::vector<DecisionRow>& rows, const std::string& model) {
  std::vector<CriterionOutcome> out;
  std::map<std::string, std::size_t> index;
  for (const auto& r : rows) {
    if (r.status != "ok" || r.model != model) continue;
    auto [it, fresh] = index.try_emplace(r.criterion, out.size());
    if (fresh) out.push_back({r.criterion, {}});
    out[it->second].runs.push_back({r.dataset, r.model + "/" + std::to_string(r.repeat), r.stopped, r.accuracy,
                                    static_cast<double>(r.labels_used)});
  }
  return out;
}

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::size_t failed_at = n;
  std::exception_ptr failure;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < threads; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (i < failed_at) {
            failed_at = i;
            failure = std::current_exception();
          }
        }
      }
    });
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace alstop
