#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "alstop/error.hpp"
#include "alstop/harness.hpp"
#include "alstop/ingest.hpp"
#include "fixtures.hpp"

using namespace alstop;

namespace {

TraceConfig paper_protocol() { return {}; }

TraceConfig small_protocol() {
  TraceConfig c;
  c.batch_size = 5;
  c.subsample_size = 60;
  c.reserve = 40;
  c.stopset_size = 50;
  return c;
}

double held_out_accuracy(const Dataset& d, LearnerKind kind) {
  const auto pool = make_split(d, 1, 0.5);
  std::vector<int> ytr, yte;
  for (auto r : pool.unlabeled) ytr.push_back(d.labels[r]);
  for (auto r : pool.test) yte.push_back(d.labels[r]);
  const auto m = fit(LearnerSpec::defaults(kind), d.features.select(pool.unlabeled), ytr, d.num_classes());
  return accuracy(m.predict(d.features.select(pool.test)), yte);
}

std::string error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("csv parsing") {
  std::istringstream in("a,b,y\n1.0,2.0,cat\n3,4,dog\n5,6,cat\n");
  const auto d = parse_csv(in, "y", "pets");
  CHECK(d.size() == 3);
  CHECK(d.features.cols() == 2);
  CHECK(d.class_names == std::vector<std::string>{"cat", "dog"});
  CHECK(d.labels == std::vector<int>{0, 1, 0});
  CHECK(d.features.at(1, 1) == 4.0);

  std::istringstream last("x,\"label, quoted\"\n1,2\n3,1\n");
  const auto q = parse_csv(last);
  CHECK(q.features.cols() == 1);
  CHECK(q.class_names == std::vector<std::string>{"1", "2"});
  CHECK(q.labels == std::vector<int>{1, 0});

  std::istringstream numeric("x,y\n0,10\n0,9\n0,100\n");
  CHECK(parse_csv(numeric, "y").class_names == std::vector<std::string>{"9", "10", "100"});
}

TEST_CASE("csv errors name the line") {
  std::istringstream arity("a,b,y\n1,2,0\n1,2\n");
  CHECK(error_of([&] { parse_csv(arity); }).find("line 3") != std::string::npos);
  std::istringstream missing("a,y\n1,\n");
  CHECK(error_of([&] { parse_csv(missing); }).find("line 2") != std::string::npos);
  std::istringstream text("a,y\nabc,1\n");
  CHECK_THROWS_AS(parse_csv(text), DataError);
  std::istringstream empty("");
  CHECK_THROWS_AS(parse_csv(empty), DataError);
  std::istringstream no_col("a,y\n1,1\n");
  CHECK_THROWS_AS(parse_csv(no_col, "label"), DataError);
}

TEST_CASE("svmlight parsing") {
  std::istringstream in("# comment\n1 3:0.5 7:1.0\n-1 qid:4 1:2\n1 2:1 # trailing\n");
  const auto d = parse_svmlight(in);
  REQUIRE(d.size() == 3);
  CHECK(d.features.is_sparse());
  CHECK(d.features.cols() == 7);
  std::vector<std::pair<std::size_t, double>> nz;
  d.features.for_each_nonzero(0, [&](std::size_t c, double v) { nz.emplace_back(c, v); });
  CHECK(nz == std::vector<std::pair<std::size_t, double>>{{2, 0.5}, {6, 1.0}});
  CHECK(d.class_names == std::vector<std::string>{"-1", "1"});
  CHECK(d.labels == std::vector<int>{1, 0, 1});

  std::istringstream zero("1 0:1\n");
  CHECK(error_of([&] { parse_svmlight(zero); }).find("line 1") != std::string::npos);
  std::istringstream order("1 1:1\n0 4:1 2:1\n");
  CHECK(error_of([&] { parse_svmlight(order); }).find("line 2") != std::string::npos);
  std::istringstream junk("1 1:1\n0 4-1\n");
  CHECK(error_of([&] { parse_svmlight(junk); }).find("line 2") != std::string::npos);
}

TEST_CASE("dataset files load by format") {
  const auto dir = std::filesystem::temp_directory_path() / "alstop_harness_test";
  std::filesystem::create_directories(dir);
  {
    std::ofstream(dir / "tiny.csv") << "f,y\n1,a\n2,b\n";
    std::ofstream(dir / "tiny.svm") << "1 1:1\n2 2:1\n";
  }
  const auto a = load_dataset((dir / "tiny.csv").string(), DatasetFormat::csv);
  CHECK(a.name == "tiny");
  CHECK(a.size() == 2);
  CHECK(load_dataset((dir / "tiny.svm").string(), DatasetFormat::svmlight).features.cols() == 2);
  const auto msg = error_of([&] { load_dataset((dir / "nope.csv").string(), DatasetFormat::csv); });
  CHECK(msg.find("nope.csv") != std::string::npos);
  CHECK(dataset_format_from_string("libsvm") == DatasetFormat::svmlight);
  CHECK_THROWS_AS(dataset_format_from_string("arff"), ConfigError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("synthetic blobs") {
  const auto far = fixtures::blobs(100, 10.0, 1);
  CHECK(far.size() == 200);
  CHECK(held_out_accuracy(far, LearnerKind::linear) == 1.0);
  const auto none = fixtures::blobs(500, 0.0, 2);
  CHECK(std::abs(held_out_accuracy(none, LearnerKind::linear) - 0.5) <= 0.1);

  SyntheticSpec s;
  s.seed = 4;
  const auto a = generate_synthetic(s), b = generate_synthetic(s);
  CHECK(a.labels == b.labels);
  for (std::size_t r = 0; r < a.size(); ++r)
    for (std::size_t c = 0; c < a.features.cols(); ++c) CHECK(a.features.at(r, c) == b.features.at(r, c));
  CHECK(SyntheticSpec::from_json(s.to_json()).to_json() == s.to_json());

  s.per_class = 0;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s.per_class = 10;
  s.num_classes = 1;
  CHECK_THROWS_AS(s.validate(), ConfigError);
}

TEST_CASE("row subsampling") {
  const auto d = fixtures::blobs(100, 2.0, 3);
  const auto s = subsample_rows(d, 50, 9);
  CHECK(s.size() == 50);
  CHECK(subsample_rows(d, 50, 9).labels == s.labels);
  CHECK(subsample_rows(d, 1000, 9).size() == 200);
}

TEST_CASE("run_al on the paper protocol records 54 rounds") {
  const auto d = fixtures::blobs(1050, 2.0, 5);
  const auto t = run_al(d, LearnerSpec::defaults(LearnerKind::linear), paper_protocol(), 11);
  CHECK_FALSE(t.aborted());
  REQUIRE(t.records.size() == 54);
  CHECK_NOTHROW(validate_trace(t));
  CHECK(t.stopset.size() == 1000);
  CHECK(t.records.back().labels_used + t.records.back().selected.size() == 1050 - 500);

  std::set<std::size_t> labeled;
  std::set<std::size_t> stopset(t.stopset.begin(), t.stopset.end());
  for (const auto& r : t.records) {
    CHECK(r.labels_used == 10 + 10 * r.round);
    CHECK(r.subsample.size() <= 1000);
    CHECK(std::is_sorted(r.subsample.begin(), r.subsample.end()));
    for (auto row : r.subsample) CHECK(labeled.count(row) == 0);
    for (const auto& s : r.selected) {
      CHECK(s.label == d.labels[s.row]);
      const auto at = std::lower_bound(r.subsample.begin(), r.subsample.end(), s.row);
      REQUIRE(at != r.subsample.end());
      REQUIRE(*at == s.row);
      const auto row = r.subsample_posteriors.row(static_cast<std::size_t>(at - r.subsample.begin()));
      CHECK(std::vector<double>(row.begin(), row.end()) == s.posterior);
      CHECK(labeled.insert(s.row).second);
    }
  }
}

TEST_CASE("run_al is byte-identical for a fixed seed") {
  const auto d = fixtures::blobs(150, 2.0, 6);
  for (auto k : {LearnerKind::linear, LearnerKind::forest, LearnerKind::mlp}) {
    auto spec = LearnerSpec::defaults(k);
    if (k == LearnerKind::forest) spec.trees = 10;
    if (k == LearnerKind::mlp) spec.epochs = 50;
    const auto a = serialize_trace(run_al(d, spec, small_protocol(), 3));
    const auto b = serialize_trace(run_al(d, spec, small_protocol(), 3));
    CHECK(a == b);
    CHECK(a != serialize_trace(run_al(d, spec, small_protocol(), 4)));
  }
}

TEST_CASE("run_al with nothing to query records one round") {
  const auto d = fixtures::blobs(50, 2.0, 7);
  auto c = small_protocol();
  c.reserve = 90;
  const auto t = run_al(d, LearnerSpec::defaults(LearnerKind::linear), c, 1);
  REQUIRE(t.records.size() == 1);
  CHECK(t.records[0].selected.empty());
  CHECK_THROWS_AS(check_feasible(c, d.size()), ConfigError);
  CHECK_NOTHROW(check_feasible(small_protocol(), 150));
}

TEST_CASE("run_al streams to a writer and replenishes the subsample") {
  const auto d = fixtures::blobs(150, 2.0, 8);
  const auto path = (std::filesystem::temp_directory_path() / "alstop_stream.trace").string();
  RunTrace t;
  {
    TraceWriter w(path);
    RunOptions o;
    o.writer = &w;
    o.repeat = 2;
    o.source = {{"name", "blobs"}};
    t = run_al(d, LearnerSpec::defaults(LearnerKind::linear), small_protocol(), 9, o);
  }
  CHECK(read_trace_file(path) == t);
  CHECK(t.repeat == 2);
  // 150 unlabeled after the split, 10 initial, 40 reserve: 100 queries of 5, more than the 60-row subsample.
  CHECK(t.records.size() == 20);
  for (const auto& r : t.records) CHECK(r.subsample.size() >= small_protocol().batch_size);
  std::filesystem::remove(path);
}

TEST_CASE("run seeds depend on dataset and repeat") {
  CHECK(derive_run_seed(1, "a", 0) == derive_run_seed(1, "a", 0));
  CHECK(derive_run_seed(1, "a", 0) != derive_run_seed(1, "a", 1));
  CHECK(derive_run_seed(1, "a", 0) != derive_run_seed(1, "b", 0));
  CHECK(derive_run_seed(1, "a", 0) != derive_run_seed(2, "a", 0));
}

TEST_CASE("al potential") {
  const auto easy = fixtures::blobs(200, 12.0, 9);
  const double p = al_potential(easy, LearnerSpec::defaults(LearnerKind::linear), 1);
  CHECK(std::abs(p) <= 0.02);
  CHECK(al_potential(easy, LearnerSpec::defaults(LearnerKind::linear), 1) == p);

  SyntheticSpec s;
  s.per_class = 500;
  s.clusters_per_class = 10;
  s.separation = 8.0;
  s.seed = 3;
  const auto hard = generate_synthetic(s);
  auto forest = LearnerSpec::defaults(LearnerKind::forest);
  forest.trees = 30;
  CHECK(al_potential(hard, forest, 1) > 0.2);
}

TEST_CASE("evaluate_all composes per-trace decisions") {
  const auto d = fixtures::blobs(150, 2.0, 10);
  auto forest = LearnerSpec::defaults(LearnerKind::forest);
  forest.trees = 10;
  std::vector<RunTrace> traces{run_al(d, LearnerSpec::defaults(LearnerKind::linear), small_protocol(), 1),
                               run_al(d, forest, small_protocol(), 2)};
  for (auto& t : traces) t.dataset = "blobs";
  const auto suite = CriterionSpec::default_suite();
  const std::map<std::string, const Dataset*> data{{"blobs", &d}};
  const auto ev = evaluate_all(traces, suite, data, 2);
  REQUIRE(ev.rows.size() == 2 * suite.size());
  for (std::size_t i = 0; i < traces.size(); ++i)
    for (std::size_t c = 0; c < suite.size(); ++c) {
      const auto& row = ev.rows[i * suite.size() + c];
      CHECK(row.criterion == to_string(suite[c].id));
      CHECK(row.model == traces[i].model);
      if (!is_applicable(suite[c].id, traces[i])) {
        CHECK(row.status == "skipped");
        continue;
      }
      CHECK(row.status == "ok");
      const auto dec = evaluate_criterion(traces[i], suite[c], &d);
      CHECK(row.stopped == dec.stopped);
      CHECK(row.stop_round == dec.stop_round);
      CHECK(row.labels_used == dec.labels_used);
      CHECK(row.accuracy == dec.accuracy);
    }
  CHECK(ev.rows[2 * suite.size() - 1].criterion == "ssncut");
  CHECK(ev.rows[2 * suite.size() - 1].status == "skipped");
  CHECK(evaluate_all(traces, suite, data, 1).rows == ev.rows);
  CHECK(ev.summary_json().contains("stop_rates"));

  auto aborted = traces[0];
  aborted.abort_reason = "learner failed";
  const auto ab = evaluate_all({aborted}, suite, data, 1);
  for (const auto& r : ab.rows) CHECK(r.status == "skipped");
  CHECK_THROWS_AS(evaluate_all({}, suite, data, 1), DataError);
}

TEST_CASE("stop rates and correlation summaries") {
  std::vector<DecisionRow> rows;
  for (int i = 0; i < 30; ++i) {
    DecisionRow r;
    r.dataset = i < 20 ? "a" : "b";
    r.model = "linear";
    r.repeat = static_cast<std::size_t>(i);
    r.criterion = "mes";
    r.status = "ok";
    r.stopped = i >= 3;
    r.correlation = i < 20 ? (i % 2 ? 0.5 : 0.7) : 0.2;
    rows.push_back(r);
  }
  rows.push_back({"a", "linear", 99, "mes", "skipped", false, {}, 0, 0.0, {}, "n/a"});
  const auto s = stop_rates(rows);
  REQUIRE(s.size() == 1);
  CHECK(s[0].runs == 30);
  CHECK(s[0].stops == 27);
  CHECK(s[0].rate() == doctest::Approx(0.9));
  const auto c = correlation_summary(rows);
  REQUIRE(c.size() == 1);
  CHECK(c[0].datasets == 2);
  CHECK(c[0].mean == doctest::Approx(0.4));
  CHECK(c[0].se == doctest::Approx(0.2));

  const auto o = outcomes_from_rows(rows, "linear");
  REQUIRE(o.size() == 1);
  CHECK(o[0].runs.size() == 30);
  CHECK(o[0].stops() == 27);
  CHECK(outcomes_from_rows(rows, "mlp").empty());
}

TEST_CASE("decision csv round trip") {
  std::vector<DecisionRow> rows{
      {"d,1", "linear", 0, "mes", "ok", true, 4, 50, 0.1 + 0.2, -0.123456789012345678, ""},
      {"d\"2", "forest", 3, "ssncut", "skipped", false, {}, 0, 0.0, {}, "does not apply, sorry"},
  };
  const auto csv = decisions_to_csv(rows);
  CHECK(csv.rfind("dataset,model,repeat,criterion,status,stopped,stop_round,labels_used,accuracy,correlation,note\n", 0) ==
        0);
  CHECK(decisions_from_csv(csv) == rows);
  CHECK_THROWS_AS(decisions_from_csv("nope\n1\n"), DataError);
}

TEST_CASE("experiment config parsing") {
  const nlohmann::json j = {
      {"datasets", {{{"name", "s"}, {"synthetic", {{"per_class", 30}}}}, {{"path", "data/x.csv"}, {"label_column", "y"}}}},
      {"learners", {"linear", {{"kind", "forest"}, {"params", {{"trees", 5}}}}}},
      {"repeats", 3},
      {"seed", 17},
      {"batch_size", 5},
      {"criteria", {"mes", {{"id", "vm"}, {"condition", {{"type", "consecutive_change"}, {"count", 3}}}}}},
  };
  const auto c = ExperimentConfig::from_json(j, "/base");
  CHECK(c.datasets.size() == 2);
  CHECK(c.datasets[1].path == "/base/data/x.csv");
  CHECK(c.datasets[1].name == "x");
  CHECK(c.learners[1].trees == 5);
  CHECK(c.repeats == 3);
  CHECK(c.base_seed == 17);
  CHECK(c.protocol.batch_size == 5);
  CHECK(c.protocol.reserve == 500);
  CHECK(c.output_dir == "/base/out");
  REQUIRE(c.criteria.size() == 2);
  CHECK(std::get<ConsecutiveChange>(c.criteria[1].condition).count == 3);

  auto bad = j;
  bad["repeat"] = 3;
  CHECK_THROWS_AS(ExperimentConfig::from_json(bad), ConfigError);
  bad = j;
  bad["repeats"] = 0;
  CHECK_THROWS_AS(ExperimentConfig::from_json(bad), ConfigError);
  bad = j;
  bad["datasets"][1]["name"] = "s";
  CHECK_THROWS_AS(ExperimentConfig::from_json(bad), ConfigError);
  bad = j;
  bad["learners"] = {"svm"};
  CHECK_THROWS_AS(ExperimentConfig::from_json(bad), ConfigError);
  bad = j;
  bad.erase("datasets");
  CHECK_THROWS_AS(ExperimentConfig::from_json(bad), ConfigError);
}

TEST_CASE("parallel_for covers every index and rethrows") {
  for (std::size_t threads : {1, 3, 8}) {
    std::vector<int> hit(100, 0);
    parallel_for(hit.size(), threads, [&](std::size_t i) { hit[i] += 1; });
    CHECK(std::all_of(hit.begin(), hit.end(), [](int h) { return h == 1; }));
    CHECK_THROWS_AS(parallel_for(50, threads,
                                 [](std::size_t i) {
                                   if (i == 7) throw DataError("seven");
                                 }),
                    DataError);
  }
}
