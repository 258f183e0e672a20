// Command-line front end: run, evaluate, cost, rank, potential, report.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "alstop/cost.hpp"
#include "alstop/criteria.hpp"
#include "alstop/error.hpp"
#include "alstop/harness.hpp"
#include "alstop/stats.hpp"
#include "alstop/svg.hpp"
#include "alstop/trace.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace alstop;

namespace {

constexpr int kOk = 0, kUsage = 1, kData = 2, kRunFailure = 3;

struct RunFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

std::string trace_file_name(const std::string& dataset, const std::string& model, std::size_t repeat) {
  return dataset + "__" + model + "__" + std::to_string(repeat) + ".trace.ndjson";
}

// ---- run -------------------------------------------------------------------

struct RunArgs {
  std::string config;
  std::string out;
  int threads = -1;
};

int cmd_run(const RunArgs& a) {
  ExperimentConfig cfg = ExperimentConfig::load(a.config);
  if (!a.out.empty()) cfg.output_dir = a.out;
  if (a.threads >= 0) cfg.threads = static_cast<std::size_t>(a.threads);

  std::vector<Dataset> datasets;
  for (const auto& src : cfg.datasets) {
    datasets.push_back(src.load());
    check_feasible(cfg.protocol, datasets.back().size());
  }

  struct Job {
    std::size_t dataset, learner, repeat;
  };
  std::vector<Job> jobs;
  for (std::size_t d = 0; d < datasets.size(); ++d)
    for (std::size_t l = 0; l < cfg.learners.size(); ++l)
      for (std::size_t r = 0; r < cfg.repeats; ++r) jobs.push_back({d, l, r});

  const fs::path trace_dir = fs::path(cfg.output_dir) / "traces";
  fs::create_directories(trace_dir);
  std::vector<json> entries(jobs.size());
  parallel_for(jobs.size(), cfg.threads, [&](std::size_t i) {
    const Job& job = jobs[i];
    const Dataset& ds = datasets[job.dataset];
    const LearnerSpec& learner = cfg.learners[job.learner];
    const std::uint64_t seed = derive_run_seed(cfg.base_seed, ds.name, job.repeat);
    const std::string name = trace_file_name(ds.name, std::string(to_string(learner.kind)), job.repeat);
    TraceWriter writer((trace_dir / name).string());
    RunOptions opts{cfg.datasets[job.dataset].to_json(), job.repeat, &writer};
    const RunTrace t = run_al(ds, learner, cfg.protocol, seed, opts);
    json e = {{"dataset", ds.name},  {"model", t.model},  {"repeat", job.repeat},
              {"seed", seed},        {"trace", "traces/" + name}, {"records", t.records.size()},
              {"aborted", t.aborted()}};
    if (t.aborted()) e["abort_reason"] = *t.abort_reason;
    entries[i] = std::move(e);
  });

  json criteria = json::array();
  for (const auto& c : cfg.criteria) criteria.push_back(c.to_json());
  json manifest = {{"runs", entries}, {"criteria", criteria}, {"repeats", cfg.repeats}, {"seed", cfg.base_seed}};
  write_file(fs::path(cfg.output_dir) / "manifest.json", manifest.dump(2) + "\n");

  std::size_t aborted = 0;
  for (const auto& e : entries)
    if (e["aborted"].get<bool>()) {
      ++aborted;
      std::cerr << "warning: aborted run " << e["trace"].get<std::string>() << ": "
                << e["abort_reason"].get<std::string>() << "\n";
    }
  std::cout << "wrote " << entries.size() << " traces to " << trace_dir.string() << "\n";
  if (aborted > 0) throw RunFailure(std::to_string(aborted) + " run(s) aborted");
  return kOk;
}

// ---- evaluate --------------------------------------------------------------

struct EvaluateArgs {
  std::string traces;
  std::string out;
  std::string criteria;
  std::size_t threads = 1;
};

std::vector<CriterionSpec> load_criteria(const std::string& path, const fs::path& trace_dir) {
  json arr;
  if (!path.empty()) {
    arr = json::parse(read_file(path), nullptr, false);
    if (arr.is_discarded()) throw ConfigError("criteria file " + path + " is not valid JSON");
  } else {
    const fs::path manifest = trace_dir.parent_path() / "manifest.json";
    if (!fs::exists(manifest)) return CriterionSpec::default_suite();
    const json m = json::parse(read_file(manifest.string()), nullptr, false);
    if (m.is_discarded() || !m.contains("criteria")) return CriterionSpec::default_suite();
    arr = m["criteria"];
  }
  std::vector<CriterionSpec> out;
  for (const auto& c : arr)
    out.push_back(c.is_string() ? CriterionSpec::defaults(criterion_id_from_string(c.get<std::string>()))
                                : CriterionSpec::from_json(c));
  return out;
}

int cmd_evaluate(const EvaluateArgs& a) {
  const fs::path dir = fs::absolute(a.traces).lexically_normal();
  if (!fs::is_directory(dir)) throw DataError("trace directory " + a.traces + " does not exist");
  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().string().ends_with(".trace.ndjson")) files.push_back(e.path().string());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw DataError("no .trace.ndjson files in " + a.traces);

  const auto criteria = load_criteria(a.criteria, dir);
  std::vector<RunTrace> traces;
  for (const auto& f : files) traces.push_back(read_trace_file(f));

  const bool needs_data = std::any_of(criteria.begin(), criteria.end(),
                                      [](const CriterionSpec& c) { return c.id == CriterionId::ssncut; });
  std::map<std::string, std::unique_ptr<Dataset>> owned;
  std::map<std::string, const Dataset*> lookup;
  if (needs_data)
    for (const auto& t : traces) {
      if (lookup.count(t.dataset) || !is_applicable(CriterionId::ssncut, t) || t.source.is_null()) continue;
      auto ds = std::make_unique<Dataset>(DatasetSource::from_json(t.source).load());
      lookup[t.dataset] = ds.get();
      owned[t.dataset] = std::move(ds);
    }

  const Evaluation ev = evaluate_all(traces, criteria, lookup, a.threads);
  const fs::path out = a.out;
  write_file(out / "decisions.csv", decisions_to_csv(ev.rows));
  write_file(out / "summary.json", ev.summary_json().dump(2) + "\n");
  write_file(out / "criteria.json", criteria_catalogue(criteria).dump(2) + "\n");

  std::size_t errors = 0;
  for (const auto& r : ev.rows)
    if (r.status == "error") ++errors;
  std::cout << "evaluated " << traces.size() << " traces x " << criteria.size() << " criteria";
  if (errors) std::cout << " (" << errors << " errors)";
  std::cout << "\n";
  for (const auto& s : ev.stop_rates) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "  %-8s %-26s stops %zu/%zu\n", s.model.c_str(), s.criterion.c_str(), s.stops,
                  s.runs);
    std::cout << buf;
  }
  return kOk;
}

// ---- shared cost options ---------------------------------------------------

struct CostArgs {
  std::string scenario;
  std::optional<double> label_cost, misclass_cost, lifetime;
  std::string decisions;
  std::string model;
  std::string treatment = "penalize";
};

void add_cost_options(CLI::App* app, CostArgs& a) {
  app->add_option("--scenario", a.scenario, "Built-in scenario: mammogram or marketing");
  app->add_option("--label-cost", a.label_cost, "Cost per label (l)");
  app->add_option("--misclass-cost", a.misclass_cost, "Cost per misclassification (m)");
  app->add_option("--lifetime", a.lifetime, "Predictions over the model's lifetime (n)");
  app->add_option("--treatment", a.treatment, "penalize, include or exclude")
      ->check(CLI::IsMember({"penalize", "include", "exclude"}));
  app->add_option("--model", a.model, "Model whose decisions to use (default: first in file)");
}

std::optional<CostParams> cost_params(const CostArgs& a) {
  if (a.scenario.empty() && !a.label_cost && !a.misclass_cost && !a.lifetime) return std::nullopt;
  CostParams p = a.scenario.empty() ? CostParams{} : scenario_by_name(a.scenario).params;
  if (a.label_cost) p.label_cost = *a.label_cost;
  if (a.misclass_cost) p.misclassification_cost = *a.misclass_cost;
  if (a.lifetime) p.lifetime = *a.lifetime;
  p.validate();
  return p;
}

std::vector<DecisionRow> load_decisions(const std::string& path) { return decisions_from_csv(read_file(path)); }

std::string pick_model(const std::vector<DecisionRow>& rows, const std::string& wanted) {
  if (!wanted.empty()) return wanted;
  for (const auto& r : rows)
    if (r.status == "ok") return r.model;
  throw DataError("decisions contain no evaluated rows");
}

std::vector<CriterionOutcome> load_outcomes(const CostArgs& a) {
  if (a.decisions.empty()) throw ConfigError("--decisions is required");
  const auto rows = load_decisions(a.decisions);
  const auto outcomes = outcomes_from_rows(rows, pick_model(rows, a.model));
  if (outcomes.empty()) throw DataError("no decisions for the selected model");
  return outcomes;
}

// ---- cost ------------------------------------------------------------------

struct CostCmdArgs {
  CostArgs cost;
  std::optional<double> accuracy, labels;
  std::string out_csv, out_json, region_prefix;
  double nm_min = 1e3, nm_max = 1e9, l_min = 1e-2, l_max = 1e4, alpha = 0.05;
  std::size_t steps = 40;
};

int cmd_cost(const CostCmdArgs& a) {
  if (a.accuracy || a.labels) {
    if (!a.accuracy || !a.labels) throw ConfigError("--accuracy and --labels go together");
    const auto p = cost_params(a.cost);
    if (!p) throw ConfigError("give --scenario or cost parameters");
    std::printf("%.2f\n", cost(*a.accuracy, *a.labels, *p));
    return kOk;
  }

  const auto outcomes = load_outcomes(a.cost);
  const Treatment treatment = treatment_from_string(a.cost.treatment);
  const auto treated = apply_treatment(outcomes, treatment);
  for (const auto& w : treated.warnings) std::cerr << "warning: " << w << "\n";

  if (const auto p = cost_params(a.cost)) {
    const auto ranking = scenario_rank(treated.outcomes, *p);
    std::cout << rankings_to_csv(ranking);
    if (!a.out_csv.empty()) write_file(a.out_csv, rankings_to_csv(ranking));
    if (!a.out_json.empty()) write_file(a.out_json, rankings_to_json(ranking).dump(2) + "\n");
  }
  if (!a.region_prefix.empty()) {
    const auto nm = log_axis(a.nm_min, a.nm_max, a.steps);
    const auto l = log_axis(a.l_min, a.l_max, a.steps);
    const auto grid = region_map(outcomes, nm, l, treatment, a.alpha);
    write_file(a.region_prefix + ".csv", grid.to_csv());
    write_file(a.region_prefix + ".json", grid.to_json().dump(2) + "\n");
    write_file(a.region_prefix + ".svg",
               render_region_map(grid, "cost-optimal criteria (" + std::string(to_string(treatment)) + ")"));
    std::cout << "wrote region map " << a.region_prefix << ".{csv,json,svg}\n";
  }
  if (!cost_params(a.cost) && a.region_prefix.empty())
    throw ConfigError("give cost parameters for a ranking or --region-map for a grid");
  return kOk;
}

// ---- rank ------------------------------------------------------------------

struct RankArgs {
  CostArgs cost;
  std::string out_json, out_svg;
};

int cmd_rank(const RankArgs& a) {
  const auto p = cost_params(a.cost);
  if (!p) throw ConfigError("give --scenario or cost parameters");
  const auto treated = apply_treatment(load_outcomes(a.cost), treatment_from_string(a.cost.treatment));
  for (const auto& w : treated.warnings) std::cerr << "warning: " << w << "\n";
  const RankMatrix m = cost_rank_matrix(treated.outcomes, *p);
  const CdDiagram d = cd_diagram_data(m);
  std::printf("friedman chi2 = %.4f, p = %.4g, N = %zu, CD = %.4f\n", d.friedman_statistic, d.friedman_p, d.problems,
              d.critical_difference);
  for (std::size_t i = 0; i < d.names.size(); ++i) std::printf("  %-26s %.3f\n", d.names[i].c_str(), d.mean_ranks[i]);
  if (!a.out_json.empty()) write_file(a.out_json, d.to_json().dump(2) + "\n");
  if (!a.out_svg.empty()) write_file(a.out_svg, render_cd_diagram(d, "mean rank by cost"));
  return kOk;
}

// ---- potential -------------------------------------------------------------

struct PotentialArgs {
  std::string config;
  std::size_t repeats = 1;
};

int cmd_potential(const PotentialArgs& a) {
  const ExperimentConfig cfg = ExperimentConfig::load(a.config);
  std::cout << "dataset,model,potential\n";
  for (const auto& src : cfg.datasets) {
    const Dataset ds = src.load();
    for (const auto& learner : cfg.learners) {
      double s = 0.0;
      for (std::size_t r = 0; r < a.repeats; ++r)
        s += al_potential(ds, learner, derive_run_seed(cfg.base_seed, ds.name, r), cfg.protocol.test_fraction,
                          cfg.protocol.initial_size);
      std::printf("%s,%s,%.4f\n", ds.name.c_str(), std::string(to_string(learner.kind)).c_str(),
                  s / static_cast<double>(a.repeats));
    }
  }
  return kOk;
}

// ---- report ----------------------------------------------------------------

struct ReportArgs {
  std::string decisions;
  std::string out;
  std::size_t steps = 40;
};

int cmd_report(const ReportArgs& a) {
  const auto rows = load_decisions(a.decisions);
  std::vector<std::string> models;
  for (const auto& r : rows)
    if (r.status == "ok" && std::find(models.begin(), models.end(), r.model) == models.end()) models.push_back(r.model);
  if (models.empty()) throw DataError("decisions contain no evaluated rows");
  const fs::path out = a.out;

  std::ostringstream corr;
  corr << "model,criterion,datasets,mean_r,se\n";
  for (const auto& c : correlation_summary(rows))
    corr << c.model << ',' << c.criterion << ',' << c.datasets << ',' << c.mean << ',' << c.se << '\n';
  write_file(out / "correlation.csv", corr.str());

  std::ostringstream stops;
  stops << "model,criterion,runs,stops,rate\n";
  for (const auto& s : stop_rates(rows))
    stops << s.model << ',' << s.criterion << ',' << s.runs << ',' << s.stops << ',' << s.rate() << '\n';
  write_file(out / "stops.csv", stops.str());

  const auto nm = log_axis(1e3, 1e9, a.steps);
  const auto l = log_axis(1e-2, 1e4, a.steps);
  for (const auto& model : models) {
    const auto outcomes = outcomes_from_rows(rows, model);
    const auto treated = apply_treatment(outcomes, Treatment::penalize);
    std::vector<ParetoPoint> points;
    for (const auto& c : treated.outcomes) points.push_back({c.mean_labels(), c.mean_accuracy(), c.criterion});
    std::ostringstream pc;
    pc << "criterion,mean_labels,mean_accuracy,on_frontier\n";
    const auto frontier = pareto_frontier(points);
    for (const auto& p : points)
      pc << p.name << ',' << p.labels << ',' << p.accuracy << ','
         << (std::find(frontier.begin(), frontier.end(), p) != frontier.end() ? 1 : 0) << '\n';
    write_file(out / ("pareto_" + model + ".csv"), pc.str());
    write_file(out / ("pareto_" + model + ".svg"), render_pareto(points, "labels vs accuracy (" + model + ")"));

    for (Treatment t : {Treatment::penalize, Treatment::include, Treatment::exclude}) {
      const std::string stem = "regions_" + model + "_" + std::string(to_string(t));
      try {
        const auto grid = region_map(outcomes, nm, l, t);
        write_file(out / (stem + ".csv"), grid.to_csv());
        write_file(out / (stem + ".json"), grid.to_json().dump(2) + "\n");
        write_file(out / (stem + ".svg"), render_region_map(grid, model + ", " + std::string(to_string(t))));
      } catch (const DataError& e) {
        std::cerr << "warning: no region map for " << stem << ": " << e.what() << "\n";
      }
    }
  }
  std::cout << "wrote report to " << out.string() << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Active-learning stopping criteria: run experiments, evaluate criteria, analyse costs."};
  app.require_subcommand(1);

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Execute the experiments in a config file and write traces");
  run->add_option("--config", run_args.config, "Experiment config (JSON)")->required();
  run->add_option("--out", run_args.out, "Output directory (overrides the config)");
  run->add_option("--threads", run_args.threads, "Worker threads (0 = all cores)");

  EvaluateArgs eval_args;
  auto* eval = app.add_subcommand("evaluate", "Evaluate stopping criteria over a trace directory");
  eval->add_option("--traces", eval_args.traces, "Directory of .trace.ndjson files")->required();
  eval->add_option("--out", eval_args.out, "Output directory")->required();
  eval->add_option("--criteria", eval_args.criteria, "Criteria JSON array (default: manifest or full suite)");
  eval->add_option("--threads", eval_args.threads, "Worker threads (0 = all cores)");

  CostCmdArgs cost_args;
  auto* costc = app.add_subcommand("cost", "Cost of one (accuracy, labels) pair, scenario rankings, region maps");
  add_cost_options(costc, cost_args.cost);
  costc->add_option("--accuracy", cost_args.accuracy, "Accuracy a for a single evaluation");
  costc->add_option("--labels", cost_args.labels, "Labels j for a single evaluation");
  costc->add_option("--decisions", cost_args.cost.decisions, "decisions.csv from evaluate");
  costc->add_option("--out", cost_args.out_csv, "Write the ranking as CSV");
  costc->add_option("--json", cost_args.out_json, "Write the ranking as JSON");
  costc->add_option("--region-map", cost_args.region_prefix, "Write a region map to PREFIX.{csv,json,svg}");
  costc->add_option("--nm-min", cost_args.nm_min);
  costc->add_option("--nm-max", cost_args.nm_max);
  costc->add_option("--l-min", cost_args.l_min);
  costc->add_option("--l-max", cost_args.l_max);
  costc->add_option("--steps", cost_args.steps, "Grid points per axis");
  costc->add_option("--alpha", cost_args.alpha, "Significance level for indeterminate cells");

  RankArgs rank_args;
  auto* rank = app.add_subcommand("rank", "Friedman/Nemenyi critical-difference data over per-run costs");
  add_cost_options(rank, rank_args.cost);
  rank->add_option("--decisions", rank_args.cost.decisions, "decisions.csv from evaluate")->required();
  rank->add_option("--out", rank_args.out_json, "Write CD data as JSON");
  rank->add_option("--svg", rank_args.out_svg, "Write a CD diagram");

  PotentialArgs pot_args;
  auto* pot = app.add_subcommand("potential", "AL potential per dataset and learner");
  pot->add_option("--config", pot_args.config, "Experiment config (JSON)")->required();
  pot->add_option("--repeats", pot_args.repeats, "Splits to average over");

  ReportArgs report_args;
  auto* report = app.add_subcommand("report", "Pareto, region-map, stop and correlation exports");
  report->add_option("--decisions", report_args.decisions, "decisions.csv from evaluate")->required();
  report->add_option("--out", report_args.out, "Output directory")->required();
  report->add_option("--steps", report_args.steps, "Grid points per axis");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*run) return cmd_run(run_args);
    if (*eval) return cmd_evaluate(eval_args);
    if (*costc) return cmd_cost(cost_args);
    if (*rank) return cmd_rank(rank_args);
    if (*pot) return cmd_potential(pot_args);
    if (*report) return cmd_report(report_args);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const InapplicableCriterion& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRunFailure;
  }
  return kUsage;
}
