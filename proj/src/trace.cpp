#include "alstop/trace.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "alstop/error.hpp"
#include "alstop/rng.hpp"

namespace alstop {

using nlohmann::json;

namespace {

constexpr const char* kFormatName = "alstop-trace";

std::string checksum_hex(const json& payload) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(payload.dump())));
  return buf;
}

std::string seal(json payload) {
  payload["checksum"] = checksum_hex(payload);
  return payload.dump() + "\n";
}

// Strips and verifies the checksum; returns false on mismatch.
bool unseal(json& line) {
  if (!line.is_object() || !line.contains("checksum") || !line["checksum"].is_string()) return false;
  const std::string expected = line["checksum"].get<std::string>();
  line.erase("checksum");
  return checksum_hex(line) == expected;
}

json config_to_json(const TraceConfig& c) {
  return {{"batch_size", c.batch_size},         {"subsample_size", c.subsample_size},
          {"reserve", c.reserve},               {"initial_size", c.initial_size},
          {"test_fraction", c.test_fraction},   {"stopset_size", c.stopset_size}};
}

TraceConfig config_from_json(const json& j) {
  TraceConfig c;
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.subsample_size = j.at("subsample_size").get<std::size_t>();
  c.reserve = j.at("reserve").get<std::size_t>();
  c.initial_size = j.at("initial_size").get<std::size_t>();
  c.test_fraction = j.at("test_fraction").get<double>();
  c.stopset_size = j.at("stopset_size").get<std::size_t>();
  return c;
}

json record_to_json(const IterationRecord& r) {
  json selected = json::array();
  for (const auto& s : r.selected) selected.push_back({{"row", s.row}, {"label", s.label}, {"posterior", s.posterior}});
  json posteriors = json::array();
  for (std::size_t i = 0; i < r.subsample_posteriors.rows(); ++i) {
    auto row = r.subsample_posteriors.row(i);
    posteriors.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return {{"type", "record"},
          {"round", r.round},
          {"labels_used", r.labels_used},
          {"selected", std::move(selected)},
          {"subsample", r.subsample},
          {"subsample_posteriors", std::move(posteriors)},
          {"subsample_predictions", r.subsample_predictions},
          {"stopset_predictions", r.stopset_predictions},
          {"test_accuracy", r.test_accuracy}};
}

IterationRecord record_from_json(const json& j, std::size_t num_classes) {
  IterationRecord r;
  r.round = j.at("round").get<std::size_t>();
  r.labels_used = j.at("labels_used").get<std::size_t>();
  for (const auto& s : j.at("selected"))
    r.selected.push_back({s.at("row").get<std::size_t>(), s.at("label").get<int>(),
                          s.at("posterior").get<std::vector<double>>()});
  r.subsample = j.at("subsample").get<std::vector<std::size_t>>();
  const auto& post = j.at("subsample_posteriors");
  std::vector<double> flat;
  flat.reserve(post.size() * num_classes);
  for (const auto& row : post) {
    if (row.size() != num_classes) throw DataError("posterior row has the wrong number of classes");
    for (const auto& p : row) flat.push_back(p.get<double>());
  }
  r.subsample_posteriors = ProbabilityMatrix(post.size(), num_classes, std::move(flat));
  r.subsample_predictions = j.at("subsample_predictions").get<std::vector<int>>();
  r.stopset_predictions = j.at("stopset_predictions").get<std::vector<int>>();
  r.test_accuracy = j.at("test_accuracy").get<double>();
  return r;
}

void check_posterior(std::span<const double> p, std::size_t round) {
  double s = 0.0;
  for (double v : p) {
    if (!(v >= 0.0)) throw DataError("negative posterior in round " + std::to_string(round));
    s += v;
  }
  if (std::abs(s - 1.0) > 1e-9) throw DataError("posterior does not sum to 1 in round " + std::to_string(round));
}

}  // namespace

void validate_trace(const RunTrace& trace) {
  const auto& recs = trace.records;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const auto& r = recs[i];
    if (r.round != i) throw DataError("trace records are not consecutive at index " + std::to_string(i));
    if (i > 0 && r.labels_used != recs[i - 1].labels_used + recs[i - 1].selected.size())
      throw DataError("labels_used does not grow by the queried batch at round " + std::to_string(i));
    if (i + 1 < recs.size() && r.selected.size() != trace.config.batch_size)
      throw DataError("short batch before the final round at round " + std::to_string(i));
    if (r.subsample_posteriors.rows() != r.subsample.size() || r.subsample_predictions.size() != r.subsample.size())
      throw DataError("subsample arrays disagree in length at round " + std::to_string(i));
    if (r.subsample_posteriors.cols() != trace.num_classes)
      throw DataError("posterior width differs from the class count at round " + std::to_string(i));
    if (r.stopset_predictions.size() != trace.stopset.size())
      throw DataError("stop-set predictions have the wrong length at round " + std::to_string(i));
    if (!(r.test_accuracy >= 0.0 && r.test_accuracy <= 1.0))
      throw DataError("test accuracy outside [0, 1] at round " + std::to_string(i));
    for (std::size_t k = 0; k < r.subsample_posteriors.rows(); ++k) check_posterior(r.subsample_posteriors.row(k), i);
    for (const auto& s : r.selected) {
      if (s.posterior.size() != trace.num_classes)
        throw DataError("selected posterior has the wrong width at round " + std::to_string(i));
      check_posterior(s.posterior, i);
    }
  }
}

std::string encode_trace_header(const RunTrace& t) {
  json h = {{"type", "header"},          {"format", kFormatName},     {"version", kTraceFormatVersion},
            {"dataset", t.dataset},      {"model", t.model},          {"learner", t.learner},
            {"source", t.source},        {"repeat", t.repeat},        {"seed", t.seed},
            {"num_classes", t.num_classes}, {"config", config_to_json(t.config)}, {"stopset", t.stopset}};
  return seal(std::move(h));
}

std::string encode_trace_record(const IterationRecord& record) { return seal(record_to_json(record)); }

std::string serialize_trace(const RunTrace& trace) {
  std::string out = encode_trace_header(trace);
  for (const auto& r : trace.records) out += encode_trace_record(r);
  if (trace.abort_reason) out += seal({{"type", "abort"}, {"reason", *trace.abort_reason}});
  return out;
}

RunTrace deserialize_trace(std::string_view bytes) {
  RunTrace t;
  bool have_header = false;
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    std::size_t end = bytes.find('\n', pos);
    const bool terminated = end != std::string_view::npos;
    if (!terminated) end = bytes.size();
    std::string_view text = bytes.substr(pos, end - pos);
    pos = end + 1;
    if (text.empty()) continue;

    const auto expected_round = static_cast<long>(t.records.size());
    json line = json::parse(text, nullptr, false);
    if (line.is_discarded()) {
      if (!have_header) throw TraceFormatError("trace header is not valid JSON");
      throw TraceFormatError(terminated ? "malformed trace record" : "truncated trace record", expected_round);
    }
    if (!unseal(line)) {
      if (!have_header) throw TraceFormatError("trace header checksum mismatch");
      throw TraceFormatError("trace record checksum mismatch", expected_round);
    }

    const std::string type = line.value("type", "");
    if (!have_header) {
      if (type != "header" || line.value("format", "") != kFormatName)
        throw TraceFormatError("missing trace header");
      const int version = line.value("version", -1);
      if (version != kTraceFormatVersion)
        throw TraceFormatError("unsupported trace version " + std::to_string(version) + " (expected " +
                               std::to_string(kTraceFormatVersion) + ")");
      try {
        t.dataset = line.at("dataset").get<std::string>();
        t.model = line.at("model").get<std::string>();
        t.learner = line.at("learner");
        t.source = line.at("source");
        t.repeat = line.at("repeat").get<std::size_t>();
        t.seed = line.at("seed").get<std::uint64_t>();
        t.num_classes = line.at("num_classes").get<std::size_t>();
        t.config = config_from_json(line.at("config"));
        t.stopset = line.at("stopset").get<std::vector<std::size_t>>();
      } catch (const json::exception& e) {
        throw TraceFormatError(std::string("bad trace header: ") + e.what());
      }
      have_header = true;
      continue;
    }
    if (t.aborted()) throw TraceFormatError("content after abort marker", expected_round);
    if (type == "abort") {
      t.abort_reason = line.value("reason", "");
      continue;
    }
    if (type != "record") throw TraceFormatError("unknown line type '" + type + "'", expected_round);
    try {
      t.records.push_back(record_from_json(line, t.num_classes));
    } catch (const json::exception& e) {
      throw TraceFormatError(std::string("bad trace record: ") + e.what(), expected_round);
    } catch (const DataError& e) {
      throw TraceFormatError(e.what(), expected_round);
    }
    if (t.records.back().round != static_cast<std::size_t>(expected_round))
      throw TraceFormatError("record out of order", expected_round);
  }
  if (!have_header) throw TraceFormatError("empty trace");
  return t;
}

RunTrace read_trace_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open trace file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_trace(ss.str());
}

TraceWriter::TraceWriter(const std::string& path) : out_(path, std::ios::binary | std::ios::trunc), path_(path) {
  if (!out_) throw DataError("cannot open trace file for writing: " + path);
}

void TraceWriter::write_header(const RunTrace& trace) {
  out_ << encode_trace_header(trace);
  out_.flush();
}

void TraceWriter::append(const IterationRecord& record) {
  out_ << encode_trace_record(record);
  out_.flush();
}

void TraceWriter::mark_aborted(const std::string& reason) {
  out_ << seal({{"type", "abort"}, {"reason", reason}});
  out_.flush();
}

}  // namespace alstop
