#pragma once

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "alstop/dataset.hpp"

namespace alstop {

inline constexpr int kTraceFormatVersion = 1;

// Protocol parameters captured in every trace header.
struct TraceConfig {
  std::size_t batch_size = 10;
  std::size_t subsample_size = 1000;
  std::size_t reserve = 500;
  std::size_t initial_size = 10;
  double test_fraction = 0.5;
  std::size_t stopset_size = 1000;

  bool operator==(const TraceConfig&) const = default;
};

// One queried instance: its row, the oracle's label and the posterior the
// classifier of that round assigned it before being retrained.
struct SelectedInstance {
  std::size_t row = 0;
  int label = 0;
  std::vector<double> posterior;

  bool operator==(const SelectedInstance&) const = default;
};

// Snapshot of round t: classifier C_t trained on labels_used labels, its
// outputs on the evaluation subsample, stop set and test set, and the batch
// it then selected for labeling.
struct IterationRecord {
  std::size_t round = 0;
  std::size_t labels_used = 0;
  std::vector<SelectedInstance> selected;
  std::vector<std::size_t> subsample;  // sorted row ids
  ProbabilityMatrix subsample_posteriors;
  std::vector<int> subsample_predictions;
  std::vector<int> stopset_predictions;
  double test_accuracy = 0.0;

  bool operator==(const IterationRecord&) const = default;
};

struct RunTrace {
  std::string dataset;
  std::string model;          // learner kind, e.g. "linear"
  nlohmann::json learner;     // learner spec snapshot
  nlohmann::json source;      // how to rebuild the dataset (path or generator spec)
  std::size_t repeat = 0;
  std::uint64_t seed = 0;     // per-run seed all split/query randomness derives from
  std::size_t num_classes = 0;
  TraceConfig config;
  std::vector<std::size_t> stopset;  // sorted row ids
  std::vector<IterationRecord> records;
  std::optional<std::string> abort_reason;

  bool aborted() const noexcept { return abort_reason.has_value(); }
  bool operator==(const RunTrace&) const = default;
};

// Throws DataError when a trace breaks the record invariants: rounds ordered
// without gaps, labels growing by the batch size, posteriors normalized.
void validate_trace(const RunTrace& trace);

// Newline-delimited JSON: one header object, one object per record, and an
// optional abort marker. Each line carries an FNV-1a checksum of its payload.
std::string serialize_trace(const RunTrace& trace);
RunTrace deserialize_trace(std::string_view bytes);
RunTrace read_trace_file(const std::string& path);

std::string encode_trace_header(const RunTrace& trace);
std::string encode_trace_record(const IterationRecord& record);

// Appends a trace to a file record by record, flushing after each line.
class TraceWriter {
 public:
  explicit TraceWriter(const std::string& path);
  void write_header(const RunTrace& trace);
  void append(const IterationRecord& record);
  void mark_aborted(const std::string& reason);

 private:
  std::ofstream out_;
  std::string path_;
};

}  // namespace alstop
