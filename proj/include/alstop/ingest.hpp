#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "alstop/dataset.hpp"

namespace alstop {

enum class DatasetFormat { csv, svmlight };
std::string_view to_string(DatasetFormat f);
DatasetFormat dataset_format_from_string(std::string_view name);

// CSV needs a header row; the label column defaults to the last one. Every
// other column must be numeric. Labels are mapped to dense ids in sorted
// order (numerically when all labels parse as numbers).
Dataset parse_csv(std::istream& in, const std::string& label_column = "", const std::string& name = "csv");
// "<label> [qid:<n>] <index>:<value> ..." with 1-based indices; '#' starts a comment.
Dataset parse_svmlight(std::istream& in, const std::string& name = "svmlight");
Dataset load_dataset(const std::string& path, DatasetFormat format, const std::string& label_column = "",
                     const std::string& name = "");

// Gaussian blobs. Class c (of C) is centred on a circle of radius
// separation / (2 sin(pi / C)), so adjacent centres are `separation` apart in
// units of the unit noise. With clusters_per_class > 1 the classes alternate
// over a checkerboard of cluster centres spaced `separation` apart.
struct SyntheticSpec {
  std::size_t num_classes = 2;
  std::size_t per_class = 100;
  double separation = 4.0;
  std::size_t dims = 2;
  std::size_t clusters_per_class = 1;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static SyntheticSpec from_json(const nlohmann::json& j);
};

Dataset generate_synthetic(const SyntheticSpec& spec, const std::string& name = "synthetic");

// Seeded uniform row subsample, keeping the original row order.
Dataset subsample_rows(const Dataset& dataset, std::size_t max_rows, std::uint64_t seed);

// Where a dataset comes from. JSON forms:
//   {"name": ..., "path": ..., "format": "csv"|"svmlight", "label_column": ..., "max_rows": ..., "row_seed": ...}
//   {"name": ..., "synthetic": {num_classes, per_class, separation, dims, clusters_per_class, seed}}
// Relative paths resolve against `base_dir`.
struct DatasetSource {
  std::string name;
  std::string path;
  DatasetFormat format = DatasetFormat::csv;
  std::string label_column;
  std::optional<std::size_t> max_rows;
  std::uint64_t row_seed = 0;
  std::optional<SyntheticSpec> synthetic;

  nlohmann::json to_json() const;
  static DatasetSource from_json(const nlohmann::json& j, const std::string& base_dir = "");
  Dataset load() const;
};

}  // namespace alstop
