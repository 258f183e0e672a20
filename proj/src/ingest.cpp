#include "alstop/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "alstop/error.hpp"
#include "alstop/rng.hpp"

namespace alstop {

using nlohmann::json;

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::optional<double> parse_number(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.emplace_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.emplace_back(trim(cur));
  return out;
}

std::string line_error(std::size_t line, const std::string& what) {
  return "line " + std::to_string(line) + ": " + what;
}

// Dense ids for raw label strings, sorted numerically when all are numbers.
void map_labels(const std::vector<std::string>& raw, Dataset& ds) {
  bool numeric = true;
  for (const auto& r : raw)
    if (!parse_number(r)) {
      numeric = false;
      break;
    }
  ds.labels.resize(raw.size());
  if (numeric) {
    std::map<double, int> ids;
    std::map<double, std::string> text;
    for (const auto& r : raw) {
      const double v = *parse_number(r);
      ids.emplace(v, 0);
      text.emplace(v, r);
    }
    int next = 0;
    for (auto& [v, id] : ids) {
      id = next++;
      ds.class_names.push_back(text[v]);
    }
    for (std::size_t i = 0; i < raw.size(); ++i) ds.labels[i] = ids[*parse_number(raw[i])];
  } else {
    std::map<std::string, int> ids;
    for (const auto& r : raw) ids.emplace(r, 0);
    int next = 0;
    for (auto& [name, id] : ids) {
      id = next++;
      ds.class_names.push_back(name);
    }
    for (std::size_t i = 0; i < raw.size(); ++i) ds.labels[i] = ids[raw[i]];
  }
}

}  // namespace

std::string_view to_string(DatasetFormat f) { return f == DatasetFormat::csv ? "csv" : "svmlight"; }

DatasetFormat dataset_format_from_string(std::string_view name) {
  if (name == "csv") return DatasetFormat::csv;
  if (name == "svmlight" || name == "libsvm") return DatasetFormat::svmlight;
  throw ConfigError("unknown dataset format '" + std::string(name) + "'");
}

Dataset parse_csv(std::istream& in, const std::string& label_column, const std::string& name) {
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++lineno;
    if (!trim(line).empty()) {
      header = split_csv_line(line);
      break;
    }
  }
  if (header.empty()) throw DataError("empty CSV file");

  std::size_t label_idx = header.size() - 1;
  if (!label_column.empty()) {
    const auto it = std::find(header.begin(), header.end(), label_column);
    if (it == header.end()) throw DataError("label column '" + label_column + "' not in CSV header");
    label_idx = static_cast<std::size_t>(it - header.begin());
  }
  const std::size_t cols = header.size() - 1;

  std::vector<double> values;
  std::vector<std::string> raw_labels;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw DataError(line_error(lineno, "expected " + std::to_string(header.size()) + " fields, found " +
                                             std::to_string(fields.size())));
    for (std::size_t c = 0; c < fields.size(); ++c) {
      if (c == label_idx) {
        if (fields[c].empty()) throw DataError(line_error(lineno, "missing label"));
        raw_labels.push_back(fields[c]);
        continue;
      }
      const auto v = parse_number(fields[c]);
      if (!v) throw DataError(line_error(lineno, "non-numeric value '" + fields[c] + "' in column " + header[c]));
      values.push_back(*v);
    }
  }
  if (raw_labels.empty()) throw DataError("CSV file has no data rows");

  Dataset ds;
  ds.name = name;
  ds.features = FeatureMatrix::dense(raw_labels.size(), cols, std::move(values));
  map_labels(raw_labels, ds);
  ds.validate();
  return ds;
}

Dataset parse_svmlight(std::istream& in, const std::string& name) {
  std::vector<std::size_t> row_ptr{0};
  std::vector<std::uint32_t> col_idx;
  std::vector<double> values;
  std::vector<std::string> raw_labels;
  std::size_t cols = 0;

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view body = line;
    if (const auto hash = body.find('#'); hash != std::string_view::npos) body = body.substr(0, hash);
    body = trim(body);
    if (body.empty()) continue;

    std::istringstream tokens{std::string(body)};
    std::string tok;
    tokens >> tok;
    if (tok.find(':') != std::string::npos) throw DataError(line_error(lineno, "missing label"));
    raw_labels.push_back(tok);
    long prev = 0;
    while (tokens >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos) throw DataError(line_error(lineno, "malformed feature '" + tok + "'"));
      if (tok.compare(0, colon, "qid") == 0) continue;
      long idx = 0;
      const auto [p, ec] = std::from_chars(tok.data(), tok.data() + colon, idx);
      if (ec != std::errc() || p != tok.data() + colon || idx < 1)
        throw DataError(line_error(lineno, "bad feature index in '" + tok + "'"));
      if (idx <= prev) throw DataError(line_error(lineno, "feature indices must be strictly increasing"));
      const auto v = parse_number(std::string_view(tok).substr(colon + 1));
      if (!v) throw DataError(line_error(lineno, "bad feature value in '" + tok + "'"));
      prev = idx;
      col_idx.push_back(static_cast<std::uint32_t>(idx - 1));
      values.push_back(*v);
      cols = std::max(cols, static_cast<std::size_t>(idx));
    }
    row_ptr.push_back(col_idx.size());
  }
  if (raw_labels.empty()) throw DataError("empty svmlight file");

  Dataset ds;
  ds.name = name;
  ds.features = FeatureMatrix::sparse(raw_labels.size(), cols, std::move(row_ptr), std::move(col_idx), std::move(values));
  map_labels(raw_labels, ds);
  ds.validate();
  return ds;
}

Dataset load_dataset(const std::string& path, DatasetFormat format, const std::string& label_column,
                     const std::string& name) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset " + path);
  const std::string ds_name = name.empty() ? std::filesystem::path(path).stem().string() : name;
  try {
    return format == DatasetFormat::csv ? parse_csv(in, label_column, ds_name) : parse_svmlight(in, ds_name);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

void SyntheticSpec::validate() const {
  if (num_classes < 2) throw ConfigError("synthetic data needs at least 2 classes");
  if (per_class < 1) throw ConfigError("synthetic per_class must be positive");
  if (dims < 1) throw ConfigError("synthetic dims must be positive");
  if (clusters_per_class < 1) throw ConfigError("synthetic clusters_per_class must be positive");
  if (!(separation >= 0.0) || !std::isfinite(separation)) throw ConfigError("synthetic separation must be >= 0");
}

json SyntheticSpec::to_json() const {
  return {{"num_classes", num_classes}, {"per_class", per_class},
          {"separation", separation},   {"dims", dims},
          {"clusters_per_class", clusters_per_class}, {"seed", seed}};
}

SyntheticSpec SyntheticSpec::from_json(const json& j) {
  SyntheticSpec s;
  s.num_classes = j.value("num_classes", s.num_classes);
  s.per_class = j.value("per_class", s.per_class);
  s.separation = j.value("separation", s.separation);
  s.dims = j.value("dims", s.dims);
  s.clusters_per_class = j.value("clusters_per_class", s.clusters_per_class);
  s.seed = j.value("seed", s.seed);
  s.validate();
  return s;
}

Dataset generate_synthetic(const SyntheticSpec& spec, const std::string& name) {
  spec.validate();
  const std::size_t c = spec.num_classes, d = spec.dims, m = spec.clusters_per_class;

  // centres[k] for class k: list of cluster centres
  std::vector<std::vector<std::vector<double>>> centres(c);
  if (m == 1) {
    const double radius = spec.separation / (2.0 * std::sin(std::numbers::pi / static_cast<double>(c)));
    for (std::size_t k = 0; k < c; ++k) {
      std::vector<double> ctr(d, 0.0);
      const double angle = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(c);
      if (d == 1) {
        ctr[0] = spec.separation * static_cast<double>(k);
      } else {
        ctr[0] = radius * std::cos(angle);
        ctr[1] = radius * std::sin(angle);
      }
      centres[k].push_back(std::move(ctr));
    }
  } else {
    const auto side = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(c * m))));
    std::size_t placed = 0;
    for (std::size_t cell = 0; placed < c * m; ++cell) {
      const std::size_t x = cell % side, y = cell / side;
      const std::size_t k = (x + y) % c;
      if (centres[k].size() >= m) continue;
      std::vector<double> ctr(d, 0.0);
      ctr[0] = spec.separation * static_cast<double>(x);
      if (d > 1) ctr[1] = spec.separation * static_cast<double>(y);
      centres[k].push_back(std::move(ctr));
      ++placed;
    }
  }

  Rng rng(spec.seed);
  const std::size_t n = c * spec.per_class;
  std::vector<double> values;
  values.reserve(n * d);
  Dataset ds;
  ds.name = name;
  for (std::size_t k = 0; k < c; ++k)
    for (std::size_t i = 0; i < spec.per_class; ++i) {
      const auto& ctr = centres[k][i % m];
      for (std::size_t j = 0; j < d; ++j) values.push_back(ctr[j] + rng.normal());
      ds.labels.push_back(static_cast<int>(k));
    }
  for (std::size_t k = 0; k < c; ++k) ds.class_names.push_back(std::to_string(k));
  ds.features = FeatureMatrix::dense(n, d, std::move(values));
  ds.validate();
  return ds;
}

Dataset subsample_rows(const Dataset& dataset, std::size_t max_rows, std::uint64_t seed) {
  if (max_rows == 0) throw ConfigError("max_rows must be positive");
  if (max_rows >= dataset.size()) return dataset;
  std::vector<std::size_t> all(dataset.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  Rng rng(seed);
  auto keep = rng.sample(std::span<const std::size_t>(all), max_rows);
  std::sort(keep.begin(), keep.end());
  Dataset out;
  out.name = dataset.name;
  out.class_names = dataset.class_names;
  out.features = dataset.features.select(keep);
  for (std::size_t r : keep) out.labels.push_back(dataset.labels[r]);
  out.validate();
  return out;
}

json DatasetSource::to_json() const {
  json j = {{"name", name}};
  if (synthetic) {
    j["synthetic"] = synthetic->to_json();
  } else {
    j["path"] = path;
    j["format"] = to_string(format);
    if (!label_column.empty()) j["label_column"] = label_column;
  }
  if (max_rows) {
    j["max_rows"] = *max_rows;
    j["row_seed"] = row_seed;
  }
  return j;
}

DatasetSource DatasetSource::from_json(const json& j, const std::string& base_dir) {
  DatasetSource s;
  if (j.contains("synthetic")) {
    s.synthetic = SyntheticSpec::from_json(j.at("synthetic"));
    s.name = j.value("name", std::string("synthetic"));
  } else {
    if (!j.contains("path")) throw ConfigError("dataset entry needs 'path' or 'synthetic'");
    std::filesystem::path p = j.at("path").get<std::string>();
    if (p.is_relative() && !base_dir.empty()) p = std::filesystem::path(base_dir) / p;
    s.path = p.lexically_normal().string();
    s.format = dataset_format_from_string(j.value("format", std::string("csv")));
    s.label_column = j.value("label_column", std::string());
    s.name = j.value("name", std::filesystem::path(s.path).stem().string());
  }
  if (j.contains("max_rows")) s.max_rows = j.at("max_rows").get<std::size_t>();
  s.row_seed = j.value("row_seed", std::uint64_t{0});
  if (s.name.empty()) throw ConfigError("dataset name must be nonempty");
  return s;
}

Dataset DatasetSource::load() const {
  Dataset ds = synthetic ? generate_synthetic(*synthetic, name) : load_dataset(path, format, label_column, name);
  if (max_rows) ds = subsample_rows(ds, *max_rows, row_seed);
  return ds;
}

}  // namespace alstop
