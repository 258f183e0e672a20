#include "alstop/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "alstop/error.hpp"
#include "alstop/rng.hpp"

namespace alstop {

FeatureMatrix FeatureMatrix::dense(std::size_t rows, std::size_t cols, std::vector<double> values) {
  if (values.size() != rows * cols) throw DataError("dense matrix: value count does not match shape");
  FeatureMatrix m;
  m.rows_ = rows;
  m.cols_ = cols;
  m.sparse_ = false;
  m.values_ = std::move(values);
  return m;
}

FeatureMatrix FeatureMatrix::sparse(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_ptr,
                                    std::vector<std::uint32_t> col_idx, std::vector<double> values) {
  if (row_ptr.size() != rows + 1 || row_ptr.front() != 0 || row_ptr.back() != col_idx.size() ||
      col_idx.size() != values.size())
    throw DataError("sparse matrix: inconsistent CSR arrays");
  for (std::size_t r = 0; r < rows; ++r) {
    if (row_ptr[r] > row_ptr[r + 1]) throw DataError("sparse matrix: row pointers not monotone");
    for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) {
      if (col_idx[k] >= cols) throw DataError("sparse matrix: column index out of range");
      if (k > row_ptr[r] && col_idx[k] <= col_idx[k - 1])
        throw DataError("sparse matrix: column indices must be strictly increasing within a row");
    }
  }
  FeatureMatrix m;
  m.rows_ = rows;
  m.cols_ = cols;
  m.sparse_ = true;
  m.row_ptr_ = std::move(row_ptr);
  m.col_idx_ = std::move(col_idx);
  m.values_ = std::move(values);
  return m;
}

double FeatureMatrix::at(std::size_t row, std::size_t col) const {
  if (!sparse_) return values_[row * cols_ + col];
  auto first = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[row]);
  auto last = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[row + 1]);
  auto it = std::lower_bound(first, last, static_cast<std::uint32_t>(col));
  if (it == last || *it != col) return 0.0;
  return values_[static_cast<std::size_t>(it - col_idx_.begin())];
}

double FeatureMatrix::dot(std::size_t row, std::span<const double> weights) const {
  double s = 0.0;
  if (sparse_) {
    for (std::size_t k = row_ptr_[row]; k < row_ptr_[row + 1]; ++k) s += values_[k] * weights[col_idx_[k]];
  } else {
    const double* r = values_.data() + row * cols_;
    for (std::size_t c = 0; c < cols_; ++c) s += r[c] * weights[c];
  }
  return s;
}

double FeatureMatrix::squared_norm(std::size_t row) const {
  double s = 0.0;
  for_each_nonzero(row, [&](std::size_t, double v) { s += v * v; });
  return s;
}

double FeatureMatrix::row_dot(std::size_t row, const FeatureMatrix& other, std::size_t other_row) const {
  if (!sparse_ && !other.sparse_) {
    const double* a = values_.data() + row * cols_;
    const double* b = other.values_.data() + other_row * other.cols_;
    const std::size_t n = std::min(cols_, other.cols_);
    double s = 0.0;
    for (std::size_t c = 0; c < n; ++c) s += a[c] * b[c];
    return s;
  }
  if (sparse_ && other.sparse_) {
    std::size_t i = row_ptr_[row], ie = row_ptr_[row + 1];
    std::size_t j = other.row_ptr_[other_row], je = other.row_ptr_[other_row + 1];
    double s = 0.0;
    while (i < ie && j < je) {
      if (col_idx_[i] < other.col_idx_[j]) {
        ++i;
      } else if (col_idx_[i] > other.col_idx_[j]) {
        ++j;
      } else {
        s += values_[i++] * other.values_[j++];
      }
    }
    return s;
  }
  const FeatureMatrix& sp = sparse_ ? *this : other;
  const FeatureMatrix& dn = sparse_ ? other : *this;
  const std::size_t sr = sparse_ ? row : other_row;
  const std::size_t dr = sparse_ ? other_row : row;
  double s = 0.0;
  for (std::size_t k = sp.row_ptr_[sr]; k < sp.row_ptr_[sr + 1]; ++k)
    if (sp.col_idx_[k] < dn.cols_) s += sp.values_[k] * dn.values_[dr * dn.cols_ + sp.col_idx_[k]];
  return s;
}

double FeatureMatrix::squared_distance(std::size_t row, const FeatureMatrix& other, std::size_t other_row) const {
  if (!sparse_ && !other.sparse_ && cols_ == other.cols_) {
    const double* a = values_.data() + row * cols_;
    const double* b = other.values_.data() + other_row * cols_;
    double s = 0.0;
    for (std::size_t c = 0; c < cols_; ++c) {
      const double d = a[c] - b[c];
      s += d * d;
    }
    return s;
  }
  const double d = squared_norm(row) + other.squared_norm(other_row) - 2.0 * row_dot(row, other, other_row);
  return d > 0.0 ? d : 0.0;
}

std::vector<double> FeatureMatrix::dense_row(std::size_t row) const {
  std::vector<double> out(cols_, 0.0);
  for_each_nonzero(row, [&](std::size_t c, double v) { out[c] = v; });
  return out;
}

FeatureMatrix FeatureMatrix::select(std::span<const std::size_t> rows) const {
  if (!sparse_) {
    std::vector<double> v;
    v.reserve(rows.size() * cols_);
    for (std::size_t r : rows) v.insert(v.end(), values_.begin() + r * cols_, values_.begin() + (r + 1) * cols_);
    return dense(rows.size(), cols_, std::move(v));
  }
  std::vector<std::size_t> ptr{0};
  std::vector<std::uint32_t> idx;
  std::vector<double> val;
  for (std::size_t r : rows) {
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      idx.push_back(col_idx_[k]);
      val.push_back(values_[k]);
    }
    ptr.push_back(idx.size());
  }
  return sparse(rows.size(), cols_, std::move(ptr), std::move(idx), std::move(val));
}

FeatureMatrix FeatureMatrix::to_dense() const {
  if (!sparse_) return *this;
  std::vector<double> v(rows_ * cols_, 0.0);
  for (std::size_t r = 0; r < rows_; ++r)
    for_each_nonzero(r, [&](std::size_t c, double x) { v[r * cols_ + c] = x; });
  return dense(rows_, cols_, std::move(v));
}

FeatureMatrix FeatureMatrix::to_sparse() const {
  if (sparse_) return *this;
  std::vector<std::size_t> ptr{0};
  std::vector<std::uint32_t> idx;
  std::vector<double> val;
  for (std::size_t r = 0; r < rows_; ++r) {
    for_each_nonzero(r, [&](std::size_t c, double x) {
      idx.push_back(static_cast<std::uint32_t>(c));
      val.push_back(x);
    });
    ptr.push_back(idx.size());
  }
  return sparse(rows_, cols_, std::move(ptr), std::move(idx), std::move(val));
}

ProbabilityMatrix::ProbabilityMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) throw DataError("probability matrix: value count does not match shape");
}

void ProbabilityMatrix::check_normalized(double tol) const {
  for (std::size_t r = 0; r < rows_; ++r) {
    double s = 0.0;
    for (double p : row(r)) {
      if (!(p >= 0.0)) throw DataError("posterior row " + std::to_string(r) + " has a negative or NaN entry");
      s += p;
    }
    if (std::abs(s - 1.0) > tol) throw DataError("posterior row " + std::to_string(r) + " does not sum to 1");
  }
}

int argmax(std::span<const double> values) {
  return static_cast<int>(std::max_element(values.begin(), values.end()) - values.begin());
}

void Dataset::validate() const {
  if (features.rows() != labels.size()) throw DataError(name + ": feature rows do not match label count");
  if (class_names.size() < 2) throw DataError(name + ": at least two classes are required");
  for (int y : labels)
    if (y < 0 || static_cast<std::size_t>(y) >= class_names.size())
      throw DataError(name + ": label outside the class set");
}

void PoolState::check_partition(std::size_t rows) const {
  std::vector<int> seen(rows, 0);
  for (const auto* set : {&labeled, &unlabeled, &test}) {
    if (!std::is_sorted(set->begin(), set->end())) throw DataError("pool index set is not sorted");
    for (std::size_t i : *set) {
      if (i >= rows) throw DataError("pool index out of range");
      if (seen[i]++) throw DataError("pool index sets overlap");
    }
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) throw DataError("pool index sets do not cover all rows");
  if (!std::includes(unlabeled.begin(), unlabeled.end(), subsample.begin(), subsample.end()))
    throw DataError("subsample is not contained in the unlabeled pool");
}

void erase_sorted(std::vector<std::size_t>& from, std::span<const std::size_t> remove) {
  std::vector<std::size_t> out;
  out.reserve(from.size());
  std::set_difference(from.begin(), from.end(), remove.begin(), remove.end(), std::back_inserter(out));
  from = std::move(out);
}

PoolState make_split(const Dataset& dataset, std::uint64_t seed, double test_fraction) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("test_fraction must lie in (0, 1)");
  dataset.validate();
  if (std::set<int>(dataset.labels.begin(), dataset.labels.end()).size() < 2)
    throw DataError(dataset.name + ": fewer than two classes present");

  const std::size_t n = dataset.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);

  const auto n_test = static_cast<std::size_t>(std::floor(test_fraction * static_cast<double>(n)));
  PoolState pool;
  pool.test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  pool.unlabeled.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
  std::sort(pool.test.begin(), pool.test.end());
  std::sort(pool.unlabeled.begin(), pool.unlabeled.end());
  return pool;
}

PoolState make_initial_set(const PoolState& pool, const Dataset& dataset, std::uint64_t seed,
                           std::size_t min_size) {
  const std::size_t n_classes = dataset.num_classes();
  std::vector<std::vector<std::size_t>> by_class(n_classes);
  for (std::size_t i : pool.unlabeled) by_class[static_cast<std::size_t>(dataset.labels[i])].push_back(i);
  for (std::size_t c = 0; c < n_classes; ++c)
    if (by_class[c].empty())
      throw DataError(dataset.name + ": class '" + dataset.class_names[c] + "' is absent from the unlabeled pool");

  Rng rng(seed);
  std::vector<std::size_t> chosen;
  for (std::size_t c = 0; c < n_classes; ++c) chosen.push_back(by_class[c][rng.uniform_index(by_class[c].size())]);

  PoolState out = pool;
  std::sort(chosen.begin(), chosen.end());
  erase_sorted(out.unlabeled, chosen);
  out.labeled.insert(out.labeled.end(), chosen.begin(), chosen.end());

  if (out.labeled.size() < min_size) {
    const std::size_t extra = std::min(min_size - out.labeled.size(), out.unlabeled.size());
    std::vector<std::size_t> more = rng.sample(std::span<const std::size_t>(out.unlabeled), extra);
    std::sort(more.begin(), more.end());
    erase_sorted(out.unlabeled, more);
    out.labeled.insert(out.labeled.end(), more.begin(), more.end());
  }
  std::sort(out.labeled.begin(), out.labeled.end());
  erase_sorted(out.subsample, out.labeled);
  return out;
}

PoolState draw_subsample(const PoolState& pool, std::uint64_t seed, std::size_t size) {
  if (size < 1) throw ConfigError("subsample size must be at least 1");
  if (pool.unlabeled.empty()) throw DataError("cannot draw a subsample from an empty unlabeled pool");
  Rng rng(seed);
  PoolState out = pool;
  out.subsample = rng.sample(std::span<const std::size_t>(pool.unlabeled), size);
  std::sort(out.subsample.begin(), out.subsample.end());
  return out;
}

}  // namespace alstop
