#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace alstop {

// Row-major feature matrix, stored either densely or in CSR form.
//
// Both layouts expose the same row operations so learners and similarity
// code never branch on the storage themselves.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;

  static FeatureMatrix dense(std::size_t rows, std::size_t cols, std::vector<double> values);
  // CSR: row r occupies [row_ptr[r], row_ptr[r+1]) of col_idx/values.
  // Column indices within a row must be strictly increasing.
  static FeatureMatrix sparse(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_ptr,
                              std::vector<std::uint32_t> col_idx, std::vector<double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool is_sparse() const noexcept { return sparse_; }

  double at(std::size_t row, std::size_t col) const;
  // Dot product of a row with a weight vector of length >= cols().
  double dot(std::size_t row, std::span<const double> weights) const;
  double squared_norm(std::size_t row) const;
  double row_dot(std::size_t row, const FeatureMatrix& other, std::size_t other_row) const;
  double squared_distance(std::size_t row, const FeatureMatrix& other, std::size_t other_row) const;

  template <class F>
  void for_each_nonzero(std::size_t row, F&& f) const {
    if (sparse_) {
      for (std::size_t k = row_ptr_[row]; k < row_ptr_[row + 1]; ++k) f(std::size_t{col_idx_[k]}, values_[k]);
    } else {
      const double* r = values_.data() + row * cols_;
      for (std::size_t c = 0; c < cols_; ++c)
        if (r[c] != 0.0) f(c, r[c]);
    }
  }

  std::vector<double> dense_row(std::size_t row) const;
  FeatureMatrix select(std::span<const std::size_t> rows) const;
  FeatureMatrix to_dense() const;
  FeatureMatrix to_sparse() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  bool sparse_ = false;
  std::vector<double> values_;
  std::vector<std::size_t> row_ptr_;
  std::vector<std::uint32_t> col_idx_;
};

// Dense rows x cols matrix of class probabilities.
class ProbabilityMatrix {
 public:
  ProbabilityMatrix() = default;
  ProbabilityMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}
  ProbabilityMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  const std::vector<double>& data() const noexcept { return data_; }

  // Throws DataError unless every row is nonnegative and sums to 1 within tol.
  void check_normalized(double tol = 1e-9) const;

  bool operator==(const ProbabilityMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Index of the largest entry; ties go to the lowest index.
int argmax(std::span<const double> values);

struct Dataset {
  std::string name;
  FeatureMatrix features;
  std::vector<int> labels;               // class ids in [0, class_names.size())
  std::vector<std::string> class_names;  // original label text, indexed by class id

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t num_classes() const noexcept { return class_names.size(); }

  // Throws DataError when the invariants do not hold.
  void validate() const;
};

// Partition of a dataset's rows. All sets are kept sorted.
struct PoolState {
  std::vector<std::size_t> labeled;
  std::vector<std::size_t> unlabeled;
  std::vector<std::size_t> test;
  std::vector<std::size_t> subsample;  // evaluation subsample, subset of unlabeled

  // Throws DataError unless labeled/unlabeled/test partition [0, rows) and
  // the subsample lies inside unlabeled.
  void check_partition(std::size_t rows) const;

  bool operator==(const PoolState&) const = default;
};

PoolState make_split(const Dataset& dataset, std::uint64_t seed, double test_fraction);

// Moves one random instance of every class, then uniformly random extra
// instances, from unlabeled to labeled until |labeled| >= min_size.
PoolState make_initial_set(const PoolState& pool, const Dataset& dataset, std::uint64_t seed,
                           std::size_t min_size);

PoolState draw_subsample(const PoolState& pool, std::uint64_t seed, std::size_t size);

// Removes every element of `remove` (sorted) from `from` (sorted).
void erase_sorted(std::vector<std::size_t>& from, std::span<const std::size_t> remove);

}  // namespace alstop
