#pragma once

#include <algorithm>
#include <cstdint>
#include <tuple>
#include <vector>

#include "bisbm/common.hpp"

namespace bisbm {

// Sparse biadjacency matrix. Both compressed-row and compressed-column views
// are maintained: block compression iterates rows, its column dual iterates
// columns. Values are 1.0 in binary mode, nonnegative counts in Poisson
// mode, and arbitrary nonnegative reals for expectation-driven matrices
// (e.g. E[A] in tests) or regularized matrices.
class BiAdjacency {
 public:
  using Entry = std::tuple<std::int64_t, std::int64_t, double>;  // (i, j, value)

  BiAdjacency() = default;

  static BiAdjacency from_entries(std::int64_t n, std::int64_t m, std::vector<Entry> entries,
                                  bool binary) {
    BiAdjacency a;
    a.n_ = n;
    a.m_ = m;
    a.binary_ = binary;
    std::sort(entries.begin(), entries.end());
    for (std::size_t t = 0; t < entries.size(); ++t) {
      auto [i, j, v] = entries[t];
      if (i < 0 || i >= n || j < 0 || j >= m)
        throw DataError("BiAdjacency: index out of range");
      if (v < 0) throw DataError("BiAdjacency: negative entry");
      if (binary && v != 1.0) throw DataError("BiAdjacency: non-unit entry in binary mode");
      if (t > 0 && std::get<0>(entries[t - 1]) == i && std::get<1>(entries[t - 1]) == j) {
        if (binary) throw DataError("BiAdjacency: duplicate edge in binary mode");
        throw DataError("BiAdjacency: duplicate (i,j) entry");
      }
    }
    a.build(entries);
    return a;
  }

  static BiAdjacency from_dense(const Matrix& d) {
    std::vector<Entry> entries;
    for (Eigen::Index i = 0; i < d.rows(); ++i)
      for (Eigen::Index j = 0; j < d.cols(); ++j)
        if (d(i, j) != 0.0) entries.emplace_back(i, j, d(i, j));
    return from_entries(d.rows(), d.cols(), std::move(entries), false);
  }

  std::int64_t rows() const { return n_; }
  std::int64_t cols() const { return m_; }
  std::int64_t nnz() const { return static_cast<std::int64_t>(col_idx_.size()); }
  bool binary() const { return binary_; }

  // CSR access for row i.
  std::size_t row_begin(std::int64_t i) const { return row_ptr_[static_cast<std::size_t>(i)]; }
  std::size_t row_end(std::int64_t i) const { return row_ptr_[static_cast<std::size_t>(i) + 1]; }
  std::int32_t col_at(std::size_t p) const { return col_idx_[p]; }
  double val_at(std::size_t p) const { return val_[p]; }

  // CSC access for column j.
  std::size_t colv_begin(std::int64_t j) const { return col_ptr_[static_cast<std::size_t>(j)]; }
  std::size_t colv_end(std::int64_t j) const { return col_ptr_[static_cast<std::size_t>(j) + 1]; }
  std::int32_t row_at(std::size_t p) const { return row_idx_[p]; }
  double cval_at(std::size_t p) const { return cval_[p]; }

  double row_mass(std::int64_t i) const {
    double s = 0.0;
    for (std::size_t p = row_begin(i); p < row_end(i); ++p) s += val_[p];
    return s;
  }

  double col_mass(std::int64_t j) const {
    double s = 0.0;
    for (std::size_t p = colv_begin(j); p < colv_end(j); ++p) s += cval_[p];
    return s;
  }

  double total_mass() const {
    double s = 0.0;
    for (double v : val_) s += v;
    return s;
  }

  BiAdjacency transpose() const {
    BiAdjacency t;
    t.n_ = m_;
    t.m_ = n_;
    t.binary_ = binary_;
    t.row_ptr_ = col_ptr_;
    t.col_idx_ = row_idx_;
    t.val_ = cval_;
    t.col_ptr_ = row_ptr_;
    t.row_idx_ = col_idx_;
    t.cval_ = val_;
    return t;
  }

  // Extract the submatrix indexed by the given original row/column ids; the
  // output uses positions within the id lists as its indices.
  BiAdjacency submatrix(const std::vector<int>& row_ids, const std::vector<int>& col_ids) const {
    std::vector<std::int32_t> col_pos(static_cast<std::size_t>(m_), -1);
    for (std::size_t c = 0; c < col_ids.size(); ++c)
      col_pos[static_cast<std::size_t>(col_ids[c])] = static_cast<std::int32_t>(c);
    std::vector<Entry> entries;
    for (std::size_t r = 0; r < row_ids.size(); ++r) {
      const std::int64_t i = row_ids[r];
      for (std::size_t p = row_begin(i); p < row_end(i); ++p) {
        const std::int32_t c = col_pos[static_cast<std::size_t>(col_idx_[p])];
        if (c >= 0) entries.emplace_back(static_cast<std::int64_t>(r), c, val_[p]);
      }
    }
    return from_entries(static_cast<std::int64_t>(row_ids.size()),
                        static_cast<std::int64_t>(col_ids.size()), std::move(entries), binary_);
  }

  // Rows only; keeps all columns.
  BiAdjacency row_submatrix(const std::vector<int>& row_ids) const {
    std::vector<Entry> entries;
    for (std::size_t r = 0; r < row_ids.size(); ++r) {
      const std::int64_t i = row_ids[r];
      for (std::size_t p = row_begin(i); p < row_end(i); ++p)
        entries.emplace_back(static_cast<std::int64_t>(r), col_idx_[p], val_[p]);
    }
    return from_entries(static_cast<std::int64_t>(row_ids.size()), m_, std::move(entries),
                        binary_);
  }

  // Returns a copy with rows scaled by rs and columns by cs (entrywise
  // value * rs[i] * cs[j]). Used by degree regularization.
  BiAdjacency scaled(const std::vector<double>& rs, const std::vector<double>& cs) const {
    BiAdjacency out = *this;
    out.binary_ = false;
    for (std::int64_t i = 0; i < n_; ++i)
      for (std::size_t p = row_begin(i); p < row_end(i); ++p)
        out.val_[p] = val_[p] * rs[static_cast<std::size_t>(i)] *
                      cs[static_cast<std::size_t>(col_idx_[p])];
    for (std::int64_t j = 0; j < m_; ++j)
      for (std::size_t p = colv_begin(j); p < colv_end(j); ++p)
        out.cval_[p] = cval_[p] * cs[static_cast<std::size_t>(j)] *
                       rs[static_cast<std::size_t>(row_idx_[p])];
    return out;
  }

  std::vector<Entry> entries() const {
    std::vector<Entry> out;
    out.reserve(static_cast<std::size_t>(nnz()));
    for (std::int64_t i = 0; i < n_; ++i)
      for (std::size_t p = row_begin(i); p < row_end(i); ++p)
        out.emplace_back(i, col_idx_[p], val_[p]);
    return out;
  }

  Matrix to_dense() const {
    Matrix d = Matrix::Zero(n_, m_);
    for (std::int64_t i = 0; i < n_; ++i)
      for (std::size_t p = row_begin(i); p < row_end(i); ++p) d(i, col_idx_[p]) = val_[p];
    return d;
  }

 private:
  void build(const std::vector<Entry>& sorted) {
    row_ptr_.assign(static_cast<std::size_t>(n_) + 1, 0);
    col_ptr_.assign(static_cast<std::size_t>(m_) + 1, 0);
    col_idx_.resize(sorted.size());
    val_.resize(sorted.size());
    row_idx_.resize(sorted.size());
    cval_.resize(sorted.size());
    for (const auto& [i, j, v] : sorted) {
      ++row_ptr_[static_cast<std::size_t>(i) + 1];
      ++col_ptr_[static_cast<std::size_t>(j) + 1];
    }
    for (std::size_t i = 0; i < static_cast<std::size_t>(n_); ++i) row_ptr_[i + 1] += row_ptr_[i];
    for (std::size_t j = 0; j < static_cast<std::size_t>(m_); ++j) col_ptr_[j + 1] += col_ptr_[j];
    std::vector<std::size_t> rfill(row_ptr_.begin(), row_ptr_.end() - 1);
    std::vector<std::size_t> cfill(col_ptr_.begin(), col_ptr_.end() - 1);
    for (const auto& [i, j, v] : sorted) {
      std::size_t rp = rfill[static_cast<std::size_t>(i)]++;
      col_idx_[rp] = static_cast<std::int32_t>(j);
      val_[rp] = v;
      std::size_t cp = cfill[static_cast<std::size_t>(j)]++;
      row_idx_[cp] = static_cast<std::int32_t>(i);
      cval_[cp] = v;
    }
  }

  std::int64_t n_ = 0, m_ = 0;
  bool binary_ = true;
  std::vector<std::size_t> row_ptr_;
  std::vector<std::int32_t> col_idx_;
  std::vector<double> val_;
  std::vector<std::size_t> col_ptr_;
  std::vector<std::int32_t> row_idx_;
  std::vector<double> cval_;
};

}  // namespace bisbm
