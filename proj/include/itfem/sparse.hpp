#pragma once

#include "itfem/common.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

namespace itfem {

struct Triplet {
  int row;
  int col;
  double value;
};

/// Compressed sparse row matrix with sorted, unique column indices per row.
class CsrMatrix {
 public:
  CsrMatrix() = default;

  /// Sums duplicate entries. Summation order for a given (row, col) is the
  /// insertion order, so the result is bit-reproducible.
  static CsrMatrix from_triplets(int n, std::vector<Triplet> triplets) {
    std::stable_sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
      return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    CsrMatrix m;
    m.n_ = n;
    m.row_ptr_.assign(n + 1, 0);
    for (std::size_t i = 0; i < triplets.size();) {
      const int r = triplets[i].row, c = triplets[i].col;
      if (r < 0 || r >= n || c < 0 || c >= n) throw AssemblyError("triplet index out of range");
      double v = 0.0;
      while (i < triplets.size() && triplets[i].row == r && triplets[i].col == c) v += triplets[i++].value;
      m.cols_.push_back(c);
      m.vals_.push_back(v);
      ++m.row_ptr_[r + 1];
    }
    for (int r = 0; r < n; ++r) m.row_ptr_[r + 1] += m.row_ptr_[r];
    return m;
  }

  int rows() const { return n_; }
  std::size_t nonzeros() const { return vals_.size(); }
  const std::vector<int>& row_ptr() const { return row_ptr_; }
  const std::vector<int>& cols() const { return cols_; }
  const std::vector<double>& values() const { return vals_; }

  double coeff(int r, int c) const {
    const auto b = cols_.begin() + row_ptr_[r], e = cols_.begin() + row_ptr_[r + 1];
    const auto it = std::lower_bound(b, e, c);
    return (it != e && *it == c) ? vals_[it - cols_.begin()] : 0.0;
  }

  void multiply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const {
    y.resize(n_);
    for (int r = 0; r < n_; ++r) {
      double s = 0.0;
      for (int p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) s += vals_[p] * x[cols_[p]];
      y[r] = s;
    }
  }

  Eigen::VectorXd operator*(const Eigen::VectorXd& x) const {
    Eigen::VectorXd y;
    multiply(x, y);
    return y;
  }

  Eigen::VectorXd diagonal() const {
    Eigen::VectorXd d(n_);
    for (int r = 0; r < n_; ++r) d[r] = coeff(r, r);
    return d;
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : vals_) m = std::max(m, std::abs(v));
    return m;
  }

  /// max |A_ij - A_ji| over stored entries.
  double asymmetry() const {
    double m = 0.0;
    for (int r = 0; r < n_; ++r)
      for (int p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) m = std::max(m, std::abs(vals_[p] - coeff(cols_[p], r)));
    return m;
  }

  void scale(double s) {
    for (double& v : vals_) v *= s;
  }

  Eigen::MatrixXd to_dense() const {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n_, n_);
    for (int r = 0; r < n_; ++r)
      for (int p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) a(r, cols_[p]) = vals_[p];
    return a;
  }

 private:
  int n_ = 0;
  std::vector<int> row_ptr_{0};
  std::vector<int> cols_;
  std::vector<double> vals_;
};

}  // namespace itfem
