#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace lra {

/// Dense real matrix, row-major, double precision. The single carrier type
/// for inputs, vocabularies, weights and intermediate products.
class DenseMatrix {
  public:
    DenseMatrix() : rows_(0), cols_(0) {}
    DenseMatrix(int rows, int cols) : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols, 0.0) {
        if (rows < 0 || cols < 0) throw std::invalid_argument("DenseMatrix: negative dimension");
    }
    DenseMatrix(int rows, int cols, std::vector<double> entries) : rows_(rows), cols_(cols), data_(std::move(entries)) {
        if (rows < 0 || cols < 0) throw std::invalid_argument("DenseMatrix: negative dimension");
        if (data_.size() != static_cast<size_t>(rows) * cols)
            throw std::invalid_argument("DenseMatrix: entry count does not match rows*cols");
    }

    static DenseMatrix identity(int n) {
        DenseMatrix I(n, n);
        for (int i = 0; i < n; ++i) I(i, i) = 1.0;
        return I;
    }
    static DenseMatrix diag(const std::vector<double>& d) {
        DenseMatrix D(static_cast<int>(d.size()), static_cast<int>(d.size()));
        for (size_t i = 0; i < d.size(); ++i) D(static_cast<int>(i), static_cast<int>(i)) = d[i];
        return D;
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    size_t size() const { return data_.size(); }

    double& operator()(int i, int j) { return data_[static_cast<size_t>(i) * cols_ + j]; }
    double operator()(int i, int j) const { return data_[static_cast<size_t>(i) * cols_ + j]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    double* row(int i) { return data_.data() + static_cast<size_t>(i) * cols_; }
    const double* row(int i) const { return data_.data() + static_cast<size_t>(i) * cols_; }

    bool all_finite() const;
    bool same_shape(const DenseMatrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    /// Rows [r0, r1) as a new matrix.
    DenseMatrix row_block(int r0, int r1) const;
    DenseMatrix col(int j) const;
    void set_col(int j, const DenseMatrix& c);

  private:
    int rows_, cols_;
    std::vector<double> data_;
};

/// Throws invalid_argument naming `op` if any entry is NaN/Inf.
void require_finite(const DenseMatrix& a, const std::string& op);

}  // namespace lra
