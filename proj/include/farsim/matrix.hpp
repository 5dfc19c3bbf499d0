#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace farsim {

// Dense row-major matrix of doubles; the only numeric container used by the
// trainer and the fault simulator.
class Matrix {
public:
    Matrix() = default;
    Matrix(int rows, int cols, double fill = 0.0)
        : rows_(rows), cols_(cols),
          data_(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), fill) {
        if (rows < 0 || cols < 0) throw std::invalid_argument("Matrix: negative dimension");
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(int i, int j) { return data_[static_cast<std::size_t>(i) * cols_ + j]; }
    double operator()(int i, int j) const {
        return data_[static_cast<std::size_t>(i) * cols_ + j];
    }

    double* row(int i) { return data_.data() + static_cast<std::size_t>(i) * cols_; }
    const double* row(int i) const { return data_.data() + static_cast<std::size_t>(i) * cols_; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    bool operator==(const Matrix&) const = default;

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> data_;
};

namespace linalg {

// Each kernel comes in two flavours: a plain serial reference and an
// OpenMP-parallel version. Both accumulate every output element in the same
// fixed order, so their results are bit-identical; the tests rely on that.

// C = A (m x k) * B (k x n)
void matmul_serial(const Matrix& a, const Matrix& b, Matrix& c);
void matmul(const Matrix& a, const Matrix& b, Matrix& c);

// C = A^T * B, with A (k x m), B (k x n)
void matmul_transa_serial(const Matrix& a, const Matrix& b, Matrix& c);
void matmul_transa(const Matrix& a, const Matrix& b, Matrix& c);

// C = A * B^T, with A (m x k), B (n x k)
void matmul_transb_serial(const Matrix& a, const Matrix& b, Matrix& c);
void matmul_transb(const Matrix& a, const Matrix& b, Matrix& c);

}  // namespace linalg
}  // namespace farsim
