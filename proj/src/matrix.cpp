#include "farsim/matrix.hpp"

#include <algorithm>

namespace farsim::linalg {

namespace {

void check_inner(int a, int b, const char* what) {
    if (a != b) throw std::invalid_argument(std::string("matmul: dimension mismatch in ") + what);
}

// Don't spin up threads for matrices the loop overhead would dominate.
inline bool parallel_worth(long m, long n, long k) { return m * n * k > 16384; }

// One output row of C = A * B; i-k-j order, contiguous on B and C.
inline void matmul_row(const Matrix& a, const Matrix& b, Matrix& c, int i) {
    const int k = a.cols();
    const int n = b.cols();
    double* out = c.row(i);
    std::fill(out, out + n, 0.0);
    const double* arow = a.row(i);
    for (int p = 0; p < k; ++p) {
        const double av = arow[p];
        const double* brow = b.row(p);
        for (int j = 0; j < n; ++j) out[j] += av * brow[j];
    }
}

// One output row of C = A^T * B; A is k x m.
inline void matmul_transa_row(const Matrix& a, const Matrix& b, Matrix& c, int i) {
    const int k = a.rows();
    const int n = b.cols();
    double* out = c.row(i);
    std::fill(out, out + n, 0.0);
    for (int p = 0; p < k; ++p) {
        const double av = a(p, i);
        const double* brow = b.row(p);
        for (int j = 0; j < n; ++j) out[j] += av * brow[j];
    }
}

// One output row of C = A * B^T; rows of A and B are contiguous dots.
inline void matmul_transb_row(const Matrix& a, const Matrix& b, Matrix& c, int i) {
    const int k = a.cols();
    const int n = b.rows();
    double* out = c.row(i);
    const double* arow = a.row(i);
    for (int j = 0; j < n; ++j) {
        const double* brow = b.row(j);
        double acc = 0.0;
        for (int p = 0; p < k; ++p) acc += arow[p] * brow[p];
        out[j] = acc;
    }
}

}  // namespace

void matmul_serial(const Matrix& a, const Matrix& b, Matrix& c) {
    check_inner(a.cols(), b.rows(), "A*B");
    c = Matrix(a.rows(), b.cols());
    for (int i = 0; i < a.rows(); ++i) matmul_row(a, b, c, i);
}

void matmul(const Matrix& a, const Matrix& b, Matrix& c) {
    check_inner(a.cols(), b.rows(), "A*B");
    c = Matrix(a.rows(), b.cols());
    const int m = a.rows();
#pragma omp parallel for schedule(static) if (parallel_worth(m, b.cols(), a.cols()))
    for (int i = 0; i < m; ++i) matmul_row(a, b, c, i);
}

void matmul_transa_serial(const Matrix& a, const Matrix& b, Matrix& c) {
    check_inner(a.rows(), b.rows(), "A^T*B");
    c = Matrix(a.cols(), b.cols());
    for (int i = 0; i < a.cols(); ++i) matmul_transa_row(a, b, c, i);
}

void matmul_transa(const Matrix& a, const Matrix& b, Matrix& c) {
    check_inner(a.rows(), b.rows(), "A^T*B");
    c = Matrix(a.cols(), b.cols());
    const int m = a.cols();
#pragma omp parallel for schedule(static) if (parallel_worth(m, b.cols(), a.rows()))
    for (int i = 0; i < m; ++i) matmul_transa_row(a, b, c, i);
}

void matmul_transb_serial(const Matrix& a, const Matrix& b, Matrix& c) {
    check_inner(a.cols(), b.cols(), "A*B^T");
    c = Matrix(a.rows(), b.rows());
    for (int i = 0; i < a.rows(); ++i) matmul_transb_row(a, b, c, i);
}

void matmul_transb(const Matrix& a, const Matrix& b, Matrix& c) {
    check_inner(a.cols(), b.cols(), "A*B^T");
    c = Matrix(a.rows(), b.rows());
    const int m = a.rows();
#pragma omp parallel for schedule(static) if (parallel_worth(m, b.rows(), a.cols()))
    for (int i = 0; i < m; ++i) matmul_transb_row(a, b, c, i);
}

}  // namespace farsim::linalg
