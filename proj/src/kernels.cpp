#include "lra/kernels.hpp"

#include <cmath>
#include <stdexcept>

namespace lra {

namespace {
void check_mul(int ak, int bk, const char* op) {
    if (ak != bk) throw std::invalid_argument(std::string(op) + ": inner dimensions do not match");
}
}  // namespace

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    check_mul(a.cols(), b.rows(), "matmul");
    const int m = a.rows(), k = a.cols(), n = b.cols();
    DenseMatrix c(m, n);
#pragma omp parallel for schedule(static) if (m > 16)
    for (int i = 0; i < m; ++i) {
        const double* arow = a.row(i);
        double* crow = c.row(i);
        for (int p = 0; p < k; ++p) {
            const double aip = arow[p];
            if (aip == 0.0) continue;
            const double* brow = b.row(p);
            for (int j = 0; j < n; ++j) crow[j] += aip * brow[j];
        }
    }
    return c;
}

DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
    check_mul(a.rows(), b.rows(), "matmul_tn");
    const int m = a.cols(), k = a.rows(), n = b.cols();
    DenseMatrix c(m, n);
#pragma omp parallel for schedule(static) if (m > 16)
    for (int i = 0; i < m; ++i) {
        double* crow = c.row(i);
        for (int p = 0; p < k; ++p) {
            const double aip = a(p, i);
            if (aip == 0.0) continue;
            const double* brow = b.row(p);
            for (int j = 0; j < n; ++j) crow[j] += aip * brow[j];
        }
    }
    return c;
}

DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
    check_mul(a.cols(), b.cols(), "matmul_nt");
    const int m = a.rows(), k = a.cols(), n = b.rows();
    DenseMatrix c(m, n);
#pragma omp parallel for schedule(static) if (m > 16)
    for (int i = 0; i < m; ++i) {
        const double* arow = a.row(i);
        double* crow = c.row(i);
        for (int j = 0; j < n; ++j) {
            const double* brow = b.row(j);
            double s = 0.0;
            for (int p = 0; p < k; ++p) s += arow[p] * brow[p];
            crow[j] = s;
        }
    }
    return c;
}

DenseMatrix transpose(const DenseMatrix& a) {
    DenseMatrix t(a.cols(), a.rows());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("add: shape mismatch");
    DenseMatrix c(a.rows(), a.cols());
    for (size_t i = 0; i < a.size(); ++i) c.data()[i] = a.data()[i] + b.data()[i];
    return c;
}

DenseMatrix sub(const DenseMatrix& a, const DenseMatrix& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("sub: shape mismatch");
    DenseMatrix c(a.rows(), a.cols());
    for (size_t i = 0; i < a.size(); ++i) c.data()[i] = a.data()[i] - b.data()[i];
    return c;
}

DenseMatrix scale(const DenseMatrix& a, double s) {
    DenseMatrix c(a.rows(), a.cols());
    for (size_t i = 0; i < a.size(); ++i) c.data()[i] = a.data()[i] * s;
    return c;
}

double frobenius_norm(const DenseMatrix& a) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a.data()[i] * a.data()[i];
    return std::sqrt(s);
}

double max_abs(const DenseMatrix& a) {
    double m = 0.0;
    for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a.data()[i]));
    return m;
}

double dot(const DenseMatrix& a, const DenseMatrix& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("dot: shape mismatch");
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a.data()[i] * b.data()[i];
    return s;
}

namespace ref {

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    check_mul(a.cols(), b.rows(), "ref::matmul");
    const int m = a.rows(), k = a.cols(), n = b.cols();
    DenseMatrix c(m, n);
    for (int i = 0; i < m; ++i) {
        const double* arow = a.row(i);
        double* crow = c.row(i);
        for (int p = 0; p < k; ++p) {
            const double aip = arow[p];
            if (aip == 0.0) continue;
            const double* brow = b.row(p);
            for (int j = 0; j < n; ++j) crow[j] += aip * brow[j];
        }
    }
    return c;
}

DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
    check_mul(a.rows(), b.rows(), "ref::matmul_tn");
    const int m = a.cols(), k = a.rows(), n = b.cols();
    DenseMatrix c(m, n);
    for (int i = 0; i < m; ++i) {
        double* crow = c.row(i);
        for (int p = 0; p < k; ++p) {
            const double aip = a(p, i);
            if (aip == 0.0) continue;
            const double* brow = b.row(p);
            for (int j = 0; j < n; ++j) crow[j] += aip * brow[j];
        }
    }
    return c;
}

DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
    check_mul(a.cols(), b.cols(), "ref::matmul_nt");
    const int m = a.rows(), k = a.cols(), n = b.rows();
    DenseMatrix c(m, n);
    for (int i = 0; i < m; ++i) {
        const double* arow = a.row(i);
        double* crow = c.row(i);
        for (int j = 0; j < n; ++j) {
            const double* brow = b.row(j);
            double s = 0.0;
            for (int p = 0; p < k; ++p) s += arow[p] * brow[p];
            crow[j] = s;
        }
    }
    return c;
}

}  // namespace ref

}  // namespace lra
