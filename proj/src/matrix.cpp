#include "lra/matrix.hpp"

#include <cmath>

#include "lra/rng.hpp"

namespace lra {

bool DenseMatrix::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

DenseMatrix DenseMatrix::row_block(int r0, int r1) const {
    if (r0 < 0 || r1 > rows_ || r0 > r1) throw std::invalid_argument("row_block: bad range");
    DenseMatrix out(r1 - r0, cols_);
    for (int i = r0; i < r1; ++i)
        for (int j = 0; j < cols_; ++j) out(i - r0, j) = (*this)(i, j);
    return out;
}

DenseMatrix DenseMatrix::col(int j) const {
    DenseMatrix out(rows_, 1);
    for (int i = 0; i < rows_; ++i) out(i, 0) = (*this)(i, j);
    return out;
}

void DenseMatrix::set_col(int j, const DenseMatrix& c) {
    if (c.rows() != rows_ || c.cols() != 1) throw std::invalid_argument("set_col: shape mismatch");
    for (int i = 0; i < rows_; ++i) (*this)(i, j) = c(i, 0);
}

void require_finite(const DenseMatrix& a, const std::string& op) {
    if (!a.all_finite()) throw std::invalid_argument(op + ": non-finite entry in input");
}

double Rng::gaussian() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

int Rng::uniform_int(int n) {
    if (n <= 0) throw std::invalid_argument("uniform_int: n must be positive");
    uint64_t bound = static_cast<uint64_t>(n);
    uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    uint64_t x = next_u64();
    while (x >= limit) x = next_u64();
    return static_cast<int>(x % bound);
}

}  // namespace lra
