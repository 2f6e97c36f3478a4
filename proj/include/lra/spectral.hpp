#pragma once

#include <vector>

#include "lra/matrix.hpp"
#include "lra/rng.hpp"

namespace lra {

/// Prescribed singular spectrum: descending, strictly positive.
struct SpectrumSpec {
    std::vector<double> values;

    explicit SpectrumSpec(std::vector<double> v);
    int size() const { return static_cast<int>(values.size()); }
    double operator[](int j) const { return values[j]; }  // 0-based

    /// count values log-spaced between exp(log_max) and exp(log_min), descending.
    static SpectrumSpec log_spaced(int count, double log_min, double log_max);
    /// values exp(-rate * j / (count-1)), j = 0..count-1.
    static SpectrumSpec exponential(int count, double rate);
    static SpectrumSpec geometric(int count, double ratio);
};

struct QrResult {
    DenseMatrix q;  // economy Q, orthonormal columns
    DenseMatrix r;  // upper triangular
};

/// Householder QR, economy form (q: m x n for m >= n).
QrResult qr_decompose(const DenseMatrix& a);

/// Haar-distributed orthogonal d x d matrix: QR of a Gaussian matrix with the
/// R-diagonal sign correction (plain QR of a Gaussian is not Haar).
DenseMatrix random_orthogonal(int d, Rng& rng);

/// rows x cols (rows >= cols) with orthonormal columns, Haar on the Stiefel manifold.
DenseMatrix random_orthonormal_cols(int rows, int cols, Rng& rng);

/// X = Q diag(spec) V^T with Q, V sampled orthogonal; svd(X) recovers spec.
DenseMatrix matrix_with_spectrum(int d, int L, const SpectrumSpec& spec, Rng& rng);

/// Pairwise column angles arccos(clamp(|x_i.x_j|/(|x_i||x_j|), 0, 1)),
/// symmetric, zero diagonal, entries in [0, pi/2]. Zero columns are rejected.
DenseMatrix angle_matrix(const DenseMatrix& x);

/// Row-space sketching residual || orth(S^T) orth(S^T)^T X^T - X^T ||_2 for a
/// sketch S = W X. All-zero S projects onto the trivial space and returns ||X||_2.
double rowspace_distance(const DenseMatrix& x, const DenseMatrix& s);

}  // namespace lra
