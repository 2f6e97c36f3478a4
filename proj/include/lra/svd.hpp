#pragma once

#include <utility>
#include <vector>

#include "lra/matrix.hpp"

namespace lra {

/// Thin SVD A = left * diag(singular_values) * right^T with r = min(rows, cols).
/// Columns of left (rows x r) and right (cols x r) are orthonormal;
/// singular_values are non-increasing and non-negative.
struct SvdResult {
    DenseMatrix left;
    std::vector<double> singular_values;
    DenseMatrix right;
};

/// One-sided Jacobi SVD. Relative rotation tolerance 1e-12, hard cap of 60
/// sweeps; throws runtime_error instead of returning unconverged factors.
/// Rotation rounds use a round-robin schedule so disjoint column pairs can be
/// processed in parallel without changing the result.
SvdResult svd(const DenseMatrix& a);

namespace ref {
/// Serial one-sided Jacobi with the classic nested-pair sweep order.
SvdResult svd(const DenseMatrix& a);
}  // namespace ref

std::vector<double> singular_values(const DenseMatrix& a);

/// Number of singular values with sigma_j / sigma_1 > eps (strict). The zero
/// matrix has no defined sigma_1; it returns 0 by convention.
int eps_rank(const DenseMatrix& a, double eps);
int eps_rank(const std::vector<double>& sigma, double eps);

/// Best rank-r approximation (Eckart-Young truncation).
DenseMatrix truncate_to_rank(const DenseMatrix& a, int r);

/// Truncation keeping exactly eps_rank(a, eps) values; spectral error <= eps * ||a||_2.
std::pair<DenseMatrix, int> truncate_to_tolerance(const DenseMatrix& a, double eps);

/// Orthonormal basis for the column space, keeping directions with
/// sigma_j > tol * sigma_1 (default tol = 1e-10). Zero matrix gives 0 columns.
DenseMatrix orth(const DenseMatrix& a, double tol = 1e-10);

/// sigma_1 computed exactly through the Jacobi SVD.
double spectral_norm(const DenseMatrix& a);

/// sigma_1 estimate by power iteration on the Gram matrix, relative tolerance
/// 1e-10; falls back to the exact SVD if the iteration has not settled.
double spectral_norm_power(const DenseMatrix& a, int max_iters = 5000);

}  // namespace lra
