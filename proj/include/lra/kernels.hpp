#pragma once

#include "lra/matrix.hpp"

namespace lra {

// OpenMP-parallel dense kernels. Each parallel loop assigns whole output rows
// to one thread with the same inner-loop order as the serial reference, so
// results are bitwise identical to lra::ref and across runs.

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);     // A * B
DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b);  // A^T * B
DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b);  // A * B^T
DenseMatrix transpose(const DenseMatrix& a);

DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix sub(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix scale(const DenseMatrix& a, double s);

double frobenius_norm(const DenseMatrix& a);
double max_abs(const DenseMatrix& a);
double dot(const DenseMatrix& a, const DenseMatrix& b);

/// Serial reference implementations, kept for correctness tests and the
/// kernel benchmark.
namespace ref {
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b);
}  // namespace ref

}  // namespace lra
