#include "lra/svd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lra/kernels.hpp"

namespace lra {

namespace {

constexpr double kRotTol = 1e-12;  // relative off-diagonal tolerance
constexpr int kMaxSweeps = 60;

struct JacobiWork {
    DenseMatrix w;  // m x n, columns being orthogonalised (column-major layout below)
    DenseMatrix v;  // n x n accumulated rotations
};

// Column-major scratch so column rotations are contiguous.
struct ColMat {
    int m, n;
    std::vector<double> a;
    ColMat(int m_, int n_) : m(m_), n(n_), a(static_cast<size_t>(m_) * n_, 0.0) {}
    double* col(int j) { return a.data() + static_cast<size_t>(j) * m; }
    const double* col(int j) const { return a.data() + static_cast<size_t>(j) * m; }
};

double col_dot(const ColMat& x, int p, int q) {
    const double* cp = x.col(p);
    const double* cq = x.col(q);
    double s = 0.0;
    for (int i = 0; i < x.m; ++i) s += cp[i] * cq[i];
    return s;
}

// Rotate columns p and q of both the data matrix and the accumulated V.
// Returns true if a rotation was applied.
bool rotate_pair(ColMat& w, ColMat& v, std::vector<double>& sq, int p, int q) {
    const double app = sq[p];
    const double aqq = sq[q];
    if (app <= 0.0 || aqq <= 0.0) return false;  // dead column, nothing to rotate
    const double apq = col_dot(w, p, q);
    if (apq * apq <= (kRotTol * kRotTol) * app * aqq) return false;
    const double tau = (aqq - app) / (2.0 * apq);
    const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::fabs(tau) + std::sqrt(1.0 + tau * tau));
    const double c = 1.0 / std::sqrt(1.0 + t * t);
    const double s = c * t;
    double* wp = w.col(p);
    double* wq = w.col(q);
    for (int i = 0; i < w.m; ++i) {
        const double a = wp[i], b = wq[i];
        wp[i] = c * a - s * b;
        wq[i] = s * a + c * b;
    }
    double* vp = v.col(p);
    double* vq = v.col(q);
    for (int i = 0; i < v.m; ++i) {
        const double a = vp[i], b = vq[i];
        vp[i] = c * a - s * b;
        vq[i] = s * a + c * b;
    }
    sq[p] = std::max(0.0, app * c * c - 2.0 * c * s * apq + s * s * aqq);
    sq[q] = std::max(0.0, s * s * app + 2.0 * c * s * apq + c * c * aqq);
    return true;
}

// Shared finish: sort by column norm, normalise, fill null directions.
SvdResult finish(ColMat& w, ColMat& v, int m, int n, bool transposed) {
    std::vector<double> sigma(n);
    for (int j = 0; j < n; ++j) sigma[j] = std::sqrt(col_dot(w, j, j));
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return sigma[a] > sigma[b]; });

    DenseMatrix left(m, n), right(v.m, n);
    std::vector<double> s_sorted(n);
    for (int jj = 0; jj < n; ++jj) {
        const int j = order[jj];
        s_sorted[jj] = sigma[j];
        if (sigma[j] > 0.0) {
            const double inv = 1.0 / sigma[j];
            const double* wc = w.col(j);
            for (int i = 0; i < m; ++i) left(i, jj) = wc[i] * inv;
        }
        const double* vc = v.col(j);
        for (int i = 0; i < v.m; ++i) right(i, jj) = vc[i];
    }
    // Zero singular values leave no direction; complete with canonical vectors.
    for (int jj = 0; jj < n; ++jj) {
        if (s_sorted[jj] > 0.0) continue;
        for (int cand = 0; cand < m; ++cand) {
            std::vector<double> u(m, 0.0);
            u[cand] = 1.0;
            for (int pass = 0; pass < 2; ++pass) {
                for (int k = 0; k < n; ++k) {
                    if (k == jj || (s_sorted[k] <= 0.0 && k > jj)) continue;
                    double proj = 0.0;
                    for (int i = 0; i < m; ++i) proj += left(i, k) * u[i];
                    for (int i = 0; i < m; ++i) u[i] -= proj * left(i, k);
                }
            }
            double norm = 0.0;
            for (double x : u) norm += x * x;
            norm = std::sqrt(norm);
            if (norm > 0.5) {
                for (int i = 0; i < m; ++i) left(i, jj) = u[i] / norm;
                break;
            }
        }
    }
    if (transposed) std::swap(left, right);
    return SvdResult{std::move(left), std::move(s_sorted), std::move(right)};
}

ColMat to_colmajor(const DenseMatrix& a, bool transpose_input) {
    if (!transpose_input) {
        ColMat c(a.rows(), a.cols());
        for (int j = 0; j < a.cols(); ++j) {
            double* col = c.col(j);
            for (int i = 0; i < a.rows(); ++i) col[i] = a(i, j);
        }
        return c;
    }
    ColMat c(a.cols(), a.rows());
    for (int j = 0; j < a.rows(); ++j) {
        double* col = c.col(j);
        for (int i = 0; i < a.cols(); ++i) col[i] = a(j, i);
    }
    return c;
}

// Recompute cached squared norms and zero out columns that have decayed to
// rounding crumbs (norm below 1e-14 of the largest column). Such columns are
// numerically indistinguishable from zero and would otherwise keep rotating
// against their parents forever.
void refresh_sqnorms(ColMat& w, std::vector<double>& sq) {
    double maxsq = 0.0;
    for (int j = 0; j < w.n; ++j) {
        sq[j] = col_dot(w, j, j);
        maxsq = std::max(maxsq, sq[j]);
    }
    const double drop = maxsq * 1e-28;
    for (int j = 0; j < w.n; ++j) {
        if (sq[j] > drop || sq[j] == 0.0) continue;
        double* c = w.col(j);
        for (int i = 0; i < w.m; ++i) c[i] = 0.0;
        sq[j] = 0.0;
    }
}

SvdResult svd_parallel_impl(const DenseMatrix& a) {
    require_finite(a, "svd");
    if (a.rows() == 0 || a.cols() == 0) throw std::invalid_argument("svd: empty matrix");
    const bool transposed = a.rows() < a.cols();
    ColMat w = to_colmajor(a, transposed);
    const int m = w.m, n = w.n;
    ColMat v(n, n);
    for (int j = 0; j < n; ++j) v.col(j)[j] = 1.0;

    std::vector<double> sq(n);
    const int np = (n % 2 == 0) ? n : n + 1;  // pad for the round-robin schedule
    bool converged = (n <= 1);
    for (int sweep = 0; sweep < kMaxSweeps && !converged; ++sweep) {
        refresh_sqnorms(w, sq);
        int rotations = 0;
        for (int round = 0; round < np - 1; ++round) {
            int local = 0;
#pragma omp parallel for schedule(static) reduction(+ : local) if (n >= 32)
            for (int j = 0; j < np / 2; ++j) {
                int p = (j == 0) ? np - 1 : (round + j) % (np - 1);
                int q = (round + np - 1 - j) % (np - 1);
                if (p >= n || q >= n || p == q) continue;
                if (rotate_pair(w, v, sq, std::min(p, q), std::max(p, q))) ++local;
            }
            rotations += local;
        }
        converged = (rotations == 0);
    }
    if (!converged) throw std::runtime_error("svd: Jacobi iteration did not converge within 60 sweeps");
    return finish(w, v, m, n, transposed);
}

SvdResult svd_serial_impl(const DenseMatrix& a) {
    require_finite(a, "svd");
    if (a.rows() == 0 || a.cols() == 0) throw std::invalid_argument("svd: empty matrix");
    const bool transposed = a.rows() < a.cols();
    ColMat w = to_colmajor(a, transposed);
    const int m = w.m, n = w.n;
    ColMat v(n, n);
    for (int j = 0; j < n; ++j) v.col(j)[j] = 1.0;

    std::vector<double> sq(n);
    bool converged = (n <= 1);
    for (int sweep = 0; sweep < kMaxSweeps && !converged; ++sweep) {
        refresh_sqnorms(w, sq);
        int rotations = 0;
        for (int p = 0; p < n - 1; ++p)
            for (int q = p + 1; q < n; ++q)
                if (rotate_pair(w, v, sq, p, q)) ++rotations;
        converged = (rotations == 0);
    }
    if (!converged) throw std::runtime_error("svd: Jacobi iteration did not converge within 60 sweeps");
    return finish(w, v, m, n, transposed);
}

}  // namespace

SvdResult svd(const DenseMatrix& a) { return svd_parallel_impl(a); }

namespace ref {
SvdResult svd(const DenseMatrix& a) { return svd_serial_impl(a); }
}  // namespace ref

std::vector<double> singular_values(const DenseMatrix& a) { return svd(a).singular_values; }

int eps_rank(const std::vector<double>& sigma, double eps) {
    if (eps <= 0.0) throw std::invalid_argument("eps_rank: eps must be positive");
    if (sigma.empty() || sigma[0] <= 0.0) return 0;  // zero matrix convention
    int count = 0;
    for (double s : sigma)
        if (s / sigma[0] > eps) ++count;
    return count;
}

int eps_rank(const DenseMatrix& a, double eps) { return eps_rank(singular_values(a), eps); }

DenseMatrix truncate_to_rank(const DenseMatrix& a, int r) {
    if (r < 1 || r > std::min(a.rows(), a.cols()))
        throw std::invalid_argument("truncate_to_rank: r outside [1, min(rows, cols)]");
    SvdResult f = svd(a);
    DenseMatrix us(a.rows(), r);
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < r; ++j) us(i, j) = f.left(i, j) * f.singular_values[j];
    DenseMatrix vr(a.cols(), r);
    for (int i = 0; i < a.cols(); ++i)
        for (int j = 0; j < r; ++j) vr(i, j) = f.right(i, j);
    return matmul_nt(us, vr);
}

std::pair<DenseMatrix, int> truncate_to_tolerance(const DenseMatrix& a, double eps) {
    if (eps <= 0.0) throw std::invalid_argument("truncate_to_tolerance: eps must be positive");
    SvdResult f = svd(a);
    int kept = eps_rank(f.singular_values, eps);
    if (kept == 0) return {DenseMatrix(a.rows(), a.cols()), 0};
    DenseMatrix us(a.rows(), kept);
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < kept; ++j) us(i, j) = f.left(i, j) * f.singular_values[j];
    DenseMatrix vr(a.cols(), kept);
    for (int i = 0; i < a.cols(); ++i)
        for (int j = 0; j < kept; ++j) vr(i, j) = f.right(i, j);
    return {matmul_nt(us, vr), kept};
}

DenseMatrix orth(const DenseMatrix& a, double tol) {
    SvdResult f = svd(a);
    if (f.singular_values.empty() || f.singular_values[0] <= 0.0) return DenseMatrix(a.rows(), 0);
    int r = 0;
    for (double s : f.singular_values)
        if (s > tol * f.singular_values[0]) ++r;
    DenseMatrix q(a.rows(), r);
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < r; ++j) q(i, j) = f.left(i, j);
    return q;
}

double spectral_norm(const DenseMatrix& a) {
    std::vector<double> s = singular_values(a);
    return s.empty() ? 0.0 : s[0];
}

double spectral_norm_power(const DenseMatrix& a, int max_iters) {
    const int m = a.rows(), n = a.cols();
    if (m == 0 || n == 0) return 0.0;
    // power iteration on A^T A (n <= m) or A A^T, started from a fixed mix of
    // the matrix's own rows/columns so the run is deterministic
    const bool use_atA = n <= m;
    const int dim = use_atA ? n : m;
    std::vector<double> x(dim, 0.0);
    for (int i = 0; i < (use_atA ? m : n); ++i)
        for (int j = 0; j < dim; ++j) x[j] += (use_atA ? a(i, j) : a(j, i)) * (1.0 + 0.5 * ((i * 31 + j * 17) % 7));
    double nrm = 0.0;
    for (double v : x) nrm += v * v;
    if (nrm == 0.0) {
        x.assign(dim, 1.0 / std::sqrt(static_cast<double>(dim)));
    } else {
        nrm = std::sqrt(nrm);
        for (double& v : x) v /= nrm;
    }
    std::vector<double> tmp(use_atA ? m : n), y(dim);
    double lambda_prev = 0.0;
    for (int it = 0; it < max_iters; ++it) {
        if (use_atA) {
            for (int i = 0; i < m; ++i) {
                double s = 0.0;
                for (int j = 0; j < n; ++j) s += a(i, j) * x[j];
                tmp[i] = s;
            }
            for (int j = 0; j < n; ++j) {
                double s = 0.0;
                for (int i = 0; i < m; ++i) s += a(i, j) * tmp[i];
                y[j] = s;
            }
        } else {
            for (int j = 0; j < n; ++j) {
                double s = 0.0;
                for (int i = 0; i < m; ++i) s += a(i, j) * x[i];
                tmp[j] = s;
            }
            for (int i = 0; i < m; ++i) {
                double s = 0.0;
                for (int j = 0; j < n; ++j) s += a(i, j) * tmp[j];
                y[i] = s;
            }
        }
        double lambda = 0.0;
        for (int j = 0; j < dim; ++j) lambda += x[j] * y[j];
        double ynrm = 0.0;
        for (double v : y) ynrm += v * v;
        ynrm = std::sqrt(ynrm);
        if (ynrm == 0.0) return 0.0;
        for (int j = 0; j < dim; ++j) x[j] = y[j] / ynrm;
        if (it > 0 && std::fabs(lambda - lambda_prev) <= 1e-10 * std::fabs(lambda))
            return std::sqrt(std::max(lambda, 0.0));
        lambda_prev = lambda;
    }
    return spectral_norm(a);  // iteration did not settle; use the exact path
}

}  // namespace lra
