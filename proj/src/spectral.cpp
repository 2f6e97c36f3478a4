#include "lra/spectral.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "lra/kernels.hpp"
#include "lra/svd.hpp"

namespace lra {

SpectrumSpec::SpectrumSpec(std::vector<double> v) : values(std::move(v)) {
    if (values.empty()) throw std::invalid_argument("SpectrumSpec: empty");
    for (size_t j = 0; j < values.size(); ++j) {
        if (!(values[j] > 0.0)) throw std::invalid_argument("SpectrumSpec: values must be positive");
        if (j > 0 && values[j] > values[j - 1]) throw std::invalid_argument("SpectrumSpec: values must be descending");
    }
}

SpectrumSpec SpectrumSpec::log_spaced(int count, double log_min, double log_max) {
    if (count < 1 || log_min > log_max) throw std::invalid_argument("SpectrumSpec::log_spaced: bad arguments");
    std::vector<double> v(count);
    for (int j = 0; j < count; ++j) {
        double t = (count == 1) ? 0.0 : static_cast<double>(j) / (count - 1);
        v[j] = std::exp(log_max + t * (log_min - log_max));
    }
    return SpectrumSpec(std::move(v));
}

SpectrumSpec SpectrumSpec::exponential(int count, double rate) {
    return log_spaced(count, -rate, 0.0);
}

SpectrumSpec SpectrumSpec::geometric(int count, double ratio) {
    if (!(ratio > 0.0 && ratio <= 1.0)) throw std::invalid_argument("SpectrumSpec::geometric: ratio in (0,1]");
    std::vector<double> v(count);
    double x = 1.0;
    for (int j = 0; j < count; ++j) {
        v[j] = x;
        x *= ratio;
    }
    return SpectrumSpec(std::move(v));
}

QrResult qr_decompose(const DenseMatrix& a) {
    const int m = a.rows(), n = a.cols();
    if (m < n) throw std::invalid_argument("qr_decompose: requires rows >= cols");
    // Householder, accumulating reflectors then forming the economy Q.
    DenseMatrix r = a;
    std::vector<std::vector<double>> vs;
    vs.reserve(n);
    for (int k = 0; k < n; ++k) {
        double norm = 0.0;
        for (int i = k; i < m; ++i) norm += r(i, k) * r(i, k);
        norm = std::sqrt(norm);
        std::vector<double> v(m, 0.0);
        if (norm == 0.0) {
            vs.push_back(std::move(v));
            continue;
        }
        double alpha = (r(k, k) >= 0.0) ? -norm : norm;
        for (int i = k; i < m; ++i) v[i] = r(i, k);
        v[k] -= alpha;
        double vnorm2 = 0.0;
        for (int i = k; i < m; ++i) vnorm2 += v[i] * v[i];
        if (vnorm2 > 0.0) {
            for (int j = k; j < n; ++j) {
                double s = 0.0;
                for (int i = k; i < m; ++i) s += v[i] * r(i, j);
                s *= 2.0 / vnorm2;
                for (int i = k; i < m; ++i) r(i, j) -= s * v[i];
            }
        }
        vs.push_back(std::move(v));
    }
    DenseMatrix q(m, n);
    for (int j = 0; j < n; ++j) q(j, j) = 1.0;
    for (int k = n - 1; k >= 0; --k) {
        const std::vector<double>& v = vs[k];
        double vnorm2 = 0.0;
        for (int i = k; i < m; ++i) vnorm2 += v[i] * v[i];
        if (vnorm2 == 0.0) continue;
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int i = k; i < m; ++i) s += v[i] * q(i, j);
            s *= 2.0 / vnorm2;
            for (int i = k; i < m; ++i) q(i, j) -= s * v[i];
        }
    }
    DenseMatrix rr(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) rr(i, j) = r(i, j);
    return QrResult{std::move(q), std::move(rr)};
}

namespace {
// Haar requires flipping Q columns where the R diagonal is negative.
void sign_correct(QrResult& f) {
    for (int j = 0; j < f.r.cols(); ++j) {
        if (f.r(j, j) < 0.0) {
            for (int i = 0; i < f.q.rows(); ++i) f.q(i, j) = -f.q(i, j);
            for (int k = j; k < f.r.cols(); ++k) f.r(j, k) = -f.r(j, k);
        }
    }
}
}  // namespace

DenseMatrix random_orthonormal_cols(int rows, int cols, Rng& rng) {
    if (rows < cols || cols < 1) throw std::invalid_argument("random_orthonormal_cols: need rows >= cols >= 1");
    DenseMatrix g(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) g(i, j) = rng.gaussian();
    QrResult f = qr_decompose(g);
    sign_correct(f);
    return f.q;
}

DenseMatrix random_orthogonal(int d, Rng& rng) {
    if (d < 1) throw std::invalid_argument("random_orthogonal: d must be >= 1");
    return random_orthonormal_cols(d, d, rng);
}

DenseMatrix matrix_with_spectrum(int d, int L, const SpectrumSpec& spec, Rng& rng) {
    if (spec.size() != d) throw std::invalid_argument("matrix_with_spectrum: spectrum length must equal d");
    if (d > L) throw std::invalid_argument("matrix_with_spectrum: requires d <= L");
    DenseMatrix q = random_orthogonal(d, rng);
    DenseMatrix v = random_orthonormal_cols(L, d, rng);
    DenseMatrix qs(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) qs(i, j) = q(i, j) * spec[j];
    return matmul_nt(qs, v);
}

DenseMatrix angle_matrix(const DenseMatrix& x) {
    require_finite(x, "angle_matrix");
    const int n = x.cols();
    std::vector<double> norms(n);
    for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int i = 0; i < x.rows(); ++i) s += x(i, j) * x(i, j);
        norms[j] = std::sqrt(s);
        if (norms[j] == 0.0)
            throw std::invalid_argument("angle_matrix: column " + std::to_string(j) + " is zero");
    }
    DenseMatrix gram = matmul_tn(x, x);
    DenseMatrix theta(n, n);
    for (int i = 0; i < n; ++i) {
        theta(i, i) = 0.0;
        for (int j = i + 1; j < n; ++j) {
            double c = std::fabs(gram(i, j)) / (norms[i] * norms[j]);
            c = std::min(1.0, std::max(0.0, c));  // rounding can push |cos| above 1
            double t = std::acos(c);
            theta(i, j) = t;
            theta(j, i) = t;
        }
    }
    return theta;
}

double rowspace_distance(const DenseMatrix& x, const DenseMatrix& s) {
    if (s.cols() != x.cols()) throw std::invalid_argument("rowspace_distance: sketch column count must match X");
    DenseMatrix st = transpose(s);  // L x m, columns span row(S)
    DenseMatrix q = orth(st);
    DenseMatrix xt = transpose(x);
    if (q.cols() == 0) return spectral_norm(xt);
    DenseMatrix proj = matmul(q, matmul_tn(q, xt));
    return spectral_norm(sub(xt, proj));
}

}  // namespace lra
