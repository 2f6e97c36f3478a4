#include "lra/embeddings.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "lra/kernels.hpp"
#include "lra/spectral.hpp"
#include "lra/svd.hpp"

namespace lra {

double relu(double x) { return x > 0.0 ? x : 0.0; }

int QuantizationEmbedding::bin_of(double x) const {
    if (x <= -x_max) return 0;
    if (x >= x_max) return bin_count - 1;
    double t = (x + x_max) / (2.0 * x_max);  // in (0, 1)
    int b = static_cast<int>(t * bin_count);
    return std::min(b, bin_count - 1);
}

QuantizationEmbedding make_quantization_embedding(int bins, int d, double x_max, Rng& rng) {
    if (bins < 2) throw std::invalid_argument("make_quantization_embedding: need at least 2 bins");
    if (x_max <= 0.0) throw std::invalid_argument("make_quantization_embedding: x_max must be positive");
    DenseMatrix table(d, bins);
    const double s = 1.0 / std::sqrt(static_cast<double>(d));
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < bins; ++j) table(i, j) = s * rng.gaussian();
    return QuantizationEmbedding{bins, x_max, std::move(table)};
}

MlpEmbedding make_mlp_embedding(int k, int d, int d_f, Rng& rng) {
    if (d <= k) throw std::invalid_argument("make_mlp_embedding: requires d > k");
    MlpEmbedding e{DenseMatrix(d_f, k), DenseMatrix(d, d_f), DenseMatrix(d, k), &relu};
    const double s1 = 1.0 / std::sqrt(static_cast<double>(k));
    const double s2 = 1.0 / std::sqrt(static_cast<double>(d_f));
    for (int i = 0; i < d_f; ++i)
        for (int j = 0; j < k; ++j) e.w1(i, j) = s1 * rng.gaussian();
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d_f; ++j) e.w2(i, j) = s2 * rng.gaussian();
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < k; ++j) e.w3(i, j) = s1 * rng.gaussian();
    return e;
}

SwishEmbedding make_swish_embedding(int d, double beta, Rng& rng) {
    if (beta <= 0.0) throw std::invalid_argument("make_swish_embedding: beta must be positive");
    SwishEmbedding e{std::vector<double>(d), std::vector<double>(d), beta};
    for (int i = 0; i < d; ++i) {
        e.w[i] = rng.uniform(-1.0, 1.0);
        e.v[i] = rng.uniform(-1.0, 1.0);  // |w_i v_i| <= 1 by construction
    }
    return e;
}

ChebyshevEmbedding make_chebyshev_embedding(int k, int d, double x_max, Rng& rng) {
    if (k < 1 || k > d) throw std::invalid_argument("make_chebyshev_embedding: need 1 <= k <= d");
    if (x_max <= 0.0) throw std::invalid_argument("make_chebyshev_embedding: x_max must be positive");
    DenseMatrix dirs = random_orthonormal_cols(d, k, rng);
    return ChebyshevEmbedding{k, x_max, std::move(dirs)};
}

int patch_width(const EmbeddingSpec& spec) {
    return std::visit(
        [](const auto& e) -> int {
            using T = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<T, MlpEmbedding>)
                return e.patch_size();
            else
                return 1;
        },
        spec);
}

int embedding_dim(const EmbeddingSpec& spec) {
    return std::visit(
        [](const auto& e) -> int {
            using T = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<T, QuantizationEmbedding>)
                return e.table.rows();
            else if constexpr (std::is_same_v<T, MlpEmbedding>)
                return e.hidden_dim();
            else if constexpr (std::is_same_v<T, SwishEmbedding>)
                return static_cast<int>(e.w.size());
            else
                return e.directions.rows();
        },
        spec);
}

double chebyshev_eval(int j, double x) {
    if (j < 0) throw std::invalid_argument("chebyshev_eval: j must be non-negative");
    if (std::fabs(x) > 1.0 + 1e-12) throw std::invalid_argument("chebyshev_eval: |x| > 1");
    x = std::min(1.0, std::max(-1.0, x));
    if (j == 0) return 1.0;
    double tm = 1.0, t = x;
    for (int i = 1; i < j; ++i) {
        double tn = 2.0 * x * t - tm;
        tm = t;
        t = tn;
    }
    return t;
}

namespace {

DenseMatrix embed_quantization(const QuantizationEmbedding& e, const DenseMatrix& patches) {
    const int L = patches.cols();
    DenseMatrix out(e.table.rows(), L);
    for (int j = 0; j < L; ++j) {
        int b = e.bin_of(patches(0, j));
        for (int i = 0; i < out.rows(); ++i) out(i, j) = e.table(i, b);
    }
    return out;
}

DenseMatrix embed_mlp(const MlpEmbedding& e, const DenseMatrix& patches) {
    DenseMatrix hidden = matmul(e.w1, patches);
    for (size_t i = 0; i < hidden.size(); ++i) hidden.data()[i] = e.activation(hidden.data()[i]);
    return add(matmul(e.w3, patches), matmul(e.w2, hidden));
}

DenseMatrix embed_swish(const SwishEmbedding& e, const DenseMatrix& patches) {
    const int d = static_cast<int>(e.w.size());
    const int L = patches.cols();
    DenseMatrix out(d, L);
    for (int j = 0; j < L; ++j) {
        double x = patches(0, j);
        double gate = x * x / (1.0 + std::exp(-e.beta * x));
        for (int i = 0; i < d; ++i) out(i, j) = e.w[i] * e.v[i] * gate;
    }
    return out;
}

DenseMatrix embed_chebyshev(const ChebyshevEmbedding& e, const DenseMatrix& patches) {
    const int d = e.directions.rows();
    const int L = patches.cols();
    DenseMatrix out(d, L);
    for (int j = 0; j < L; ++j) {
        // recurrence is unstable outside [-1, 1]; clamp out-of-range inputs
        double x = std::min(1.0, std::max(-1.0, patches(0, j) / e.x_max));
        double tm = 1.0, t = x;
        for (int jj = 1; jj <= e.rank; ++jj) {
            for (int i = 0; i < d; ++i) out(i, j) += e.directions(i, jj - 1) * t;
            double tn = 2.0 * x * t - tm;
            tm = t;
            t = tn;
        }
    }
    return out;
}

}  // namespace

DenseMatrix embed(const EmbeddingSpec& spec, const DenseMatrix& patches) {
    require_finite(patches, "embed");
    if (patches.rows() != patch_width(spec))
        throw std::invalid_argument("embed: patch width does not match the embedding");
    return std::visit(
        [&](const auto& e) -> DenseMatrix {
            using T = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<T, QuantizationEmbedding>)
                return embed_quantization(e, patches);
            else if constexpr (std::is_same_v<T, MlpEmbedding>)
                return embed_mlp(e, patches);
            else if constexpr (std::is_same_v<T, SwishEmbedding>)
                return embed_swish(e, patches);
            else
                return embed_chebyshev(e, patches);
        },
        spec);
}

DenseMatrix embed(const EmbeddingSpec& spec, const std::vector<double>& inputs) {
    DenseMatrix p(1, static_cast<int>(inputs.size()));
    for (size_t j = 0; j < inputs.size(); ++j) p(0, static_cast<int>(j)) = inputs[j];
    return embed(spec, p);
}

DecayBound DecayBound::bounded_variation(double nu, double var) {
    if (nu < 1.0 || var <= 0.0) throw std::invalid_argument("DecayBound: need nu >= 1, V > 0");
    DecayBound b{Kind::bounded_variation};
    b.nu = nu;
    b.var = var;
    return b;
}

DecayBound DecayBound::analytic(double rho, double mag) {
    if (rho <= 1.0 || mag <= 0.0) throw std::invalid_argument("DecayBound: need rho > 1, M > 0");
    DecayBound b{Kind::analytic};
    b.rho = rho;
    b.mag = mag;
    return b;
}

double DecayBound::value(int j, int d, int L) const {
    const double inf = std::numeric_limits<double>::infinity();
    const double sdl = std::sqrt(static_cast<double>(d) * L);
    if (kind == Kind::bounded_variation) {
        if (j <= nu + 1.0 || j > d - 1) return inf;
        return 2.0 * var * sdl / (std::numbers::pi * nu * std::pow(j - 1.0 - nu, nu));
    }
    if (j < 0 || j > d - 1) return inf;
    return 2.0 * mag * sdl * std::pow(rho, -j + 1.0) / (rho - 1.0);
}

DecayReport verify_decay_bound(const DenseMatrix& psi, const DecayBound& bound) {
    std::vector<double> sigma = singular_values(psi);
    const int d = psi.rows(), L = psi.cols();
    const double floor = sigma.empty() ? 0.0 : 1e-13 * sigma[0];
    DecayReport rep{{}, true};
    for (int j = 0; j + 1 < static_cast<int>(sigma.size()); ++j) {
        double b = bound.value(j, d, L);
        if (!std::isfinite(b)) continue;
        double s = sigma[j + 1];
        bool holds = (s <= floor) || (s <= b);
        rep.rows.push_back({j, s, b, holds});
        rep.all_hold = rep.all_hold && holds;
    }
    return rep;
}

double swish_bound(double beta, int d, int L, int j) {
    if (beta <= 0.0) throw std::invalid_argument("swish_bound: beta must be positive");
    constexpr double c = 4.0;  // fixed after one brute-force calibration run
    const double rho = 1.0 + std::numbers::pi / (2.0 * beta);
    return c * std::sqrt(static_cast<double>(d) * L) * (beta + 1.0 / beta) * std::pow(rho, -j + 1.0);
}

RankCertificate mlp_rank_certificate(const DenseMatrix& x, const MlpEmbedding& emb, double eps) {
    if (eps <= 0.0) throw std::invalid_argument("mlp_rank_certificate: eps must be positive");
    const int k = emb.patch_size();
    if (x.rows() != k) throw std::invalid_argument("mlp_rank_certificate: X must have k rows");
    DenseMatrix phi = embed_mlp(emb, x);
    double thresh = eps * spectral_norm(emb.w2) * spectral_norm(matmul(emb.w1, x));
    std::vector<double> sigma = singular_values(phi);
    int count = 0;
    for (double s : sigma)
        if (s > thresh) ++count;
    return RankCertificate{count, (1.0 + 1.0 / (eps * eps)) * k};
}

}  // namespace lra
