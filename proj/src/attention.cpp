#include "lra/attention.hpp"

#include <cmath>
#include <stdexcept>

#include "lra/kernels.hpp"
#include "lra/svd.hpp"

namespace lra {

AttentionWeights make_attention_weights(DenseMatrix wq, DenseMatrix wk, DenseMatrix wv, int heads) {
    const int d = wq.rows();
    if (wq.cols() != d || wk.rows() != d || wk.cols() != d || wv.rows() != d || wv.cols() != d)
        throw std::invalid_argument("AttentionWeights: matrices must be d x d");
    if (heads < 1 || d % heads != 0) throw std::invalid_argument("AttentionWeights: d must be divisible by heads");
    return AttentionWeights{std::move(wq), std::move(wk), std::move(wv), heads};
}

AttentionWeights random_attention_weights(int d, int heads, Rng& rng) {
    DenseMatrix wq(d, d), wk(d, d), wv(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            wq(i, j) = rng.gaussian();
            wk(i, j) = rng.gaussian();
            wv(i, j) = rng.gaussian();
        }
    return make_attention_weights(std::move(wq), std::move(wk), std::move(wv), heads);
}

AttentionWeights random_attention_weights_normalized(int d, int heads, Rng& rng, double qk_norm, double v_norm) {
    AttentionWeights w = random_attention_weights(d, heads, rng);
    const int dh = w.head_dim();
    for (int i = 0; i < heads; ++i) {
        DenseMatrix q = w.wq.row_block(i * dh, (i + 1) * dh);
        DenseMatrix k = w.wk.row_block(i * dh, (i + 1) * dh);
        double m = spectral_norm_power(matmul_tn(q, k));
        double s = std::sqrt(qk_norm / m);
        DenseMatrix v = w.wv.row_block(i * dh, (i + 1) * dh);
        double sv = v_norm / spectral_norm_power(v);
        for (int r = i * dh; r < (i + 1) * dh; ++r)
            for (int c = 0; c < d; ++c) {
                w.wq(r, c) *= s;
                w.wk(r, c) *= s;
                w.wv(r, c) *= sv;
            }
    }
    return w;
}

double qk_norm_certificate(const AttentionWeights& w, int head) {
    const int dh = w.head_dim();
    DenseMatrix q = w.wq.row_block(head * dh, (head + 1) * dh);
    DenseMatrix k = w.wk.row_block(head * dh, (head + 1) * dh);
    return spectral_norm_power(matmul_tn(q, k));
}

double v_norm_certificate(const AttentionWeights& w, int head) {
    const int dh = w.head_dim();
    return spectral_norm_power(w.wv.row_block(head * dh, (head + 1) * dh));
}

DenseMatrix softmax_cols(const DenseMatrix& t) {
    require_finite(t, "softmax_cols");
    DenseMatrix g(t.rows(), t.cols());
    const int m = t.rows(), n = t.cols();
#pragma omp parallel for schedule(static) if (n > 32)
    for (int j = 0; j < n; ++j) {
        double mx = t(0, j);
        for (int i = 1; i < m; ++i) mx = std::max(mx, t(i, j));
        double sum = 0.0;
        for (int i = 0; i < m; ++i) {
            double e = std::exp(t(i, j) - mx);
            g(i, j) = e;
            sum += e;
        }
        for (int i = 0; i < m; ++i) g(i, j) /= sum;
    }
    return g;
}

namespace {

// Attention of one head slice (rows [r0, r1)) with 1/sqrt(scale_dim) logits.
DenseMatrix head_attention(const DenseMatrix& u, const AttentionWeights& w, int r0, int r1, int scale_dim) {
    DenseMatrix q = w.wq.row_block(r0, r1);
    DenseMatrix k = w.wk.row_block(r0, r1);
    DenseMatrix v = w.wv.row_block(r0, r1);
    DenseMatrix qu = matmul(q, u);  // d_h x L
    DenseMatrix ku = matmul(k, u);
    DenseMatrix t = scale(matmul_tn(qu, ku), 1.0 / std::sqrt(static_cast<double>(scale_dim)));
    DenseMatrix g = softmax_cols(t);
    return matmul(matmul(v, u), g);
}

}  // namespace

DenseMatrix attention(const DenseMatrix& u, const AttentionWeights& w) {
    if (w.heads != 1) throw std::invalid_argument("attention: single-head form requires heads == 1");
    if (u.rows() != w.dim()) throw std::invalid_argument("attention: U row count must equal d");
    require_finite(u, "attention");
    return head_attention(u, w, 0, w.dim(), w.dim());
}

DenseMatrix mh_attention(const DenseMatrix& u, const AttentionWeights& w) {
    if (u.rows() != w.dim()) throw std::invalid_argument("mh_attention: U row count must equal d");
    require_finite(u, "mh_attention");
    const int d = w.dim(), h = w.heads, dh = w.head_dim();
    DenseMatrix out(d, u.cols());
    for (int i = 0; i < h; ++i) {
        DenseMatrix y = head_attention(u, w, i * dh, (i + 1) * dh, dh);
        for (int r = 0; r < dh; ++r)
            for (int c = 0; c < u.cols(); ++c) out(i * dh + r, c) = y(r, c);
    }
    return out;
}

CompressedAttention compress_on_vocabulary(const AttentionWeights& w, const DenseMatrix& xi, int d_tilde) {
    const int d = w.dim();
    if (xi.rows() != d) throw std::invalid_argument("compress_on_vocabulary: vocabulary must have d rows");
    if (d_tilde < 1 || d_tilde >= d) throw std::invalid_argument("compress_on_vocabulary: need 1 <= d_tilde < d");
    SvdResult f = svd(xi);
    DenseMatrix basis(d, d_tilde);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d_tilde; ++j) basis(i, j) = f.left(i, j);
    DenseMatrix proj = matmul_nt(basis, basis);  // U_dt U_dt^T
    AttentionWeights realized = make_attention_weights(matmul(w.wq, proj), matmul(w.wk, proj), matmul(w.wv, proj), w.heads);
    return CompressedAttention{std::move(basis), w, std::move(realized)};
}

std::pair<DenseMatrix, AttentionWeights> adversarial_incompressible(const SpectrumSpec& spec, int L, Rng& rng) {
    const int d = spec.size();
    if (L < d) throw std::invalid_argument("adversarial_incompressible: requires L >= d");
    DenseMatrix u(d, L);
    for (int j = 0; j < d; ++j) u(j, j) = spec[j];
    const double sd = spec[d - 1];
    const double gain = std::log(4.0 * d) / (sd * sd) * std::sqrt(static_cast<double>(d));
    const double root = std::sqrt(gain);
    DenseMatrix wq(d, d), wk(d, d);
    for (int j = 0; j < d; ++j) {
        wq(j, j) = root;
        wk(j, j) = root;
    }
    DenseMatrix wv = random_orthogonal(d, rng);
    return {std::move(u), make_attention_weights(std::move(wq), std::move(wk), std::move(wv), 1)};
}

bool SparseSketchFactors::sparsity_certificate(int d_h) const {
    auto row_nnz = [](const DenseMatrix& m, int r) {
        int c = 0;
        for (int j = 0; j < m.cols(); ++j)
            if (m(r, j) != 0.0) ++c;
        return c;
    };
    for (const auto* role : {&q, &v}) {
        for (const auto& f : *role)
            for (int r = 0; r < f.right.rows(); ++r)
                if (row_nnz(f.right, r) > d_h) return false;
    }
    for (const auto& f : k)
        for (int r = 0; r + 1 < f.right.rows(); ++r)  // last K-row is exempt
            if (row_nnz(f.right, r) > d_h) return false;
    return true;
}

SparseSketchInstance sparse_sketch_instance(const SpectrumSpec& spec, int heads, int d_tilde, int L) {
    const int d = spec.size();
    if (heads < 1 || d % heads != 0) throw std::invalid_argument("sparse_sketch_instance: d must be divisible by heads");
    const int dh = d / heads;
    if (d_tilde < 1 || d_tilde >= dh) throw std::invalid_argument("sparse_sketch_instance: need 1 <= d_tilde < d_h");
    if (dh < 2) throw std::invalid_argument("sparse_sketch_instance: head dimension must be at least 2");
    if (L < d) throw std::invalid_argument("sparse_sketch_instance: requires L >= d");

    // interleaved spectra: sigma^(i)_j = sigma_{(j-1)h + i}
    auto sig_head = [&](int i, int j) { return spec[(j - 1) * heads + (i - 1)]; };

    DenseMatrix u(d, L);
    for (int i = 1; i <= heads; ++i)
        for (int j = 1; j <= dh; ++j) {
            int pos = (i - 1) * dh + (j - 1);
            u(pos, pos) = sig_head(i, j);
        }

    // unit vectors with pairwise |v_a . v_b| < 1: planar fan over [0, pi/3]
    auto vvec = [&](int i, int j) {
        const int m = (i - 1) * dh + (j - 1);
        const double theta = (d == 1) ? 0.0 : (std::acos(-1.0) / 3.0) * m / (d - 1);
        std::vector<double> v(dh, 0.0);
        v[0] = std::cos(theta);
        v[1] = std::sin(theta);
        return v;
    };

    DenseMatrix wbar(dh, d);
    for (int i = 1; i <= heads; ++i)
        for (int j = 1; j <= dh; ++j) {
            std::vector<double> v = vvec(i, j);
            for (int r = 0; r < dh; ++r) wbar(r, (i - 1) * dh + (j - 1)) = v[r] / sig_head(i, j);
        }

    // the saturation limit of softmax(T): identity on the first d columns,
    // uniform on the zero-padding columns
    DenseMatrix g_limit(L, L);
    for (int j = 0; j < d; ++j) g_limit(j, j) = 1.0;
    for (int j = d; j < L; ++j)
        for (int i = 0; i < L; ++i) g_limit(i, j) = 1.0 / L;

    // proof's closeness target for the softmax factor
    double min_head_tail = sig_head(1, d_tilde + 1);
    for (int i = 2; i <= heads; ++i) min_head_tail = std::min(min_head_tail, sig_head(i, d_tilde + 1));
    const double cbound = 2.0;  // stability constant C of the shared-sketch claim
    double eps_target = std::min({spec[d_tilde] / (2.0 * (1.0 + cbound)), min_head_tail / (2.0 * spec[0] + 2.0 * spec[0]), 1.0});

    // double alpha until softmax(T) is eps-close to its limit
    double alpha = 16.0;
    DenseMatrix wq_head(dh, d);
    for (int doubling = 0; doubling < 60; ++doubling) {
        wq_head = scale(wbar, alpha);
        DenseMatrix qu = matmul(wq_head, u);
        DenseMatrix t = scale(matmul_tn(qu, qu), 1.0 / std::sqrt(static_cast<double>(dh)));
        DenseMatrix g = softmax_cols(t);
        if (frobenius_norm(sub(g, g_limit)) <= eps_target) break;
        alpha *= 2.0;
        if (doubling == 59) throw std::runtime_error("sparse_sketch_instance: softmax saturation did not converge");
    }

    DenseMatrix wq(d, d), wk(d, d), wv = DenseMatrix::identity(d);
    for (int i = 0; i < heads; ++i)
        for (int r = 0; r < dh; ++r)
            for (int c = 0; c < d; ++c) {
                wq(i * dh + r, c) = alpha * wbar(r, c);
                wk(i * dh + r, c) = alpha * wbar(r, c);
            }

    SparseSketchFactors factors;
    for (int i = 1; i <= heads; ++i) {
        const int blk = (i - 1) * dh;
        // anchor direction distinct from the head's own v_1..v_dt: the next
        // head's first vector, or v_{dt+1} when there is only one head
        std::vector<double> vstar = (heads > 1) ? vvec((i % heads) + 1, 1) : vvec(1, d_tilde + 1);

        SketchFactorPair vf{DenseMatrix(dh, d_tilde + 1), DenseMatrix(d_tilde + 1, d)};
        for (int j = 0; j < d_tilde; ++j) {
            vf.left(j, j) = 1.0;
            vf.right(j, blk + j) = 1.0;
        }
        factors.v.push_back(std::move(vf));

        SketchFactorPair qf{DenseMatrix(dh, d_tilde + 1), DenseMatrix(d_tilde + 1, d)};
        SketchFactorPair kf{DenseMatrix(dh, d_tilde + 1), DenseMatrix(d_tilde + 1, d)};
        for (int j = 1; j <= d_tilde; ++j) {
            std::vector<double> v = vvec(i, j);
            for (int r = 0; r < dh; ++r) {
                qf.left(r, j - 1) = alpha * v[r] / sig_head(i, j);
                kf.left(r, j - 1) = qf.left(r, j - 1);
            }
            qf.right(j - 1, blk + j - 1) = 1.0;
            kf.right(j - 1, blk + j - 1) = 1.0;
        }
        for (int r = 0; r < dh; ++r) {
            qf.left(r, d_tilde) = alpha * vstar[r];
            kf.left(r, d_tilde) = qf.left(r, d_tilde);
        }
        // query anchor: one non-identity column of U; the first head cannot
        // use global column 1 (inside its own identity block)
        const int anchor = (i == 1) ? d_tilde : 0;
        qf.right(d_tilde, anchor) = 1.0 / u(anchor, anchor);
        // key anchor row covers every non-identity column of U
        for (int c = 0; c < d; ++c) {
            if (c >= blk && c < blk + d_tilde) continue;
            kf.right(d_tilde, c) = 1.0 / u(c, c);
        }
        factors.q.push_back(std::move(qf));
        factors.k.push_back(std::move(kf));
    }

    DenseMatrix rq(d, d), rk(d, d), rv(d, d);
    for (int i = 0; i < heads; ++i) {
        DenseMatrix pq = matmul(factors.q[i].left, factors.q[i].right);
        DenseMatrix pk = matmul(factors.k[i].left, factors.k[i].right);
        DenseMatrix pv = matmul(factors.v[i].left, factors.v[i].right);
        for (int r = 0; r < dh; ++r)
            for (int c = 0; c < d; ++c) {
                rq(i * dh + r, c) = pq(r, c);
                rk(i * dh + r, c) = pk(r, c);
                rv(i * dh + r, c) = pv(r, c);
            }
    }

    SparseSketchInstance inst{std::move(u),
                              make_attention_weights(std::move(wq), std::move(wk), std::move(wv), heads),
                              std::move(factors),
                              make_attention_weights(std::move(rq), std::move(rk), std::move(rv), heads),
                              alpha,
                              eps_target};
    return inst;
}

DenseMatrix headwise_sparse_sketch_matrix(int d, int heads, int d_tilde, Rng& rng) {
    if (heads < 1 || d % heads != 0) throw std::invalid_argument("headwise_sparse_sketch: d must be divisible by heads");
    if (d_tilde < 1) throw std::invalid_argument("headwise_sparse_sketch: d_tilde must be positive");
    const int dh = d / heads;
    DenseMatrix w(heads * d_tilde, d);
    std::vector<int> perm(d);
    for (int r = 0; r < w.rows(); ++r) {
        for (int j = 0; j < d; ++j) perm[j] = j;
        // partial Fisher-Yates: first d_h entries are the nonzero positions
        for (int j = 0; j < dh; ++j) {
            int pick = j + rng.uniform_int(d - j);
            std::swap(perm[j], perm[pick]);
            w(r, perm[j]) = rng.gaussian();
        }
    }
    return w;
}

DenseMatrix headwise_sparse_sketch(const DenseMatrix& x, int heads, int d_tilde, Rng& rng) {
    DenseMatrix w = headwise_sparse_sketch_matrix(x.rows(), heads, d_tilde, rng);
    return matmul(w, x);
}

}  // namespace lra
