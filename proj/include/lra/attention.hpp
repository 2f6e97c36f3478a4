#pragma once

#include <array>
#include <utility>
#include <vector>

#include "lra/matrix.hpp"
#include "lra/rng.hpp"
#include "lra/spectral.hpp"

namespace lra {

/// Query/key/value triple with a head count. Head i acts through the row
/// slice rows [i*d_h, (i+1)*d_h) of each matrix, d_h = d / heads.
struct AttentionWeights {
    DenseMatrix wq, wk, wv;  // each d x d
    int heads = 1;

    int dim() const { return wq.rows(); }
    int head_dim() const { return wq.rows() / heads; }
};

AttentionWeights make_attention_weights(DenseMatrix wq, DenseMatrix wk, DenseMatrix wv, int heads);

/// i.i.d. standard Gaussian triple.
AttentionWeights random_attention_weights(int d, int heads, Rng& rng);

/// Gaussian triple rescaled so that per head ||W_Q^(i)^T W_K^(i)||_2 =
/// qk_norm and ||W_V^(i)||_2 = v_norm (the theorems' norm hypotheses).
AttentionWeights random_attention_weights_normalized(int d, int heads, Rng& rng, double qk_norm, double v_norm);

/// On-demand norm certificates for one head slice (power iteration).
double qk_norm_certificate(const AttentionWeights& w, int head);
double v_norm_certificate(const AttentionWeights& w, int head);

/// Column softmax with per-column max subtraction.
DenseMatrix softmax_cols(const DenseMatrix& t);

/// Single-head attention W_V U softmax(U^T W_Q^T W_K U / sqrt(d)).
DenseMatrix attention(const DenseMatrix& u, const AttentionWeights& w);

/// Multi-head attention: vertical concatenation of per-head attentions, each
/// with 1/sqrt(d_h) scaling inside the softmax.
DenseMatrix mh_attention(const DenseMatrix& u, const AttentionWeights& w);

/// Vocabulary-projected compression W -> W U_dt U_dt^T against the top
/// d_tilde left singular subspace of the vocabulary Xi.
struct CompressedAttention {
    DenseMatrix projector_basis;  // d x d_tilde, orthonormal columns
    AttentionWeights base;
    AttentionWeights realized;  // W U_dt U_dt^T for each of Q/K/V
};

CompressedAttention compress_on_vocabulary(const AttentionWeights& w, const DenseMatrix& xi, int d_tilde);

/// Diagonal-spectrum instance on which no rank-d_tilde value matrix can beat
/// error sigma_{d_tilde+1}/4: U = [diag(spec) | 0], W_Q^T W_K =
/// log(4d) sigma_d^-2 sqrt(d) I, W_V sampled orthogonal. Single head.
std::pair<DenseMatrix, AttentionWeights> adversarial_incompressible(const SpectrumSpec& spec, int L, Rng& rng);

/// Per-head, per-role factor pair; realized slice is left * right.
struct SketchFactorPair {
    DenseMatrix left;   // d_h x (d_tilde + 1)
    DenseMatrix right;  // (d_tilde + 1) x d
};

struct SparseSketchFactors {
    std::vector<SketchFactorPair> q, k, v;  // one entry per head

    /// Every right-factor row has at most d_h nonzeros, except the last row
    /// of each K right factor (the designated dense row).
    bool sparsity_certificate(int d_h) const;
};

/// The interleaved-spectrum instance separating shared sketches from
/// head-dependent sparse ones. `weights` is the exact instance; `realized`
/// stacks the sparse per-head factor products. The saturation scale alpha is
/// doubled until softmax(T) is within eps_target of its limit.
struct SparseSketchInstance {
    DenseMatrix u;
    AttentionWeights weights;
    SparseSketchFactors factors;
    AttentionWeights realized;
    double alpha;
    double eps_target;
};

SparseSketchInstance sparse_sketch_instance(const SpectrumSpec& spec, int heads, int d_tilde, int L);

/// Random head-blocked sparse sketch: heads blocks of d_tilde rows, each row
/// with exactly d_h Gaussian nonzeros at random positions.
DenseMatrix headwise_sparse_sketch_matrix(int d, int heads, int d_tilde, Rng& rng);

/// Returns W_{2,h} X for rowspace_distance evaluation.
DenseMatrix headwise_sparse_sketch(const DenseMatrix& x, int heads, int d_tilde, Rng& rng);

}  // namespace lra
