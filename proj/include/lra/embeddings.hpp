#pragma once

#include <functional>
#include <variant>
#include <vector>

#include "lra/matrix.hpp"
#include "lra/rng.hpp"

namespace lra {

/// Bin-table embedding: [-x_max, x_max] split into V equal left-closed bins
/// (last bin closed), one table column per bin, out-of-range inputs clamped
/// to the boundary bins.
struct QuantizationEmbedding {
    int bin_count;
    double x_max;
    DenseMatrix table;  // d x V

    int bin_of(double x) const;
};

/// Two-layer residual MLP patch embedding phi(x) = W3 x + W2 w(W1 x) with a
/// contractive activation |w(t)| <= |t|.
struct MlpEmbedding {
    DenseMatrix w1;  // d_f x k
    DenseMatrix w2;  // d x d_f
    DenseMatrix w3;  // d x k
    double (*activation)(double);

    int patch_size() const { return w1.cols(); }
    int hidden_dim() const { return w2.rows(); }
};

/// phi_i(x) = (w_i v_i x^2) / (1 + exp(-beta x)) with |w_i v_i| <= 1.
struct SwishEmbedding {
    std::vector<double> w;
    std::vector<double> v;
    double beta;
};

/// Rank-k embedding x -> sum_j T_j(x / x_max) u_j over orthonormal directions.
struct ChebyshevEmbedding {
    int rank;
    double x_max;
    DenseMatrix directions;  // d x k, orthonormal columns
};

using EmbeddingSpec = std::variant<QuantizationEmbedding, MlpEmbedding, SwishEmbedding, ChebyshevEmbedding>;

double relu(double x);

QuantizationEmbedding make_quantization_embedding(int bins, int d, double x_max, Rng& rng);
MlpEmbedding make_mlp_embedding(int k, int d, int d_f, Rng& rng);
SwishEmbedding make_swish_embedding(int d, double beta, Rng& rng);
ChebyshevEmbedding make_chebyshev_embedding(int k, int d, double x_max, Rng& rng);

int patch_width(const EmbeddingSpec& spec);
int embedding_dim(const EmbeddingSpec& spec);

/// Embed patches (one column per patch, patch_width(spec) rows) into d x L.
DenseMatrix embed(const EmbeddingSpec& spec, const DenseMatrix& patches);
/// Width-1 convenience: one scalar per patch.
DenseMatrix embed(const EmbeddingSpec& spec, const std::vector<double>& inputs);

/// Chebyshev polynomial T_j(x) by the three-term recurrence; |x| <= 1 + 1e-12.
double chebyshev_eval(int j, double x);

/// Singular-value decay bound of the smooth-embedding theorem.
struct DecayBound {
    enum class Kind { bounded_variation, analytic };
    Kind kind;
    double nu = 1.0;   // derivative order (bounded-variation kind)
    double var = 1.0;  // total variation V
    double rho = 2.0;  // Bernstein ellipse radius (analytic kind), > 1
    double mag = 1.0;  // magnitude M on the ellipse

    static DecayBound bounded_variation(double nu, double var);
    static DecayBound analytic(double rho, double mag);

    /// Bound on sigma_{j+1} for a d x L sample matrix; +inf where the bound
    /// does not apply (j outside its valid range).
    double value(int j, int d, int L) const;
};

struct DecayCheckRow {
    int j;             // bound index: compares sigma_{j+1}
    double sigma;      // measured sigma_{j+1}
    double bound;      // bound value
    bool holds;
};

struct DecayReport {
    std::vector<DecayCheckRow> rows;
    bool all_hold;
};

/// Checks sigma_{j+1}(Psi) against the decay bound for every valid j.
/// Singular values below the SVD noise floor (1e-13 * sigma_1) count as zero
/// and trivially hold; the exact values there are rounding artifacts.
DecayReport verify_decay_bound(const DenseMatrix& psi, const DecayBound& bound);

/// Calibrated closed-form bound on sigma_{j+1} of a swish embedding:
/// c * sqrt(dL) (beta + 1/beta) (1 + pi/(2 beta))^{-j+1} with c = 4 fixed
/// after one brute-force calibration run.
double swish_bound(double beta, int d, int L, int j);

/// Counts sigma_j(Phi(X)) > eps ||W2||_2 ||W1 X||_2 and returns the count
/// together with the (1 + eps^-2) k certificate bound.
struct RankCertificate {
    int count;
    double bound;
};
RankCertificate mlp_rank_certificate(const DenseMatrix& x, const MlpEmbedding& emb, double eps);

}  // namespace lra
