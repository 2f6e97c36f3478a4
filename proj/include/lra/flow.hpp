#pragma once

#include <string>
#include <utility>
#include <vector>

#include "lra/attention.hpp"
#include "lra/matrix.hpp"
#include "lra/spectral.hpp"

namespace lra {

/// One residual attention layer Z = U + MH-Attention(U)/sqrt(depth).
struct ResidualLayerConfig {
    int depth;  // D, the model's layer count (sets the 1/sqrt(D) damping)
    AttentionWeights weights;
};

DenseMatrix residual_layer(const DenseMatrix& u, const ResidualLayerConfig& cfg);

/// 2 min_{1<=j<=k} (sigma_{k-j+1} + e^2 h / sqrt(D) * sigma_{floor((j-1)/h)+1});
/// requires sigma_1 = 1.
double flow_upper_bound(const SpectrumSpec& spec, int k, int h, int depth);

struct FlowCheckRow {
    int k;
    double ratio;  // sigma_k(Z) / sigma_1(Z)
    double bound;
    bool holds;
};

struct FlowReport {
    bool in_regime;           // sqrt(D) >= 2 e^2 h, norm hypotheses certified, sigma_1(U) = 1
    std::string regime_note;  // which hypothesis failed, when out of regime
    std::vector<FlowCheckRow> rows;
    bool all_hold;            // meaningful only when in_regime
};

/// Exhaustive k-scan of the residual-layer output against flow_upper_bound.
/// Hypothesis violations yield in_regime = false rather than bound failures.
FlowReport check_flow_upper(const DenseMatrix& u, const ResidualLayerConfig& cfg);

/// Diagonal input and permutation-saturated heads achieving the lower bound
/// sigma_k(Z)/sigma_1(Z) >= (1/4)(sigma_{(i-1)d_h+ceil(k/i)} + 1_{ceil(k/i) != d_h} sigma_{ceil(k/i)}/sqrt(D))
/// for every head count i <= h with ceil(k/i) < d_h. The softmax saturation
/// scale is doubled until the attention pattern is within 1e-9 of its limit.
std::pair<DenseMatrix, AttentionWeights> adversarial_flow_instance(const SpectrumSpec& spec, int h, int L, int depth);

/// Proof-form lower bound value (with the indicator on the damped term).
double flow_lower_bound(const SpectrumSpec& spec, int k, int i, int h, int depth);

/// Spectra and eps-ranks of the input and of every layer output.
struct RankTrajectory {
    std::vector<std::vector<double>> spectra;  // layer count + 1 entries
    std::vector<double> eps_grid;
    std::vector<std::vector<int>> eps_ranks;  // [layer][grid index]
};

RankTrajectory rank_trajectory(const std::vector<ResidualLayerConfig>& model, const DenseMatrix& u0,
                               const std::vector<double>& eps_grid);

}  // namespace lra
