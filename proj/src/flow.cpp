#include "lra/flow.hpp"

#include <cmath>
#include <stdexcept>

#include "lra/kernels.hpp"
#include "lra/svd.hpp"

namespace lra {

namespace {
const double kE2 = std::exp(2.0);
}

DenseMatrix residual_layer(const DenseMatrix& u, const ResidualLayerConfig& cfg) {
    if (cfg.depth < 1) throw std::invalid_argument("residual_layer: depth must be >= 1");
    if (u.rows() != cfg.weights.dim()) throw std::invalid_argument("residual_layer: dimension mismatch");
    return add(u, scale(mh_attention(u, cfg.weights), 1.0 / std::sqrt(static_cast<double>(cfg.depth))));
}

double flow_upper_bound(const SpectrumSpec& spec, int k, int h, int depth) {
    if (k < 1 || k > spec.size()) throw std::invalid_argument("flow_upper_bound: k out of range");
    if (std::fabs(spec[0] - 1.0) > 1e-9) throw std::invalid_argument("flow_upper_bound: requires sigma_1 = 1");
    double best = std::numeric_limits<double>::infinity();
    for (int j = 1; j <= k; ++j) {
        double v = spec[k - j] + kE2 * h / std::sqrt(static_cast<double>(depth)) * spec[(j - 1) / h];
        best = std::min(best, v);
    }
    return 2.0 * best;
}

FlowReport check_flow_upper(const DenseMatrix& u, const ResidualLayerConfig& cfg) {
    FlowReport rep{true, "", {}, true};
    const int h = cfg.weights.heads;
    const double dh = cfg.weights.head_dim();
    if (std::sqrt(static_cast<double>(cfg.depth)) < 2.0 * kE2 * h) {
        rep.in_regime = false;
        rep.regime_note = "sqrt(D) < 2 e^2 h";
    }
    for (int i = 0; i < h && rep.in_regime; ++i) {
        if (qk_norm_certificate(cfg.weights, i) > std::sqrt(dh) * (1.0 + 1e-9)) {
            rep.in_regime = false;
            rep.regime_note = "per-head QK norm exceeds sqrt(d_h)";
        } else if (v_norm_certificate(cfg.weights, i) > 1.0 + 1e-9) {
            rep.in_regime = false;
            rep.regime_note = "per-head value norm exceeds 1";
        }
    }
    std::vector<double> su = singular_values(u);
    if (std::fabs(su[0] - 1.0) > 1e-9) {
        rep.in_regime = false;
        rep.regime_note = "sigma_1(U) != 1";
    }
    if (!rep.in_regime) return rep;

    SpectrumSpec spec(su);
    std::vector<double> sz = singular_values(residual_layer(u, cfg));
    for (int k = 1; k <= static_cast<int>(su.size()); ++k) {
        double ratio = sz[k - 1] / sz[0];
        double bound = flow_upper_bound(spec, k, h, cfg.depth);
        bool holds = ratio <= bound * (1.0 + 1e-12);
        rep.rows.push_back({k, ratio, bound, holds});
        rep.all_hold = rep.all_hold && holds;
    }
    return rep;
}

double flow_lower_bound(const SpectrumSpec& spec, int k, int i, int h, int depth) {
    const int d = spec.size();
    if (h < 1 || d % h != 0) throw std::invalid_argument("flow_lower_bound: d must be divisible by h");
    const int dh = d / h;
    if (i < 1 || i > h) throw std::invalid_argument("flow_lower_bound: head index out of range");
    const int kci = (k + i - 1) / i;
    if (kci >= dh) throw std::invalid_argument("flow_lower_bound: (k, i) not admissible (ceil(k/i) >= d_h)");
    double damped = (kci != dh) ? spec[kci - 1] / std::sqrt(static_cast<double>(depth)) : 0.0;
    return 0.25 * (spec[(i - 1) * dh + kci - 1] + damped);
}

std::pair<DenseMatrix, AttentionWeights> adversarial_flow_instance(const SpectrumSpec& spec, int h, int L, int depth) {
    const int d = spec.size();
    if (h < 1 || d % h != 0) throw std::invalid_argument("adversarial_flow_instance: d must be divisible by h");
    const int dh = d / h;
    if (L < d) throw std::invalid_argument("adversarial_flow_instance: requires L >= d");
    if (std::fabs(spec[0] - 1.0) > 1e-9) throw std::invalid_argument("adversarial_flow_instance: requires sigma_1 = 1");
    if (depth < 1) throw std::invalid_argument("adversarial_flow_instance: depth must be >= 1");

    DenseMatrix u(d, L);
    for (int j = 0; j < d; ++j) u(j, j) = spec[j];

    // limit attention pattern per head: identity into the head's block, last
    // row catching every other input column, uniform on the zero padding
    auto g_limit = [&](int i) {
        DenseMatrix g(L, L);
        for (int j = 0; j < dh; ++j) g(j, (i - 1) * dh + j) = 1.0;
        for (int c = 0; c < d; ++c)
            if (c < (i - 1) * dh || c >= i * dh) g(dh - 1, c) = 1.0;
        for (int c = d; c < L; ++c)
            for (int r = 0; r < L; ++r) g(r, c) = 1.0 / L;
        return g;
    };

    auto build = [&](double alpha) {
        DenseMatrix wq(d, d), wk(d, d), wv(d, d);
        for (int i = 1; i <= h; ++i) {
            const int r0 = (i - 1) * dh;
            for (int j = 0; j < dh; ++j) wq(r0 + j, j) = alpha / spec[j];
            for (int j = 0; j < dh; ++j) wk(r0 + j, (i - 1) * dh + j) = 1.0 / spec[(i - 1) * dh + j];
            for (int c = 0; c < d; ++c)
                if (c < (i - 1) * dh || c >= i * dh) wk(r0 + dh - 1, c) = 1.0 / spec[c];
            for (int j = 0; j + 1 < dh; ++j) wv(r0 + j, j) = 1.0;
        }
        return make_attention_weights(std::move(wq), std::move(wk), std::move(wv), h);
    };

    double alpha = 64.0;
    for (int doubling = 0; doubling < 60; ++doubling) {
        AttentionWeights w = build(alpha);
        double worst = 0.0;
        for (int i = 1; i <= h; ++i) {
            DenseMatrix q = w.wq.row_block((i - 1) * dh, i * dh);
            DenseMatrix k = w.wk.row_block((i - 1) * dh, i * dh);
            DenseMatrix t = scale(matmul_tn(matmul(q, u), matmul(k, u)), 1.0 / std::sqrt(static_cast<double>(dh)));
            worst = std::max(worst, frobenius_norm(sub(softmax_cols(t), g_limit(i))));
        }
        if (worst <= 1e-9) return {std::move(u), build(alpha)};
        alpha *= 2.0;
    }
    throw std::runtime_error("adversarial_flow_instance: softmax saturation did not converge");
}

RankTrajectory rank_trajectory(const std::vector<ResidualLayerConfig>& model, const DenseMatrix& u0,
                               const std::vector<double>& eps_grid) {
    for (size_t li = 0; li < model.size(); ++li)
        if (model[li].weights.dim() != u0.rows())
            throw std::invalid_argument("rank_trajectory: all layers must share the input dimension");
    RankTrajectory traj;
    traj.eps_grid = eps_grid;
    DenseMatrix u = u0;
    traj.spectra.push_back(singular_values(u));
    for (const auto& cfg : model) {
        u = residual_layer(u, cfg);
        traj.spectra.push_back(singular_values(u));
    }
    for (const auto& s : traj.spectra) {
        std::vector<int> r;
        r.reserve(eps_grid.size());
        for (double eps : eps_grid) r.push_back(eps_rank(s, eps));
        traj.eps_ranks.push_back(std::move(r));
    }
    return traj;
}

}  // namespace lra
