#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lra/attention.hpp"
#include "lra/embeddings.hpp"
#include "lra/matrix.hpp"

namespace lra {

/// Layer-dependent compressed rank d~_i = ceil(d~_0 (1+i)^alpha).
struct RankSchedule {
    double d_tilde0;
    double alpha;
};

int rank_at(const RankSchedule& s, int layer_index);

/// W stored as left (d x r) * right (r x d).
struct FactoredMatrix {
    DenseMatrix left, right;
    DenseMatrix realize() const;
    int rank() const { return left.cols(); }
};

/// One attention layer. Each of the Q/K/V slots is stored either dense or as
/// a low-rank factor pair; the choice is per matrix.
struct ToyLayer {
    std::array<DenseMatrix, 3> dense;                    // Q, K, V
    std::array<std::optional<FactoredMatrix>, 3> fac;

    bool slot_factored(int k) const { return fac[k].has_value(); }
    bool any_factored() const { return slot_factored(0) || slot_factored(1) || slot_factored(2); }
    DenseMatrix realize_slot(int k) const { return slot_factored(k) ? fac[k]->realize() : dense[k]; }
    AttentionWeights realize(int heads) const;
    long param_count(int d) const;
};

/// Embed -> residual attention layers -> mean-pool -> scalar readout.
struct ToyModel {
    EmbeddingSpec embedding;
    std::vector<ToyLayer> layers;
    int heads;
    DenseMatrix readout;  // 1 x d

    int dim() const { return readout.cols(); }
    int depth() const { return static_cast<int>(layers.size()); }
};

struct CompressionReport {
    std::vector<std::vector<int>> kept_ranks;      // [layer][Q,K,V]
    std::vector<std::vector<double>> rel_errors;   // per-matrix sigma_{r+1}/sigma_1
    long params_before = 0;
    long params_after = 0;
    double size_ratio = 1.0;
    double probe_output_delta = 0.0;  // max |forward change| on the probe batch
};

/// Truncated-SVD compression of every attention matrix at relative tolerance
/// eps. Matrices stay dense when the factored form would not shrink them
/// (2 r d >= d^2). Forward drift is measured on a small deterministic probe.
std::pair<ToyModel, CompressionReport> compress_model(const ToyModel& m, double eps);

/// Rank-scheduled factored model, Gaussian factors at scale 1/sqrt(d).
ToyModel build_factored(int d, int layer_count, int heads, const RankSchedule& schedule, const EmbeddingSpec& embedding,
                        Rng& rng);

/// Dense model with matching architecture.
ToyModel build_dense(int d, int layer_count, int heads, const EmbeddingSpec& embedding, Rng& rng);

/// Attention-parameter ratio: compressed / original.
double size_ratio(const ToyModel& compressed, const ToyModel& original);

double forward(const ToyModel& m, const std::vector<double>& series);

struct TrainResult {
    ToyModel model;
    std::vector<double> loss_curve;  // loss before each accepted step, then final
};

struct SineSample {
    std::vector<double> series;
    double target;
};

/// Sums of up to `components` sinusoids plus N(0, 0.01) noise; target is the
/// next value after the series window.
std::vector<SineSample> make_sine_dataset(int count, int length, int components, Rng& rng);

double dataset_loss(const ToyModel& m, const std::vector<SineSample>& data);

/// Full-batch gradient descent with central finite differences
/// (h = 1e-5 (1 + |theta|)) and a halving-on-increase step policy, so the
/// recorded loss curve never increases. Trains attention weights (dense or
/// factored) and the readout; the embedding is fixed.
TrainResult train_toy(const ToyModel& m, const std::vector<SineSample>& data, int steps, double step_size);

/// Versioned structured-text model format; exact round-trip (hex floats).
std::string save_model(const ToyModel& m);
ToyModel load_model(const std::string& text);
void save_model_file(const ToyModel& m, const std::string& path);
ToyModel load_model_file(const std::string& path);

}  // namespace lra
