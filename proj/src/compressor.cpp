#include "lra/compressor.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "lra/kernels.hpp"
#include "lra/svd.hpp"

namespace lra {

int rank_at(const RankSchedule& s, int layer_index) {
    if (s.d_tilde0 <= 0.0 || s.alpha < 0.0) throw std::invalid_argument("rank_at: need d_tilde0 > 0 and alpha >= 0");
    if (layer_index < 0) throw std::invalid_argument("rank_at: layer index must be >= 0");
    return static_cast<int>(std::ceil(s.d_tilde0 * std::pow(1.0 + layer_index, s.alpha)));
}

DenseMatrix FactoredMatrix::realize() const { return matmul(left, right); }

AttentionWeights ToyLayer::realize(int heads) const {
    return make_attention_weights(realize_slot(0), realize_slot(1), realize_slot(2), heads);
}

long ToyLayer::param_count(int d) const {
    long p = 0;
    for (int k = 0; k < 3; ++k) {
        if (slot_factored(k))
            p += static_cast<long>(fac[k]->left.size()) + static_cast<long>(fac[k]->right.size());
        else
            p += static_cast<long>(d) * d;
    }
    return p;
}

namespace {

DenseMatrix gaussian_matrix(int m, int n, double scale_, Rng& rng) {
    DenseMatrix a(m, n);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = scale_ * rng.gaussian();
    return a;
}

std::vector<double> probe_series(int length, int which) {
    std::vector<double> s(length);
    for (int t = 0; t < length; ++t) s[t] = std::sin(0.3 * (which + 1) * t) + 0.5 * std::cos(0.11 * t + which);
    return s;
}

}  // namespace

std::pair<ToyModel, CompressionReport> compress_model(const ToyModel& m, double eps) {
    if (eps <= 0.0) throw std::invalid_argument("compress_model: eps must be positive");
    for (const auto& layer : m.layers)
        if (layer.any_factored()) throw std::invalid_argument("compress_model: model is already factored");
    const int d = m.dim();
    ToyModel out = m;
    CompressionReport rep;
    const int probe_len = 24;
    std::vector<double> before;
    for (int p = 0; p < 3; ++p) before.push_back(forward(m, probe_series(probe_len, p)));

    for (auto& layer : out.layers) {
        std::vector<int> ranks;
        std::vector<double> errs;
        for (int k = 0; k < 3; ++k) {
            SvdResult f = svd(layer.dense[k]);
            int kept = eps_rank(f.singular_values, eps);
            double rel = (kept < static_cast<int>(f.singular_values.size()) && f.singular_values[0] > 0.0)
                             ? f.singular_values[kept] / f.singular_values[0]
                             : 0.0;
            ranks.push_back(kept);
            errs.push_back(rel);
            if (2L * kept * d >= static_cast<long>(d) * d) continue;  // dense storage is smaller; keep it
            FactoredMatrix fm{DenseMatrix(d, kept), DenseMatrix(kept, d)};
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < kept; ++j) fm.left(i, j) = f.left(i, j) * f.singular_values[j];
            for (int j = 0; j < kept; ++j)
                for (int i = 0; i < d; ++i) fm.right(j, i) = f.right(i, j);
            layer.fac[k] = std::move(fm);
            layer.dense[k] = DenseMatrix();
        }
        rep.kept_ranks.push_back(ranks);
        rep.rel_errors.push_back(errs);
    }

    rep.params_before = 3L * d * d * m.depth();
    rep.params_after = 0;
    for (const auto& layer : out.layers) rep.params_after += layer.param_count(d);
    rep.size_ratio = static_cast<double>(rep.params_after) / static_cast<double>(rep.params_before);
    for (int p = 0; p < 3; ++p)
        rep.probe_output_delta = std::max(rep.probe_output_delta, std::fabs(forward(out, probe_series(probe_len, p)) - before[p]));
    return {std::move(out), std::move(rep)};
}

ToyModel build_factored(int d, int layer_count, int heads, const RankSchedule& schedule, const EmbeddingSpec& embedding,
                        Rng& rng) {
    if (embedding_dim(embedding) != d) throw std::invalid_argument("build_factored: embedding dimension mismatch");
    ToyModel m{embedding, {}, heads, DenseMatrix(1, d)};
    const double s = 1.0 / std::sqrt(static_cast<double>(d));
    for (int li = 0; li < layer_count; ++li) {
        int r = std::min(std::max(rank_at(schedule, li), 1), d);  // schedule clamped to [1, d]
        ToyLayer layer;
        for (int k = 0; k < 3; ++k)
            layer.fac[k] = FactoredMatrix{gaussian_matrix(d, r, s, rng), gaussian_matrix(r, d, s, rng)};
        m.layers.push_back(std::move(layer));
    }
    m.readout = gaussian_matrix(1, d, s, rng);
    return m;
}

ToyModel build_dense(int d, int layer_count, int heads, const EmbeddingSpec& embedding, Rng& rng) {
    if (embedding_dim(embedding) != d) throw std::invalid_argument("build_dense: embedding dimension mismatch");
    ToyModel m{embedding, {}, heads, DenseMatrix(1, d)};
    const double s = 1.0 / std::sqrt(static_cast<double>(d));
    for (int li = 0; li < layer_count; ++li) {
        ToyLayer layer;
        for (int k = 0; k < 3; ++k) layer.dense[k] = gaussian_matrix(d, d, s, rng);
        m.layers.push_back(std::move(layer));
    }
    m.readout = gaussian_matrix(1, d, s, rng);
    return m;
}

double size_ratio(const ToyModel& compressed, const ToyModel& original) {
    if (compressed.depth() != original.depth() || compressed.dim() != original.dim())
        throw std::invalid_argument("size_ratio: architectures do not match");
    const int d = original.dim();
    long after = 0;
    for (const auto& layer : compressed.layers) after += layer.param_count(d);
    long before = 0;
    for (const auto& layer : original.layers) before += layer.param_count(d);
    return static_cast<double>(after) / static_cast<double>(before);
}

double forward(const ToyModel& m, const std::vector<double>& series) {
    if (series.empty()) throw std::invalid_argument("forward: series must be non-empty");
    for (double v : series)
        if (!std::isfinite(v)) throw std::invalid_argument("forward: non-finite input");
    const int k = patch_width(m.embedding);
    if (static_cast<int>(series.size()) % k != 0)
        throw std::invalid_argument("forward: series length must be divisible by the patch width");
    const int L = static_cast<int>(series.size()) / k;
    DenseMatrix patches(k, L);
    for (int j = 0; j < L; ++j)
        for (int i = 0; i < k; ++i) patches(i, j) = series[static_cast<size_t>(j) * k + i];
    DenseMatrix u = embed(m.embedding, patches);
    const int depth = std::max(m.depth(), 1);
    for (const auto& layer : m.layers) {
        AttentionWeights w = layer.realize(m.heads);
        u = add(u, scale(mh_attention(u, w), 1.0 / std::sqrt(static_cast<double>(depth))));
    }
    double out = 0.0;
    for (int i = 0; i < u.rows(); ++i) {
        double mean = 0.0;
        for (int j = 0; j < u.cols(); ++j) mean += u(i, j);
        out += m.readout(0, i) * (mean / u.cols());
    }
    return out;
}

std::vector<SineSample> make_sine_dataset(int count, int length, int components, Rng& rng) {
    std::vector<SineSample> data;
    data.reserve(count);
    for (int n = 0; n < count; ++n) {
        int c = 1 + rng.uniform_int(components);
        std::vector<double> amp(c), omega(c), phase(c);
        for (int i = 0; i < c; ++i) {
            amp[i] = rng.uniform(0.5, 1.5);
            omega[i] = rng.uniform(0.2, 1.0);
            phase[i] = rng.uniform(0.0, 6.283185307179586);
        }
        SineSample s;
        s.series.resize(length);
        for (int t = 0; t <= length; ++t) {
            double v = 0.0;
            for (int i = 0; i < c; ++i) v += amp[i] * std::sin(omega[i] * t + phase[i]);
            v += 0.01 * rng.gaussian();
            if (t < length)
                s.series[t] = v;
            else
                s.target = v;
        }
        data.push_back(std::move(s));
    }
    return data;
}

double dataset_loss(const ToyModel& m, const std::vector<SineSample>& data) {
    double loss = 0.0;
    for (const auto& s : data) {
        double e = forward(m, s.series) - s.target;
        loss += e * e;
    }
    return loss / data.size();
}

namespace {

// Flat view over the trainable parameters (attention weights + readout).
std::vector<DenseMatrix*> trainable(ToyModel& m) {
    std::vector<DenseMatrix*> ps;
    for (auto& layer : m.layers) {
        for (int k = 0; k < 3; ++k) {
            if (layer.slot_factored(k)) {
                ps.push_back(&layer.fac[k]->left);
                ps.push_back(&layer.fac[k]->right);
            } else {
                ps.push_back(&layer.dense[k]);
            }
        }
    }
    ps.push_back(&m.readout);
    return ps;
}

long total_params(ToyModel& m) {
    long n = 0;
    for (DenseMatrix* p : trainable(m)) n += static_cast<long>(p->size());
    return n;
}

}  // namespace

TrainResult train_toy(const ToyModel& m, const std::vector<SineSample>& data, int steps, double step_size) {
    if (steps < 0) throw std::invalid_argument("train_toy: steps must be >= 0");
    if (data.empty()) throw std::invalid_argument("train_toy: empty dataset");
    TrainResult res{m, {}};
    if (total_params(res.model) > 50000) throw std::invalid_argument("train_toy: model too large for finite differences");
    double loss = dataset_loss(res.model, data);
    res.loss_curve.push_back(loss);
    if (steps == 0) return res;

    const double initial = loss;
    double eta = step_size;
    std::vector<DenseMatrix*> params = trainable(res.model);
    for (int step = 0; step < steps; ++step) {
        // central finite differences, h scaled per coordinate
        std::vector<std::vector<double>> grad(params.size());
        for (size_t p = 0; p < params.size(); ++p) {
            DenseMatrix& w = *params[p];
            grad[p].resize(w.size());
            for (size_t i = 0; i < w.size(); ++i) {
                double theta = w.data()[i];
                double h = 1e-5 * (1.0 + std::fabs(theta));
                w.data()[i] = theta + h;
                double lp = dataset_loss(res.model, data);
                w.data()[i] = theta - h;
                double lm = dataset_loss(res.model, data);
                w.data()[i] = theta;
                grad[p][i] = (lp - lm) / (2.0 * h);
            }
        }
        // halving-on-increase: shrink the step until the loss does not grow
        while (true) {
            for (size_t p = 0; p < params.size(); ++p)
                for (size_t i = 0; i < params[p]->size(); ++i) params[p]->data()[i] -= eta * grad[p][i];
            double cand = dataset_loss(res.model, data);
            if (cand <= loss) {
                loss = cand;
                eta *= 1.05;
                break;
            }
            for (size_t p = 0; p < params.size(); ++p)
                for (size_t i = 0; i < params[p]->size(); ++i) params[p]->data()[i] += eta * grad[p][i];
            eta *= 0.5;
            if (eta < 1e-12) break;  // step floor reached; keep the current point
        }
        res.loss_curve.push_back(loss);
        if (!std::isfinite(loss) || loss > 1e6 * std::max(initial, 1e-30))
            throw std::runtime_error("train_toy: diverged (loss " + std::to_string(loss) + " from " + std::to_string(initial) + ")");
    }
    return res;
}

// ---------------------------------------------------------------------------
// save / load: line-oriented text, version tag, hex floats for exactness

namespace {

void put_matrix(std::ostream& os, const char* name, const DenseMatrix& m) {
    os << name << ' ' << m.rows() << ' ' << m.cols();
    char buf[40];
    for (size_t i = 0; i < m.size(); ++i) {
        std::snprintf(buf, sizeof buf, " %a", m.data()[i]);
        os << buf;
    }
    os << '\n';
}

DenseMatrix get_matrix(std::istream& is, const std::string& expect) {
    std::string tag;
    is >> tag;
    if (tag != expect) throw std::invalid_argument("load_model: expected '" + expect + "', got '" + tag + "'");
    int rows, cols;
    if (!(is >> rows >> cols)) throw std::invalid_argument("load_model: bad matrix header");
    DenseMatrix m(rows, cols);
    std::string tok;
    for (size_t i = 0; i < m.size(); ++i) {
        if (!(is >> tok)) throw std::invalid_argument("load_model: truncated matrix data");
        m.data()[i] = std::strtod(tok.c_str(), nullptr);
    }
    return m;
}

void put_double(std::ostream& os, double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%a", v);
    os << buf;
}

double get_double(std::istream& is) {
    std::string tok;
    if (!(is >> tok)) throw std::invalid_argument("load_model: expected a number");
    return std::strtod(tok.c_str(), nullptr);
}

}  // namespace

std::string save_model(const ToyModel& m) {
    std::ostringstream os;
    os << "lra-toymodel 1\n";
    os << "heads " << m.heads << "\n";
    if (std::holds_alternative<QuantizationEmbedding>(m.embedding)) {
        const auto& e = std::get<QuantizationEmbedding>(m.embedding);
        os << "embedding quantization " << e.bin_count << ' ';
        put_double(os, e.x_max);
        os << '\n';
        put_matrix(os, "table", e.table);
    } else if (std::holds_alternative<MlpEmbedding>(m.embedding)) {
        os << "embedding mlp relu\n";
        const auto& e = std::get<MlpEmbedding>(m.embedding);
        put_matrix(os, "w1", e.w1);
        put_matrix(os, "w2", e.w2);
        put_matrix(os, "w3", e.w3);
    } else if (std::holds_alternative<SwishEmbedding>(m.embedding)) {
        const auto& e = std::get<SwishEmbedding>(m.embedding);
        os << "embedding swish " << e.w.size() << ' ';
        put_double(os, e.beta);
        for (double v : e.w) {
            os << ' ';
            put_double(os, v);
        }
        for (double v : e.v) {
            os << ' ';
            put_double(os, v);
        }
        os << '\n';
    } else {
        const auto& e = std::get<ChebyshevEmbedding>(m.embedding);
        os << "embedding chebyshev " << e.rank << ' ';
        put_double(os, e.x_max);
        os << '\n';
        put_matrix(os, "directions", e.directions);
    }
    os << "layers " << m.depth() << "\n";
    for (const auto& layer : m.layers) {
        os << "layer\n";
        const char* names[] = {"q", "k", "v"};
        for (int k = 0; k < 3; ++k) {
            if (layer.slot_factored(k)) {
                os << "slot " << names[k] << " factored\n";
                put_matrix(os, "left", layer.fac[k]->left);
                put_matrix(os, "right", layer.fac[k]->right);
            } else {
                os << "slot " << names[k] << " dense\n";
                put_matrix(os, "w", layer.dense[k]);
            }
        }
    }
    put_matrix(os, "readout", m.readout);
    return os.str();
}

ToyModel load_model(const std::string& text) {
    std::istringstream is(text);
    std::string tag;
    int version;
    is >> tag >> version;
    if (tag != "lra-toymodel" || version != 1) throw std::invalid_argument("load_model: unknown format or version");
    ToyModel m{ChebyshevEmbedding{}, {}, 1, DenseMatrix()};
    is >> tag;
    if (tag != "heads") throw std::invalid_argument("load_model: expected 'heads'");
    is >> m.heads;
    is >> tag;
    if (tag != "embedding") throw std::invalid_argument("load_model: expected 'embedding'");
    std::string kind;
    is >> kind;
    if (kind == "quantization") {
        QuantizationEmbedding e;
        is >> e.bin_count;
        e.x_max = get_double(is);
        e.table = get_matrix(is, "table");
        m.embedding = std::move(e);
    } else if (kind == "mlp") {
        std::string act;
        is >> act;
        if (act != "relu") throw std::invalid_argument("load_model: unsupported activation '" + act + "'");
        MlpEmbedding e{DenseMatrix(), DenseMatrix(), DenseMatrix(), &relu};
        e.w1 = get_matrix(is, "w1");
        e.w2 = get_matrix(is, "w2");
        e.w3 = get_matrix(is, "w3");
        m.embedding = std::move(e);
    } else if (kind == "swish") {
        SwishEmbedding e;
        size_t d;
        is >> d;
        e.beta = get_double(is);
        e.w.resize(d);
        e.v.resize(d);
        for (size_t i = 0; i < d; ++i) e.w[i] = get_double(is);
        for (size_t i = 0; i < d; ++i) e.v[i] = get_double(is);
        m.embedding = std::move(e);
    } else if (kind == "chebyshev") {
        ChebyshevEmbedding e;
        is >> e.rank;
        e.x_max = get_double(is);
        e.directions = get_matrix(is, "directions");
        m.embedding = std::move(e);
    } else {
        throw std::invalid_argument("load_model: unknown embedding kind '" + kind + "'");
    }
    is >> tag;
    if (tag != "layers") throw std::invalid_argument("load_model: expected 'layers'");
    int layer_count;
    is >> layer_count;
    const char* slot_names[] = {"q", "k", "v"};
    for (int li = 0; li < layer_count; ++li) {
        is >> tag;
        if (tag != "layer") throw std::invalid_argument("load_model: expected 'layer'");
        ToyLayer layer;
        for (int k = 0; k < 3; ++k) {
            is >> tag;
            if (tag != "slot") throw std::invalid_argument("load_model: expected 'slot'");
            std::string name, storage;
            is >> name >> storage;
            if (name != slot_names[k]) throw std::invalid_argument("load_model: slot order mismatch");
            if (storage == "factored") {
                FactoredMatrix f;
                f.left = get_matrix(is, "left");
                f.right = get_matrix(is, "right");
                layer.fac[k] = std::move(f);
            } else if (storage == "dense") {
                layer.dense[k] = get_matrix(is, "w");
            } else {
                throw std::invalid_argument("load_model: unknown slot storage '" + storage + "'");
            }
        }
        m.layers.push_back(std::move(layer));
    }
    m.readout = get_matrix(is, "readout");
    return m;
}

void save_model_file(const ToyModel& m, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("save_model_file: cannot open " + path);
    f << save_model(m);
    if (!f) throw std::runtime_error("save_model_file: write failed for " + path);
}

ToyModel load_model_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("load_model_file: cannot open " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return load_model(ss.str());
}

}  // namespace lra
