#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <random>
#include <set>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "mediaseries/error.hpp"
#include "mediaseries/io.hpp"

namespace mediaseries::classify {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Index = Eigen::Index;

inline constexpr const char* kModelFormat = "mediaseries-model/1";

/// Probabilities never leave the open interval (0,1), even when exp()
/// saturates.
inline const double kMinProbability = std::numeric_limits<double>::min();
inline const double kMaxProbability = std::nextafter(1.0, 0.0);

/// Loss-side clamp.
inline constexpr double kLossEpsilon = 1e-12;

inline double sigmoid(double z) {
    double p = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
    return std::clamp(p, kMinProbability, kMaxProbability);
}

/// 1-D convolution over time with same-padding. Weight column `tap * in + c`
/// multiplies input channel c at offset `tap - (kernel_width - 1) / 2`.
struct ConvLayer {
    int kernel_width = 5;
    int in_channels = 0;
    int out_channels = 0;
    Matrix weights;  // out x (kernel_width * in)
    Vector bias;     // out
};

/// Embedding -> conv/ReLU stack (with optional width-2 max-pools) -> global
/// max-pool over time -> dense -> sigmoid.
struct ConvTextModel {
    std::size_t sequence_length = 0;
    RowMatrix embedding;  // (V + 2) x d, row 0 is padding and stays zero
    std::vector<ConvLayer> conv_layers;
    std::vector<std::size_t> pool_after;  // 1-based conv layer indices
    Matrix dense_weights;                 // features x labels
    Vector dense_bias;                    // labels
    std::vector<std::string> label_names;
    nlohmann::json training = nlohmann::json::object();

    std::size_t embedding_dim() const { return static_cast<std::size_t>(embedding.cols()); }
    std::size_t vocab_rows() const { return static_cast<std::size_t>(embedding.rows()); }
    std::size_t label_count() const { return label_names.size(); }
    bool pools_after(std::size_t layer_index) const {
        return std::find(pool_after.begin(), pool_after.end(), layer_index + 1) != pool_after.end();
    }

    void validate() const {
        auto fail = [](const std::string& what) { throw ShapeMismatch("invalid model: " + what); };
        if (sequence_length == 0) fail("sequence_length is zero");
        if (embedding.rows() < 2 || embedding.cols() < 1) fail("embedding too small");
        if (!embedding.row(0).isZero(0.0)) fail("padding embedding row is not zero");
        if (label_names.empty()) fail("no labels");
        Index channels = embedding.cols();
        for (std::size_t i = 0; i < conv_layers.size(); ++i) {
            const auto& layer = conv_layers[i];
            if (layer.kernel_width < 1 || layer.kernel_width % 2 == 0) fail("kernel width must be odd");
            if (layer.in_channels != channels) fail("conv layer " + std::to_string(i + 1) + " input channels");
            if (layer.weights.rows() != layer.out_channels ||
                layer.weights.cols() != layer.kernel_width * layer.in_channels)
                fail("conv layer " + std::to_string(i + 1) + " weight shape");
            if (layer.bias.size() != layer.out_channels) fail("conv layer bias shape");
            channels = layer.out_channels;
        }
        for (auto p : pool_after)
            if (p < 1 || p > conv_layers.size()) fail("pool position out of range");
        if (dense_weights.rows() != channels) fail("dense input width");
        if (dense_weights.cols() != static_cast<Index>(label_names.size()) ||
            dense_bias.size() != static_cast<Index>(label_names.size()))
            fail("dense output width");
    }
};

/// Hyperparameters that fix a model's shape.
struct Architecture {
    std::size_t vocab_rows = 2;
    std::size_t sequence_length = 512;
    std::size_t embedding_dim = 64;
    int kernel_width = 5;
    std::vector<int> channels;  // output channels of each conv layer
    std::vector<std::size_t> pool_after;
    std::vector<std::string> labels;

    /// Multilabel tagger: two convolutions, global max-pool, dense.
    static Architecture tagger(std::size_t vocab_rows, std::vector<std::string> labels,
                               std::size_t sequence_length = 512) {
        return {vocab_rows, sequence_length, 64, 5, {128, 128}, {}, std::move(labels)};
    }

    /// Binary scorer: four convolutions, a width-2 max-pool after the
    /// second, global max-pool, dense with one output.
    static Architecture scorer(std::size_t vocab_rows, std::size_t sequence_length = 512) {
        return {vocab_rows, sequence_length, 64, 5, {64, 128, 128, 128}, {2}, {"gbv"}};
    }
};

namespace detail {
template <typename M>
void glorot_fill(M& m, double fan_in, double fan_out, std::mt19937_64& rng) {
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (Index r = 0; r < m.rows(); ++r)
        for (Index c = 0; c < m.cols(); ++c) {
            double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0,1)
            m(r, c) = (2.0 * u - 1.0) * limit;
        }
}
}  // namespace detail

/// Builds a model with seeded Glorot-uniform weights and zero biases.
/// Pass `zero = true` for an all-zero model.
inline ConvTextModel make_model(const Architecture& arch, std::uint64_t seed, bool zero = false) {
    if (arch.labels.empty()) throw ShapeMismatch("architecture has no labels");
    if (arch.vocab_rows < 2) throw ShapeMismatch("vocabulary needs at least padding and unknown rows");
    ConvTextModel model;
    model.sequence_length = arch.sequence_length;
    model.label_names = arch.labels;
    model.pool_after = arch.pool_after;
    std::mt19937_64 rng(seed);
    const auto d = static_cast<Index>(arch.embedding_dim);
    model.embedding = RowMatrix::Zero(static_cast<Index>(arch.vocab_rows), d);
    if (!zero) {
        detail::glorot_fill(model.embedding, static_cast<double>(arch.vocab_rows), static_cast<double>(d), rng);
        model.embedding.row(0).setZero();
    }
    int in = static_cast<int>(d);
    for (int out : arch.channels) {
        ConvLayer layer;
        layer.kernel_width = arch.kernel_width;
        layer.in_channels = in;
        layer.out_channels = out;
        layer.weights = Matrix::Zero(out, arch.kernel_width * in);
        layer.bias = Vector::Zero(out);
        if (!zero)
            detail::glorot_fill(layer.weights, double(in) * arch.kernel_width, double(out) * arch.kernel_width, rng);
        model.conv_layers.push_back(std::move(layer));
        in = out;
    }
    const auto labels = static_cast<Index>(arch.labels.size());
    model.dense_weights = Matrix::Zero(in, labels);
    model.dense_bias = Vector::Zero(labels);
    if (!zero) detail::glorot_fill(model.dense_weights, double(in), double(labels), rng);
    model.validate();
    return model;
}

// ---------------------------------------------------------------------------
// forward / backward

struct ForwardCache {
    Matrix embedded;                  // d x T
    std::vector<Matrix> columns;      // im2col input of each conv layer
    std::vector<Matrix> activations;  // post-ReLU output of each conv layer
    std::vector<std::vector<Index>> pool_argmax;  // per layer; empty if no pool
    Vector features;
    std::vector<Index> feature_argmax;
    Vector probabilities;
};

namespace detail {

inline Matrix im2col(const Matrix& x, int kernel_width) {
    const Index channels = x.rows(), length = x.cols(), pad = (kernel_width - 1) / 2;
    Matrix cols = Matrix::Zero(channels * kernel_width, length);
    for (int tap = 0; tap < kernel_width; ++tap) {
        const Index shift = tap - pad;
        const Index t0 = std::max<Index>(0, -shift), t1 = std::min<Index>(length, length - shift);
        if (t1 > t0) cols.block(tap * channels, t0, channels, t1 - t0) = x.block(0, t0 + shift, channels, t1 - t0);
    }
    return cols;
}

inline void col2im_add(const Matrix& dcols, int kernel_width, Matrix& dx) {
    const Index channels = dx.rows(), length = dx.cols(), pad = (kernel_width - 1) / 2;
    for (int tap = 0; tap < kernel_width; ++tap) {
        const Index shift = tap - pad;
        const Index t0 = std::max<Index>(0, -shift), t1 = std::min<Index>(length, length - shift);
        if (t1 > t0) dx.block(0, t0 + shift, channels, t1 - t0) += dcols.block(tap * channels, t0, channels, t1 - t0);
    }
}

/// Width-2, stride-2 max-pool; a trailing odd column pools alone. Ties keep
/// the earlier position.
inline Matrix max_pool2(const Matrix& x, std::vector<Index>& argmax) {
    const Index channels = x.rows(), out_len = (x.cols() + 1) / 2;
    Matrix out(channels, out_len);
    argmax.assign(static_cast<std::size_t>(channels * out_len), 0);
    for (Index t = 0; t < out_len; ++t)
        for (Index c = 0; c < channels; ++c) {
            Index best = 2 * t;
            if (2 * t + 1 < x.cols() && x(c, 2 * t + 1) > x(c, best)) best = 2 * t + 1;
            out(c, t) = x(c, best);
            argmax[static_cast<std::size_t>(t * channels + c)] = best;
        }
    return out;
}

}  // namespace detail

inline Vector forward(const ConvTextModel& model, std::span<const int> ids, ForwardCache* cache) {
    if (ids.size() != model.sequence_length)
        throw ShapeMismatch("expected " + std::to_string(model.sequence_length) + " token ids, got " +
                            std::to_string(ids.size()));
    const auto length = static_cast<Index>(ids.size());
    const auto rows = static_cast<Index>(model.vocab_rows());
    Matrix x(model.embedding.cols(), length);
    for (Index t = 0; t < length; ++t) {
        Index id = ids[static_cast<std::size_t>(t)];
        if (id < 0 || id >= rows) id = 1;  // out-of-vocabulary ids read as unknown
        x.col(t) = model.embedding.row(id).transpose();
    }
    if (cache) {
        cache->embedded = x;
        cache->columns.clear();
        cache->activations.clear();
        cache->pool_argmax.clear();
    }
    for (std::size_t l = 0; l < model.conv_layers.size(); ++l) {
        const auto& layer = model.conv_layers[l];
        Matrix cols = detail::im2col(x, layer.kernel_width);
        Matrix z = layer.weights * cols;
        z.colwise() += layer.bias;
        Matrix h = z.cwiseMax(0.0);
        std::vector<Index> argmax;
        Matrix next = model.pools_after(l) ? detail::max_pool2(h, argmax) : h;
        if (cache) {
            cache->columns.push_back(std::move(cols));
            cache->activations.push_back(std::move(h));
            cache->pool_argmax.push_back(std::move(argmax));
        }
        x = std::move(next);
    }
    Vector features(x.rows());
    std::vector<Index> feature_argmax(static_cast<std::size_t>(x.rows()));
    for (Index c = 0; c < x.rows(); ++c) {
        Index best = 0;
        for (Index t = 1; t < x.cols(); ++t)
            if (x(c, t) > x(c, best)) best = t;
        features(c) = x(c, best);
        feature_argmax[static_cast<std::size_t>(c)] = best;
    }
    Vector logits = model.dense_weights.transpose() * features + model.dense_bias;
    Vector probabilities = logits.unaryExpr([](double z) { return sigmoid(z); });
    if (cache) {
        cache->features = features;
        cache->feature_argmax = std::move(feature_argmax);
        cache->probabilities = probabilities;
    }
    return probabilities;
}

/// Per-label sigmoid probabilities.
inline std::vector<double> forward(const ConvTextModel& model, std::span<const int> ids) {
    Vector p = forward(model, ids, nullptr);
    return {p.data(), p.data() + p.size()};
}

/// Mean binary cross-entropy over labels, probabilities clamped to
/// [1e-12, 1 - 1e-12].
inline double bce_loss(std::span<const double> probabilities, std::span<const double> targets) {
    if (probabilities.size() != targets.size())
        throw LengthMismatch("probabilities and targets differ in length");
    if (probabilities.empty()) throw LengthMismatch("empty probability vector");
    double total = 0.0;
    for (std::size_t j = 0; j < probabilities.size(); ++j) {
        const double p = std::clamp(probabilities[j], kLossEpsilon, 1.0 - kLossEpsilon);
        const double t = targets[j];
        total -= t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
    }
    return total / static_cast<double>(probabilities.size());
}

/// Gradient of bce_loss with respect to every trainable parameter. The
/// embedding part is sparse: only rows that occur in the input, never row 0.
struct ModelGradient {
    std::vector<std::pair<Index, Vector>> embedding_rows;  // sorted by row
    std::vector<Matrix> conv_weights;
    std::vector<Vector> conv_bias;
    Matrix dense_weights;
    Vector dense_bias;
    double loss = 0.0;
};

inline ModelGradient backprop(const ConvTextModel& model, std::span<const int> ids, std::span<const double> targets) {
    if (targets.size() != model.label_count()) throw LengthMismatch("target length differs from label count");
    ForwardCache cache;
    Vector p = forward(model, ids, &cache);
    ModelGradient grad;
    grad.loss = bce_loss(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())), targets);

    const auto labels = static_cast<Index>(model.label_count());
    Vector dlogits(labels);
    for (Index j = 0; j < labels; ++j) {
        // d/dz of the clamped loss vanishes where the clamp is active
        const bool clamped = p(j) < kLossEpsilon || p(j) > 1.0 - kLossEpsilon;
        dlogits(j) = clamped ? 0.0 : (p(j) - targets[static_cast<std::size_t>(j)]) / static_cast<double>(labels);
    }
    grad.dense_weights = cache.features * dlogits.transpose();
    grad.dense_bias = dlogits;
    Vector dfeatures = model.dense_weights * dlogits;

    const std::size_t layers = model.conv_layers.size();
    // gradient w.r.t. the tensor that entered the global pool
    const Matrix& last = layers == 0 ? cache.embedded : cache.activations.back();
    Index last_len = last.cols();
    if (layers > 0 && model.pools_after(layers - 1)) last_len = (last_len + 1) / 2;
    Matrix dx = Matrix::Zero(dfeatures.size(), last_len);
    for (Index c = 0; c < dfeatures.size(); ++c) dx(c, cache.feature_argmax[static_cast<std::size_t>(c)]) = dfeatures(c);

    grad.conv_weights.resize(layers);
    grad.conv_bias.resize(layers);
    for (std::size_t li = layers; li-- > 0;) {
        const auto& layer = model.conv_layers[li];
        const Matrix& h = cache.activations[li];
        Matrix dh;
        if (model.pools_after(li)) {
            dh = Matrix::Zero(h.rows(), h.cols());
            const auto& argmax = cache.pool_argmax[li];
            for (Index t = 0; t < dx.cols(); ++t)
                for (Index c = 0; c < dx.rows(); ++c)
                    dh(c, argmax[static_cast<std::size_t>(t * dx.rows() + c)]) += dx(c, t);
        } else {
            dh = std::move(dx);
        }
        Matrix dz = (h.array() > 0.0).select(dh, 0.0);
        grad.conv_weights[li] = dz * cache.columns[li].transpose();
        grad.conv_bias[li] = dz.rowwise().sum();
        Matrix dcols = layer.weights.transpose() * dz;
        dx = Matrix::Zero(layer.in_channels, h.cols());
        detail::col2im_add(dcols, layer.kernel_width, dx);
    }

    std::map<Index, Vector> rows;
    const auto vocab_rows = static_cast<Index>(model.vocab_rows());
    for (Index t = 0; t < dx.cols(); ++t) {
        Index id = ids[static_cast<std::size_t>(t)];
        if (id < 0 || id >= vocab_rows) id = 1;
        if (id == 0) continue;
        auto it = rows.find(id);
        if (it == rows.end()) rows.emplace(id, dx.col(t));
        else it->second += dx.col(t);
    }
    grad.embedding_rows.assign(rows.begin(), rows.end());
    return grad;
}

// ---------------------------------------------------------------------------
// parameter enumeration

/// Visits every trainable scalar in a fixed order: embedding rows 1.. (row
/// 0 is not a parameter), each conv layer's weights then bias, dense
/// weights, dense bias.
template <typename Model, typename Fn>
void visit_parameters(Model& model, Fn&& fn) {
    for (Index r = 1; r < model.embedding.rows(); ++r)
        for (Index c = 0; c < model.embedding.cols(); ++c) fn(model.embedding(r, c));
    for (auto& layer : model.conv_layers) {
        for (Index i = 0; i < layer.weights.size(); ++i) fn(layer.weights.data()[i]);
        for (Index i = 0; i < layer.bias.size(); ++i) fn(layer.bias.data()[i]);
    }
    for (Index i = 0; i < model.dense_weights.size(); ++i) fn(model.dense_weights.data()[i]);
    for (Index i = 0; i < model.dense_bias.size(); ++i) fn(model.dense_bias.data()[i]);
}

inline std::size_t parameter_count(const ConvTextModel& model) {
    std::size_t n = 0;
    visit_parameters(model, [&](const double&) { ++n; });
    return n;
}

/// Lays a gradient out in visit_parameters order.
inline std::vector<double> flatten_gradient(const ConvTextModel& shape, const ModelGradient& grad) {
    ConvTextModel dense = shape;
    dense.embedding.setZero();
    for (const auto& [row, values] : grad.embedding_rows) dense.embedding.row(row) = values.transpose();
    for (std::size_t l = 0; l < dense.conv_layers.size(); ++l) {
        dense.conv_layers[l].weights = grad.conv_weights[l];
        dense.conv_layers[l].bias = grad.conv_bias[l];
    }
    dense.dense_weights = grad.dense_weights;
    dense.dense_bias = grad.dense_bias;
    std::vector<double> flat;
    flat.reserve(parameter_count(shape));
    visit_parameters(dense, [&](const double& v) { flat.push_back(v); });
    return flat;
}

using GradientFn = std::function<ModelGradient(const ConvTextModel&, std::span<const int>, std::span<const double>)>;

/// Largest relative disagreement between the analytic gradient and central
/// differences with step h: |g_a - g_n| / max(|g_a|, |g_n|, 1e-8).
inline double gradient_check(const ConvTextModel& model, std::span<const int> ids, std::span<const double> targets,
                             const GradientFn& analytic = backprop, double h = 1e-5) {
    const std::vector<double> g = flatten_gradient(model, analytic(model, ids, targets));
    ConvTextModel probe = model;
    auto loss_at = [&] {
        Vector p = forward(probe, ids, nullptr);
        return bce_loss(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())), targets);
    };
    double worst = 0.0;
    std::size_t k = 0;
    visit_parameters(probe, [&](double& w) {
        const double saved = w;
        w = saved + h;
        const double up = loss_at();
        w = saved - h;
        const double down = loss_at();
        w = saved;
        const double numeric = (up - down) / (2.0 * h);
        const double a = g[k++];
        const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
        worst = std::max(worst, std::abs(a - numeric) / denom);
    });
    return worst;
}

// ---------------------------------------------------------------------------
// training

enum class Optimizer { sgd, adam };

inline std::string to_string(Optimizer o) { return o == Optimizer::sgd ? "sgd" : "adam"; }

inline Optimizer optimizer_from_string(const std::string& name) {
    if (name == "sgd") return Optimizer::sgd;
    if (name == "adam") return Optimizer::adam;
    throw ShapeMismatch("unknown optimizer '" + name + "'");
}

struct TrainConfig {
    double learning_rate = 1e-3;
    std::size_t epochs = 20;
    std::size_t batch_size = 32;
    std::uint64_t seed = 42;
    Optimizer optimizer = Optimizer::adam;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_epsilon = 1e-8;
    /// Worker threads for per-example gradients; results do not depend on it.
    std::size_t threads = 1;
};

struct Example {
    std::vector<int> ids;
    std::vector<double> targets;
};

struct TrainResult {
    ConvTextModel model;
    std::vector<double> loss_history;  // mean training loss per epoch
};

namespace detail {

struct AdamState {
    std::vector<double> m, v;
    std::size_t step = 0;
};

/// Same layout as visit_parameters, but over a dense gradient model.
inline void apply_update(ConvTextModel& model, const ConvTextModel& grad, const TrainConfig& cfg, AdamState& state) {
    std::vector<double*> params;
    std::vector<double> g;
    params.reserve(state.m.size());
    visit_parameters(model, [&](double& w) { params.push_back(&w); });
    g.reserve(params.size());
    visit_parameters(grad, [&](const double& v) { g.push_back(v); });
    if (cfg.optimizer == Optimizer::sgd) {
        for (std::size_t i = 0; i < params.size(); ++i) *params[i] -= cfg.learning_rate * g[i];
        return;
    }
    if (state.m.empty()) {
        state.m.assign(params.size(), 0.0);
        state.v.assign(params.size(), 0.0);
    }
    ++state.step;
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g[i];
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
        const double mhat = state.m[i] / c1, vhat = state.v[i] / c2;
        *params[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.adam_epsilon);
    }
}

inline void accumulate(ConvTextModel& acc, const ModelGradient& g) {
    for (const auto& [row, values] : g.embedding_rows) acc.embedding.row(row) += values.transpose();
    for (std::size_t l = 0; l < acc.conv_layers.size(); ++l) {
        acc.conv_layers[l].weights += g.conv_weights[l];
        acc.conv_layers[l].bias += g.conv_bias[l];
    }
    acc.dense_weights += g.dense_weights;
    acc.dense_bias += g.dense_bias;
}

inline void zero_parameters(ConvTextModel& m) {
    m.embedding.setZero();
    for (auto& layer : m.conv_layers) {
        layer.weights.setZero();
        layer.bias.setZero();
    }
    m.dense_weights.setZero();
    m.dense_bias.setZero();
}

template <typename Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
    threads = std::max<std::size_t>(1, std::min(threads, count));
    if (threads == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    for (std::size_t w = 0; w < threads; ++w)
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < count; i += threads) fn(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        });
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace detail

/// Mini-batch training on mean BCE. Batches are drawn from a seeded
/// shuffle; inside a batch, per-example gradients are summed in a canonical
/// order (by ids, then targets) so the result is independent of thread count
/// and, with one full batch, of dataset order.
inline TrainResult train(ConvTextModel model, std::span<const Example> dataset, const TrainConfig& cfg) {
    if (dataset.empty()) throw EmptyDataset("training set is empty");
    if (!(cfg.learning_rate >= 0.0)) throw ShapeMismatch("learning rate must be non-negative");
    if (cfg.batch_size < 1) throw ShapeMismatch("batch size must be at least 1");
    for (const auto& ex : dataset) {
        if (ex.targets.size() != model.label_count()) throw LengthMismatch("target length differs from label count");
        if (ex.ids.size() != model.sequence_length) throw ShapeMismatch("example length differs from model");
    }
    model.validate();

    std::mt19937_64 rng(cfg.seed);
    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), 0);
    detail::AdamState adam;
    ConvTextModel grad_sum = model;
    TrainResult result;

    auto canonical_less = [&](std::size_t a, std::size_t b) {
        const auto& x = dataset[a];
        const auto& y = dataset[b];
        if (x.ids != y.ids) return x.ids < y.ids;
        return x.targets < y.targets;
    };

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        // Fisher-Yates with raw 64-bit draws keeps the shuffle identical across standard libraries.
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            std::vector<std::size_t> batch(order.begin() + static_cast<std::ptrdiff_t>(start),
                                           order.begin() + static_cast<std::ptrdiff_t>(end));
            std::stable_sort(batch.begin(), batch.end(), canonical_less);
            std::vector<ModelGradient> grads(batch.size());
            detail::parallel_for(batch.size(), cfg.threads, [&](std::size_t i) {
                const auto& ex = dataset[batch[i]];
                grads[i] = backprop(model, ex.ids, ex.targets);
            });
            detail::zero_parameters(grad_sum);
            double batch_loss = 0.0;
            for (const auto& g : grads) {
                detail::accumulate(grad_sum, g);
                batch_loss += g.loss;
            }
            epoch_loss += batch_loss;
            const double scale = 1.0 / static_cast<double>(batch.size());
            grad_sum.embedding *= scale;
            for (auto& layer : grad_sum.conv_layers) {
                layer.weights *= scale;
                layer.bias *= scale;
            }
            grad_sum.dense_weights *= scale;
            grad_sum.dense_bias *= scale;
            detail::apply_update(model, grad_sum, cfg, adam);
        }
        result.loss_history.push_back(epoch_loss / static_cast<double>(dataset.size()));
    }
    model.training = {{"optimizer", to_string(cfg.optimizer)},
                      {"learning_rate", cfg.learning_rate},
                      {"epochs", cfg.epochs},
                      {"batch_size", cfg.batch_size},
                      {"seed", cfg.seed},
                      {"loss", "binary_cross_entropy"}};
    result.model = std::move(model);
    return result;
}

// ---------------------------------------------------------------------------
// inference and evaluation

/// Labels whose probability is strictly above the threshold.
inline std::set<std::string> predict_tags(const ConvTextModel& model, std::span<const int> ids, double threshold = 0.5) {
    if (!(threshold > 0.0 && threshold < 1.0)) throw ShapeMismatch("threshold must lie in (0,1)");
    const auto p = forward(model, ids);
    std::set<std::string> tags;
    for (std::size_t j = 0; j < p.size(); ++j)
        if (p[j] > threshold) tags.insert(model.label_names[j]);
    return tags;
}

inline double gbv_probability(const ConvTextModel& model, std::span<const int> ids) {
    if (model.label_count() != 1)
        throw NotBinaryModel("model has " + std::to_string(model.label_count()) + " outputs, expected 1");
    return forward(model, ids)[0];
}

struct EvalMetrics {
    double bce = 0.0;
    double subset_accuracy = 0.0;
    double precision = 1.0;
    double recall = 1.0;
};

/// Subset accuracy counts documents whose whole thresholded label vector
/// matches. Precision and recall are micro-averaged over (doc, label) pairs;
/// with no predicted (actual) positives precision (recall) is 1.
inline EvalMetrics evaluate_probabilities(const std::vector<std::vector<double>>& probabilities,
                                          const std::vector<std::vector<double>>& targets, double threshold = 0.5) {
    if (probabilities.empty()) throw EmptyDataset("evaluation set is empty");
    if (probabilities.size() != targets.size()) throw LengthMismatch("predictions and targets differ in count");
    EvalMetrics m;
    double loss = 0.0;
    std::size_t exact = 0, tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < probabilities.size(); ++i) {
        const auto& p = probabilities[i];
        const auto& t = targets[i];
        loss += bce_loss(p, t);
        bool all_match = true;
        for (std::size_t j = 0; j < p.size(); ++j) {
            const bool predicted = p[j] > threshold;
            const bool actual = t[j] > 0.5;
            all_match = all_match && predicted == actual;
            tp += predicted && actual;
            fp += predicted && !actual;
            fn += !predicted && actual;
        }
        exact += all_match;
    }
    const auto n = static_cast<double>(probabilities.size());
    m.bce = loss / n;
    m.subset_accuracy = static_cast<double>(exact) / n;
    m.precision = tp + fp == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
    m.recall = tp + fn == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
    return m;
}

inline std::vector<std::vector<double>> predict_all(const ConvTextModel& model, const std::vector<std::vector<int>>& inputs,
                                                    std::size_t threads = 1) {
    std::vector<std::vector<double>> out(inputs.size());
    detail::parallel_for(inputs.size(), threads, [&](std::size_t i) { out[i] = forward(model, inputs[i]); });
    return out;
}

inline EvalMetrics evaluate(const ConvTextModel& model, std::span<const Example> dataset, double threshold = 0.5) {
    if (dataset.empty()) throw EmptyDataset("evaluation set is empty");
    std::vector<std::vector<double>> probabilities, targets;
    for (const auto& ex : dataset) {
        probabilities.push_back(forward(model, ex.ids));
        targets.push_back(ex.targets);
    }
    return evaluate_probabilities(probabilities, targets, threshold);
}

// ---------------------------------------------------------------------------
// serialization

namespace detail {
template <typename M>
std::string encode_row_major(const M& m) {
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(m.size()));
    for (Index r = 0; r < m.rows(); ++r)
        for (Index c = 0; c < m.cols(); ++c) flat.push_back(m(r, c));
    return io::encode_doubles(flat.data(), flat.size());
}

template <typename M>
void decode_row_major(const std::string& blob, M& m) {
    auto flat = io::decode_doubles(blob);
    if (flat.size() != static_cast<std::size_t>(m.size())) throw ParseError("weight blob has wrong length");
    std::size_t k = 0;
    for (Index r = 0; r < m.rows(); ++r)
        for (Index c = 0; c < m.cols(); ++c) m(r, c) = flat[k++];
}
}  // namespace detail

/// Blobs are base64 of little-endian float64 in row-major order. Conv
/// weights are laid out [out][tap][in].
inline nlohmann::json model_to_json(const ConvTextModel& model) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& layer : model.conv_layers)
        layers.push_back({{"kernel_width", layer.kernel_width},
                          {"in_channels", layer.in_channels},
                          {"out_channels", layer.out_channels},
                          {"weights", detail::encode_row_major(layer.weights)},
                          {"bias", detail::encode_row_major(layer.bias)}});
    return {{"format", kModelFormat},
            {"sequence_length", model.sequence_length},
            {"embedding",
             {{"rows", model.embedding.rows()},
              {"dim", model.embedding.cols()},
              {"weights", detail::encode_row_major(model.embedding)}}},
            {"conv_layers", layers},
            {"pool_after", model.pool_after},
            {"dense",
             {{"features", model.dense_weights.rows()},
              {"labels", model.dense_weights.cols()},
              {"weights", detail::encode_row_major(model.dense_weights)},
              {"bias", detail::encode_row_major(model.dense_bias)}}},
            {"label_names", model.label_names},
            {"training", model.training}};
}

inline ConvTextModel model_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format").get<std::string>() != kModelFormat)
            throw ParseError("unsupported model format '" + j.at("format").get<std::string>() + "'");
        ConvTextModel model;
        model.sequence_length = j.at("sequence_length").get<std::size_t>();
        const auto& emb = j.at("embedding");
        model.embedding = RowMatrix::Zero(emb.at("rows").get<Index>(), emb.at("dim").get<Index>());
        detail::decode_row_major(emb.at("weights").get<std::string>(), model.embedding);
        for (const auto& l : j.at("conv_layers")) {
            ConvLayer layer;
            layer.kernel_width = l.at("kernel_width").get<int>();
            layer.in_channels = l.at("in_channels").get<int>();
            layer.out_channels = l.at("out_channels").get<int>();
            layer.weights = Matrix::Zero(layer.out_channels, layer.kernel_width * layer.in_channels);
            layer.bias = Vector::Zero(layer.out_channels);
            detail::decode_row_major(l.at("weights").get<std::string>(), layer.weights);
            detail::decode_row_major(l.at("bias").get<std::string>(), layer.bias);
            model.conv_layers.push_back(std::move(layer));
        }
        model.pool_after = j.at("pool_after").get<std::vector<std::size_t>>();
        const auto& dense = j.at("dense");
        model.dense_weights = Matrix::Zero(dense.at("features").get<Index>(), dense.at("labels").get<Index>());
        model.dense_bias = Vector::Zero(dense.at("labels").get<Index>());
        detail::decode_row_major(dense.at("weights").get<std::string>(), model.dense_weights);
        detail::decode_row_major(dense.at("bias").get<std::string>(), model.dense_bias);
        model.label_names = j.at("label_names").get<std::vector<std::string>>();
        if (j.contains("training")) model.training = j.at("training");
        model.validate();
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed model file: ") + e.what());
    }
}

inline void save_model(const ConvTextModel& model, const std::filesystem::path& path) {
    io::write_file(path, model_to_json(model).dump(1) + "\n");
}

inline ConvTextModel load_model(const std::filesystem::path& path) {
    try {
        return model_from_json(nlohmann::json::parse(io::read_file(path)));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

/// `epoch,loss` CSV.
inline std::string training_log_csv(const std::vector<double>& history) {
    std::string out = "epoch,loss\n";
    for (std::size_t i = 0; i < history.size(); ++i)
        out += std::to_string(i + 1) + "," + io::format_double(history[i]) + "\n";
    return out;
}

}  // namespace mediaseries::classify
