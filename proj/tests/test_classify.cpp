#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "mediaseries/classify.hpp"

using namespace mediaseries;
using namespace mediaseries::classify;
using Catch::Matchers::WithinAbs;

namespace {

Architecture toy_architecture(std::vector<int> channels, std::vector<std::size_t> pools, std::size_t labels,
                              std::size_t length = 8, std::size_t vocab_rows = 12, std::size_t dim = 4,
                              int kernel = 3) {
    Architecture a;
    a.vocab_rows = vocab_rows;
    a.sequence_length = length;
    a.embedding_dim = dim;
    a.kernel_width = kernel;
    a.channels = std::move(channels);
    a.pool_after = std::move(pools);
    for (std::size_t j = 0; j < labels; ++j) a.labels.push_back("l" + std::to_string(j));
    return a;
}

/// Straight-line forward pass with explicit loops, independent of the
/// im2col/GEMM path in the library.
std::vector<double> reference_forward(const ConvTextModel& m, const std::vector<int>& ids) {
    const std::size_t T0 = ids.size();
    std::vector<std::vector<double>> x(m.embedding_dim(), std::vector<double>(T0));
    for (std::size_t t = 0; t < T0; ++t)
        for (std::size_t c = 0; c < m.embedding_dim(); ++c) x[c][t] = m.embedding(ids[t], static_cast<Index>(c));
    for (std::size_t l = 0; l < m.conv_layers.size(); ++l) {
        const auto& layer = m.conv_layers[l];
        const std::size_t T = x[0].size();
        const int pad = (layer.kernel_width - 1) / 2;
        std::vector<std::vector<double>> y(static_cast<std::size_t>(layer.out_channels), std::vector<double>(T));
        for (int o = 0; o < layer.out_channels; ++o)
            for (std::size_t t = 0; t < T; ++t) {
                double s = layer.bias(o);
                for (int k = 0; k < layer.kernel_width; ++k) {
                    const long src = static_cast<long>(t) + k - pad;
                    if (src < 0 || src >= static_cast<long>(T)) continue;
                    for (int c = 0; c < layer.in_channels; ++c)
                        s += layer.weights(o, k * layer.in_channels + c) * x[static_cast<std::size_t>(c)][static_cast<std::size_t>(src)];
                }
                y[static_cast<std::size_t>(o)][t] = s > 0 ? s : 0.0;
            }
        if (m.pools_after(l)) {
            for (auto& row : y) {
                std::vector<double> pooled;
                for (std::size_t t = 0; t < row.size(); t += 2)
                    pooled.push_back(t + 1 < row.size() ? std::max(row[t], row[t + 1]) : row[t]);
                row = pooled;
            }
        }
        x = y;
    }
    std::vector<double> features;
    for (const auto& row : x) features.push_back(*std::max_element(row.begin(), row.end()));
    std::vector<double> out;
    for (std::size_t j = 0; j < m.label_count(); ++j) {
        double z = m.dense_bias(static_cast<Index>(j));
        for (std::size_t f = 0; f < features.size(); ++f)
            z += m.dense_weights(static_cast<Index>(f), static_cast<Index>(j)) * features[f];
        out.push_back(1.0 / (1.0 + std::exp(-z)));
    }
    return out;
}

/// Zero biases put every padding position exactly on the ReLU kink, where
/// central differences are meaningless; move them off it.
void jitter_biases(ConvTextModel& m, std::mt19937_64& rng) {
    auto draw = [&] { return (static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5) * 0.2; };
    for (auto& layer : m.conv_layers)
        for (Index i = 0; i < layer.bias.size(); ++i) layer.bias(i) = draw();
    for (Index i = 0; i < m.dense_bias.size(); ++i) m.dense_bias(i) = draw();
}

std::vector<int> random_ids(std::mt19937_64& rng, std::size_t length, std::size_t rows, std::size_t padding) {
    std::vector<int> ids(length, 0);
    for (std::size_t t = 0; t + padding < length; ++t) ids[t] = 1 + static_cast<int>(rng() % (rows - 1));
    return ids;
}

/// 20 documents, class decided by one of two marker tokens.
std::vector<Example> separable_set(std::size_t length) {
    std::vector<Example> data;
    std::mt19937_64 rng(99);
    for (int i = 0; i < 20; ++i) {
        const bool positive = i % 2 == 0;
        std::vector<int> ids(length, 0);
        for (std::size_t t = 0; t < length / 2; ++t) ids[t] = 4 + static_cast<int>(rng() % 6);  // shared noise
        ids[rng() % (length / 2)] = positive ? 2 : 3;
        data.push_back({ids, {positive ? 1.0 : 0.0}});
    }
    return data;
}

}  // namespace

TEST_CASE("zero-weight model outputs one half", "[classify][forward]") {
    auto model = make_model(toy_architecture({5, 5}, {}, 3), 1, /*zero=*/true);
    std::vector<int> ids = {3, 4, 5, 1, 2, 0, 0, 0};
    for (double p : forward(model, ids)) CHECK(p == 0.5);
    auto trained_like = make_model(toy_architecture({5, 5}, {}, 3), 1);
    trained_like.dense_bias.setZero();
    for (auto& layer : trained_like.conv_layers) layer.bias.setZero();
    for (double p : forward(trained_like, std::vector<int>(8, 0))) CHECK(p == 0.5);  // padding embeds to zero
}

TEST_CASE("forward matches a loop-based reference", "[classify][forward]") {
    for (auto arch : {toy_architecture({5, 6}, {}, 2), toy_architecture({4, 5, 6, 3}, {2}, 2),
                      toy_architecture({3, 3}, {1, 2}, 2, 7)}) {
        auto model = make_model(arch, 2024);
        for (auto& layer : model.conv_layers) layer.bias.setRandom();
        model.dense_bias.setConstant(0.1);
        std::mt19937_64 rng(5);
        auto ids = random_ids(rng, arch.sequence_length, arch.vocab_rows, 2);
        auto got = forward(model, ids);
        auto want = reference_forward(model, ids);
        REQUIRE(got.size() == 2);
        for (std::size_t j = 0; j < 2; ++j) CHECK_THAT(got[j], WithinAbs(want[j], 1e-10));
    }
}

TEST_CASE("forward rejects wrong sequence length", "[classify][forward]") {
    auto model = make_model(toy_architecture({3}, {}, 1), 1);
    CHECK_THROWS_AS(forward(model, std::vector<int>(7, 1)), ShapeMismatch);
}

TEST_CASE("outputs stay strictly inside (0,1)", "[classify][forward][property]") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 50; ++trial) {
        auto model = make_model(toy_architecture({4, 4}, {1}, 2), rng());
        const double scale = std::pow(10.0, static_cast<double>(rng() % 6));
        model.dense_weights *= scale * ((trial % 2) ? 1.0 : -1.0);
        model.dense_bias.setConstant((trial % 3 == 0 ? 1.0 : -1.0) * scale * 100.0);
        auto ids = random_ids(rng, 8, 12, 1);
        for (double p : forward(model, ids)) {
            CHECK(p > 0.0);
            CHECK(p < 1.0);
        }
    }
}

TEST_CASE("bce_loss", "[classify][loss]") {
    std::vector<double> t = {1.0, 0.0, 1.0};
    CHECK(bce_loss(t, t) <= -std::log(1.0 - 1e-12) + 1e-18);
    std::vector<double> half = {0.5, 0.5, 0.5};
    CHECK_THAT(bce_loss(half, t), WithinAbs(std::log(2.0), 1e-15));
    std::vector<double> p = {0.9, 0.2}, y = {1.0, 0.0};
    CHECK_THAT(bce_loss(p, y), WithinAbs(-(std::log(0.9) + std::log(0.8)) / 2.0, 1e-15));
    CHECK_THAT(bce_loss(p, y), WithinAbs(0.164252, 1e-6));
    CHECK_THROWS_AS(bce_loss(p, t), LengthMismatch);
}

TEST_CASE("gradient check on tagger and scorer shapes", "[classify][gradient]") {
    std::mt19937_64 rng(31);
    for (auto arch : {toy_architecture({5, 6}, {}, 3, 10), toy_architecture({4, 5, 5, 6}, {2}, 1, 10)}) {
        for (int instance = 0; instance < 3; ++instance) {
            auto model = make_model(arch, rng());
            jitter_biases(model, rng);
            auto ids = random_ids(rng, arch.sequence_length, arch.vocab_rows, 3);
            std::vector<double> targets;
            for (std::size_t j = 0; j < arch.labels.size(); ++j) targets.push_back(static_cast<double>(rng() % 2));
            CHECK(gradient_check(model, ids, targets) < 1e-4);
        }
    }
}

TEST_CASE("dense bias gradient at the zero model", "[classify][gradient]") {
    auto model = make_model(toy_architecture({3}, {}, 4), 1, true);
    std::vector<int> ids(8, 2);
    std::vector<double> targets = {1.0, 0.0, 1.0, 0.0};
    auto g = backprop(model, ids, targets);
    for (Index j = 0; j < 4; ++j) CHECK_THAT(g.dense_bias(j), WithinAbs((0.5 - targets[static_cast<std::size_t>(j)]) / 4.0, 1e-15));
    CHECK(gradient_check(model, ids, targets) < 1e-4);
}

TEST_CASE("gradient check catches a corrupted gradient", "[classify][gradient]") {
    auto model = make_model(toy_architecture({4, 4}, {}, 2), 8);
    std::mt19937_64 rng(8);
    jitter_biases(model, rng);
    auto ids = random_ids(rng, 8, 12, 2);
    std::vector<double> targets = {1.0, 0.0};
    GradientFn corrupted = [](const ConvTextModel& m, std::span<const int> x, std::span<const double> t) {
        auto g = backprop(m, x, t);
        g.dense_bias(0) *= 1.1;
        return g;
    };
    CHECK(gradient_check(model, ids, targets) < 1e-4);
    CHECK(gradient_check(model, ids, targets, corrupted) > 1e-2);
}

TEST_CASE("training converges on a separable set", "[classify][train]") {
    auto data = separable_set(12);
    auto model = make_model(toy_architecture({8, 8}, {}, 1, 12, 10, 8), 3);
    TrainConfig cfg;
    cfg.learning_rate = 0.01;
    cfg.epochs = 200;
    cfg.batch_size = 5;
    auto result = train(model, data, cfg);
    REQUIRE(result.loss_history.size() == 200);
    CHECK(result.loss_history.back() < 0.05);
    CHECK(evaluate(result.model, data).bce < 0.05);

    std::vector<int> positive = data[0].ids;
    CHECK(gbv_probability(result.model, positive) > 0.9);
    CHECK(result.model.training.at("optimizer") == "adam");
}

TEST_CASE("training is deterministic and respects a zero learning rate", "[classify][train]") {
    auto data = separable_set(12);
    auto model = make_model(toy_architecture({4, 4}, {1}, 1, 12, 10, 4), 4);
    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.batch_size = 3;
    auto a = train(model, data, cfg);
    auto b = train(model, data, cfg);
    CHECK(a.loss_history == b.loss_history);

    cfg.threads = 3;
    CHECK(train(model, data, cfg).loss_history == a.loss_history);

    cfg.learning_rate = 0.0;
    auto frozen = train(model, data, cfg);
    CHECK(frozen.model.embedding == model.embedding);
    CHECK(frozen.model.dense_weights == model.dense_weights);
    for (std::size_t l = 0; l < model.conv_layers.size(); ++l)
        CHECK(frozen.model.conv_layers[l].weights == model.conv_layers[l].weights);

    cfg.optimizer = Optimizer::sgd;
    auto sgd_frozen = train(model, data, cfg);
    CHECK(sgd_frozen.model.dense_weights == model.dense_weights);
}

TEST_CASE("full-batch training ignores dataset order", "[classify][train][property]") {
    auto data = separable_set(12);
    auto model = make_model(toy_architecture({4, 4}, {}, 1, 12, 10, 4), 5);
    TrainConfig cfg;
    cfg.epochs = 4;
    cfg.batch_size = data.size();
    auto reference = train(model, data, cfg).loss_history;
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 3; ++trial) {
        auto shuffled = data;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        CHECK(train(model, shuffled, cfg).loss_history == reference);
    }
}

TEST_CASE("training rejects an empty dataset", "[classify][train]") {
    auto model = make_model(toy_architecture({3}, {}, 1), 1);
    CHECK_THROWS_AS(train(model, std::vector<Example>{}, TrainConfig{}), EmptyDataset);
}

TEST_CASE("predict_tags uses a strict threshold", "[classify][tags]") {
    auto zero = make_model(toy_architecture({3}, {}, 3), 1, true);
    std::vector<int> ids(8, 2);
    CHECK(predict_tags(zero, ids, 0.5).empty());
    CHECK(predict_tags(zero, ids, 0.4999).size() == 3);

    // exactly-representable boundary: sigmoid(0) == 0.5
    auto model = make_model(toy_architecture({3}, {}, 2), 1, true);
    model.dense_bias(1) = 1e-3;
    CHECK(predict_tags(model, ids, 0.5) == std::set<std::string>{"l1"});
}

TEST_CASE("predict_tags is monotone in the threshold", "[classify][tags][property]") {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 100; ++trial) {
        auto model = make_model(toy_architecture({4}, {}, 6), rng());
        model.dense_bias.setRandom();
        auto ids = random_ids(rng, 8, 12, 1);
        auto loose = predict_tags(model, ids, 0.5);
        auto strict = predict_tags(model, ids, 0.9);
        CHECK(std::includes(loose.begin(), loose.end(), strict.begin(), strict.end()));
    }
}

TEST_CASE("gbv_probability requires a single output", "[classify][gbv]") {
    std::vector<int> ids(8, 2);
    CHECK(gbv_probability(make_model(toy_architecture({3}, {}, 1), 1, true), ids) == 0.5);
    CHECK_THROWS_AS(gbv_probability(make_model(toy_architecture({3}, {}, 3), 1), ids), NotBinaryModel);
}

TEST_CASE("evaluate metrics and conventions", "[classify][evaluate]") {
    std::vector<std::vector<double>> t = {{1, 0}, {0, 1}, {1, 1}};
    auto perfect = evaluate_probabilities({{0.9, 0.1}, {0.2, 0.7}, {0.8, 0.99}}, t);
    CHECK(perfect.subset_accuracy == 1.0);
    CHECK(perfect.precision == 1.0);
    CHECK(perfect.recall == 1.0);

    auto negatives = evaluate_probabilities({{0.5}, {0.5}}, {{0.0}, {0.0}}, 0.5);
    CHECK(negatives.precision == 1.0);
    CHECK(negatives.recall == 1.0);
    CHECK(negatives.subset_accuracy == 1.0);

    // TP=2, FP=1, FN=1 over 4 docs
    auto mixed = evaluate_probabilities({{0.9}, {0.8}, {0.7}, {0.1}}, {{1}, {1}, {0}, {1}});
    CHECK_THAT(mixed.precision, WithinAbs(2.0 / 3.0, 1e-15));
    CHECK_THAT(mixed.recall, WithinAbs(2.0 / 3.0, 1e-15));
    CHECK_THAT(mixed.subset_accuracy, WithinAbs(0.5, 1e-15));

    CHECK_THROWS_AS(evaluate_probabilities({}, {}), EmptyDataset);
}

TEST_CASE("model file round-trip is bit-exact", "[classify][io]") {
    auto model = make_model(toy_architecture({4, 5, 5, 6}, {2}, 2), 77);
    model.dense_bias(0) = -0.0;
    model.conv_layers[1].bias(2) = 1e-300;
    auto text = model_to_json(model).dump();
    auto back = model_from_json(nlohmann::json::parse(text));
    CHECK(back.embedding == model.embedding);
    CHECK(back.pool_after == model.pool_after);
    CHECK(std::signbit(back.dense_bias(0)));
    std::mt19937_64 rng(1);
    for (int i = 0; i < 10; ++i) {
        auto ids = random_ids(rng, 8, 12, static_cast<std::size_t>(i % 4));
        CHECK(forward(back, ids) == forward(model, ids));
    }
    auto json = nlohmann::json::parse(text);
    CHECK(json.at("format") == "mediaseries-model/1");
    json["format"] = "other/2";
    CHECK_THROWS_AS(model_from_json(json), ParseError);
}

TEST_CASE("base64 blobs are little-endian float64", "[classify][io]") {
    double one = 1.0;
    CHECK(io::encode_doubles(&one, 1) == "AAAAAAAA8D8=");
    auto back = io::decode_doubles("AAAAAAAA8D8=");
    REQUIRE(back.size() == 1);
    CHECK(back[0] == 1.0);
}
