// Acceptance run: one line per criterion, non-zero exit if any fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mediaseries/classify.hpp"
#include "mediaseries/corpus.hpp"
#include "mediaseries/synthetic.hpp"
#include "mediaseries/tda.hpp"
#include "mediaseries/timeseries.hpp"

using namespace mediaseries;
namespace fs = std::filesystem;
using tda::Index;
using tda::Matrix;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

/// Collects failed checks with a short description each.
class Checks {
public:
    void expect(bool ok, const std::string& what) {
        ++count_;
        if (!ok && failures_.size() < 5) failures_.push_back(what);
        pass_ = pass_ && ok;
    }
    Outcome outcome(const std::string& summary) const {
        std::string detail = summary;
        for (const auto& f : failures_) detail += "; FAILED " + f;
        return {pass_, detail};
    }
    std::size_t count() const { return count_; }

private:
    bool pass_ = true;
    std::size_t count_ = 0;
    std::vector<std::string> failures_;
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

Date day(std::int64_t offset, Date start = Date{std::chrono::year{2015}, std::chrono::January, std::chrono::day{1}}) {
    return date_from_day_number(day_number(start) + offset);
}

timeseries::TimeSeries series_of(const std::vector<double>& v, Date start = day(0)) {
    timeseries::TimeSeries ts;
    for (std::size_t i = 0; i < v.size(); ++i) ts.points.push_back({day(static_cast<std::int64_t>(i), start), v[i]});
    return ts;
}

// ---------------------------------------------------------------------------

Outcome decomposition_oracle() {
    Checks c;
    std::mt19937_64 rng(101);
    std::normal_distribution<double> noise(0.0, 1.0);
    double worst_identity = 0.0, worst_sum = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t p = 2 + rng() % 14;
        const std::size_t n = p * (5 + rng() % 6) + rng() % p;
        std::vector<double> v;
        for (std::size_t t = 0; t < n; ++t) v.push_back(0.01 * static_cast<double>(t) + std::sin(static_cast<double>(t)) + noise(rng));
        const auto d = timeseries::decompose_ma(series_of(v), p);
        for (std::size_t t = 0; t < n; ++t)
            if (d.trend[t])
                worst_identity = std::max(worst_identity, std::abs(*d.trend[t] + d.seasonal[t] + *d.residual[t] - v[t]));
        double s = 0.0;
        for (std::size_t k = 0; k < p; ++k) s += d.seasonal[k];
        worst_sum = std::max(worst_sum, std::abs(s));
        for (std::size_t t = p; t < n; ++t) c.expect(d.seasonal[t] == d.seasonal[t - p], "seasonal repeats with the period");
    }
    c.expect(worst_identity <= 1e-12, "T+S+e = X on the interior (" + fmt(worst_identity) + ")");
    c.expect(worst_sum <= 1e-9, "seasonal sums to zero (" + fmt(worst_sum) + ")");

    double worst_closed = 0.0;
    for (std::size_t p : {4u, 7u, 12u}) {
        std::vector<double> ramp, wave;
        for (std::size_t t = 0; t < 8 * p; ++t) {
            ramp.push_back(2.0 + 0.5 * static_cast<double>(t));
            wave.push_back(std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / static_cast<double>(p)));
        }
        const auto r = timeseries::decompose_ma(series_of(ramp), p);
        const auto w = timeseries::decompose_ma(series_of(wave), p);
        for (std::size_t t = 0; t < 8 * p; ++t) {
            worst_closed = std::max(worst_closed, std::abs(r.seasonal[t]));
            worst_closed = std::max(worst_closed, std::abs(w.seasonal[t] - wave[t]));
            if (r.trend[t]) worst_closed = std::max(worst_closed, std::abs(*r.trend[t] - ramp[t]));
            if (w.trend[t]) worst_closed = std::max(worst_closed, std::abs(*w.trend[t]));
        }
    }
    c.expect(worst_closed <= 1e-9, "ramp and sinusoid closed forms (" + fmt(worst_closed) + ")");
    return c.outcome("50 series, identity " + fmt(worst_identity) + ", seasonal sum " + fmt(worst_sum) + ", closed forms " +
                     fmt(worst_closed));
}

// ---------------------------------------------------------------------------

/// Zero biases leave padded positions exactly on the ReLU kink, where a
/// central difference straddles the corner; checks run off it.
void jitter_biases(classify::ConvTextModel& m, std::mt19937_64& rng) {
    auto draw = [&] { return (static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5) * 0.2; };
    for (auto& layer : m.conv_layers)
        for (Index i = 0; i < layer.bias.size(); ++i) layer.bias(i) = draw();
    for (Index i = 0; i < m.dense_bias.size(); ++i) m.dense_bias(i) = draw();
}

Outcome gradient_check() {
    Checks c;
    std::mt19937_64 rng(202);
    // layer structure of each network, at a size where every parameter can be perturbed
    auto nn1 = classify::Architecture::tagger(30, {"a", "b", "c", "d"}, 24);
    nn1.embedding_dim = 6;
    nn1.channels = {8, 8};
    auto nn2 = classify::Architecture::scorer(30, 24);
    nn2.embedding_dim = 6;
    nn2.channels = {6, 8, 8, 8};
    double worst = 0.0;
    for (const auto& arch : {nn1, nn2}) {
        for (int instance = 0; instance < 10; ++instance) {
            auto model = classify::make_model(arch, rng());
            jitter_biases(model, rng);
            std::vector<int> ids(arch.sequence_length, 0);
            const std::size_t used = arch.sequence_length - rng() % 6;
            for (std::size_t t = 0; t < used; ++t) ids[t] = 1 + static_cast<int>(rng() % (arch.vocab_rows - 1));
            std::vector<double> targets;
            for (std::size_t j = 0; j < arch.labels.size(); ++j) targets.push_back(static_cast<double>(rng() % 2));
            const double e = classify::gradient_check(model, ids, targets, classify::backprop, 1e-5);
            worst = std::max(worst, e);
            c.expect(e < 1e-4, "relative error " + fmt(e));
        }
    }
    return c.outcome("20 models, max relative error " + fmt(worst));
}

// ---------------------------------------------------------------------------

struct Split {
    std::vector<classify::Example> train, held_out;
    std::size_t vocab_rows = 0;
};

/// Scorer data from two independently seeded synthetic corpora; the
/// vocabulary comes from the training corpus only.
Split planted_corpus(std::size_t sequence_length) {
    synthetic::Options a, b;
    a.seed = 11;
    b.seed = 29;
    b.start = Date{std::chrono::year{2020}, std::chrono::March, std::chrono::day{2}};
    b.spike_days = {};
    const auto train = synthetic::generate(a), test = synthetic::generate(b);
    const auto& stop = corpus::default_stopwords();
    std::vector<corpus::NormalizedDoc> train_docs;
    for (const auto& art : train.articles) train_docs.push_back(corpus::normalize_document(art.document, stop));
    const auto vocab = corpus::build_vocabulary(train_docs, 2, 20000, sequence_length);
    Split s;
    s.vocab_rows = vocab.rows();
    for (std::size_t i = 0; i < train.articles.size(); ++i)
        s.train.push_back({corpus::vectorize(train_docs[i], vocab), {train.articles[i].gbv ? 1.0 : 0.0}});
    for (const auto& art : test.articles)
        s.held_out.push_back({corpus::vectorize(corpus::normalize_document(art.document, stop), vocab), {art.gbv ? 1.0 : 0.0}});
    return s;
}

Outcome classifier_convergence() {
    Checks c;
    const auto data = planted_corpus(64);
    const classify::TrainConfig defaults;
    c.expect(defaults.epochs <= 200, "default epoch budget within 200");
    auto model = classify::make_model(classify::Architecture::scorer(data.vocab_rows, 64), 5);
    const auto result = classify::train(model, data.train, defaults);
    const auto train = classify::evaluate(result.model, data.train);
    const auto held = classify::evaluate(result.model, data.held_out);
    c.expect(train.subset_accuracy >= 0.95, "training accuracy " + fmt(train.subset_accuracy));
    c.expect(held.subset_accuracy >= 0.90, "held-out accuracy " + fmt(held.subset_accuracy));
    return c.outcome(std::to_string(defaults.epochs) + " epochs on " + std::to_string(data.train.size()) +
                     " docs, train " + fmt(train.subset_accuracy) + ", held-out " + fmt(held.subset_accuracy) + " (" +
                     std::to_string(data.held_out.size()) + " docs)");
}

// ---------------------------------------------------------------------------

Outcome structural_recovery() {
    Checks c;
    const std::size_t n = 400;
    std::vector<Date> dates;
    for (std::size_t i = 0; i < n; ++i) dates.push_back(day(static_cast<std::int64_t>(i)));
    timeseries::StructuralConfig cfg;
    cfg.n_changepoints = 6;
    cfg.seasonalities = {{7.0, 2}};
    cfg.holidays["fiesta"] = {day(40), day(150), day(260), day(370)};
    const auto cps = timeseries::changepoint_dates(dates, cfg.n_changepoints, cfg.changepoint_range);
    const double span = static_cast<double>(n - 1);
    auto t_of = [&](const Date& d) { return static_cast<double>(day_number(d) - day_number(dates[0])) / span; };
    const double k0 = 0.3, m0 = 0.1, h = 0.25;
    const std::map<std::size_t, double> deltas = {{1, 0.4}, {4, -0.6}};
    const std::vector<double> a = {0.05, -0.02}, b = {0.03, 0.01};
    auto trend = [&](const Date& d) {
        double v = m0 + k0 * t_of(d);
        for (const auto& [j, delta] : deltas) v += delta * std::max(0.0, t_of(d) - t_of(cps[j]));
        return v;
    };
    auto truth = [&](const Date& d) {
        const double days = static_cast<double>(day_number(d) - day_number(dates[0]));
        double v = trend(d) + (cfg.holidays["fiesta"].count(d) ? h : 0.0);
        for (std::size_t k = 1; k <= 2; ++k) {
            const double angle = 2.0 * std::numbers::pi * static_cast<double>(k) * days / 7.0;
            v += a[k - 1] * std::cos(angle) + b[k - 1] * std::sin(angle);
        }
        return v;
    };

    timeseries::TimeSeries clean;
    for (const auto& d : dates) clean.points.push_back({d, truth(d)});
    auto exact = cfg;
    exact.ridge_lambda = 0.0;
    const auto m = timeseries::fit_structural(clean, exact);
    double err = std::max(std::abs(m.base_level - m0), std::abs(m.base_slope - k0));
    for (std::size_t j = 0; j < m.changepoints.size(); ++j) {
        const double want = deltas.count(j) ? deltas.at(j) : 0.0;
        err = std::max(err, std::abs(m.changepoints[j].delta - want));
    }
    for (std::size_t k = 0; k < 2; ++k) {
        err = std::max(err, std::abs(m.fourier[0].a[k] - a[k]));
        err = std::max(err, std::abs(m.fourier[0].b[k] - b[k]));
    }
    err = std::max(err, std::abs(m.holiday_effects.at("fiesta") - h));
    c.expect(err <= 1e-6, "noiseless coefficient error " + fmt(err));

    std::mt19937_64 rng(303);
    std::normal_distribution<double> noise(0.0, 0.01);
    timeseries::TimeSeries noisy;
    for (const auto& d : dates) noisy.points.push_back({d, truth(d) + noise(rng)});
    const auto fit = timeseries::fit_structural(noisy, cfg);
    double sq = 0.0;
    for (const auto& d : dates) sq += std::pow(timeseries::trend_component(fit, d) - trend(d), 2);
    const double rmse = std::sqrt(sq / static_cast<double>(n));
    c.expect(rmse <= 0.005, "noisy trend RMSE " + fmt(rmse));
    return c.outcome("noiseless max coefficient error " + fmt(err) + ", noisy trend RMSE " + fmt(rmse) + " (lambda " +
                     fmt(cfg.ridge_lambda) + ")");
}

// ---------------------------------------------------------------------------

Outcome anomaly_calibration() {
    Checks c;
    const std::size_t n = 5000;
    const double sigma = 0.05;
    timeseries::StructuralConfig cfg;  // defaults: 25 changepoints, yearly order 10
    cfg.seasonalities.push_back({7.0, 3});
    auto base = [&](std::size_t i) {
        const double t = static_cast<double>(i);
        return 0.3 + 2e-5 * t + 0.05 * std::sin(2.0 * std::numbers::pi * t / 365.25) + 0.03 * std::cos(2.0 * std::numbers::pi * t / 7.0);
    };
    std::vector<double> fractions;
    bool spikes_found = true;
    for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
        std::mt19937_64 rng(400 + seed);
        std::normal_distribution<double> noise(0.0, sigma);
        std::vector<double> v;
        for (std::size_t i = 0; i < n; ++i) v.push_back(base(i) + noise(rng));
        const auto ts = series_of(v);
        const auto report = timeseries::detect_anomalies(ts, timeseries::fit_structural(ts, cfg));
        const double fraction = static_cast<double>(report.anomalies().size()) / static_cast<double>(n);
        fractions.push_back(fraction);
        c.expect(std::abs(fraction - 0.01) <= 0.007, "flagged fraction " + fmt(fraction));

        auto spiked = v;
        const std::size_t at = 100 + rng() % (n - 200);
        spiked[at] += 10.0 * sigma;
        const auto ts2 = series_of(spiked);
        const auto r2 = timeseries::detect_anomalies(ts2, timeseries::fit_structural(ts2, cfg));
        bool found = false;
        for (const auto& row : r2.anomalies()) found = found || row.date == ts2.points[at].date;
        spikes_found = spikes_found && found;
        c.expect(found, "spike at index " + std::to_string(at) + " flagged");
    }
    std::string list;
    for (double f : fractions) list += (list.empty() ? "" : " ") + fmt(f);
    return c.outcome("flagged fractions " + list + ", planted +10 sigma spikes " + (spikes_found ? "all flagged" : "missed"));
}

// ---------------------------------------------------------------------------

Outcome ccf_lag() {
    Checks c;
    std::mt19937_64 rng(505);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> raw;
    for (int i = 0; i < 403; ++i) raw.push_back(g(rng));
    // y_t = x_{t-3}
    const std::vector<double> xs(raw.begin() + 3, raw.end()), ys(raw.begin(), raw.end() - 3);
    const auto r = timeseries::ccf(series_of(xs), series_of(ys), 10);
    c.expect(r.peak_lag == 3, "peak lag " + std::to_string(r.peak_lag));
    c.expect(r.peak_correlation >= 1.0 - 1e-9, "peak r " + fmt(r.peak_correlation));
    const auto self = timeseries::ccf(series_of(xs), series_of(xs), 10);
    c.expect(self.peak_lag == 0, "self peak lag " + std::to_string(self.peak_lag));
    return c.outcome("peak lag " + std::to_string(r.peak_lag) + ", r = 1 - " + fmt(1.0 - r.peak_correlation) +
                     ", self peak lag " + std::to_string(self.peak_lag));
}

// ---------------------------------------------------------------------------

tda::PointCloud cloud_of(const Matrix& coords, std::mt19937_64& rng) {
    tda::PointCloud c;
    c.coords = coords;
    for (Index i = 0; i < coords.rows(); ++i) {
        char buf[24];
        std::snprintf(buf, sizeof buf, "p%04ld", static_cast<long>(i));
        c.ids.push_back(buf);
        c.extra[buf] = static_cast<double>(rng() % 1000) / 1000.0;
    }
    return c;
}

Matrix gaussian(std::mt19937_64& rng, Index n, Index d, double sigma) {
    std::normal_distribution<double> g(0.0, sigma);
    Matrix m(n, d);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < d; ++j) m(i, j) = g(rng);
    return m;
}

Outcome mapper_topology() {
    Checks c;
    std::mt19937_64 rng(606);
    Matrix circle(200, 2);
    for (Index i = 0; i < 200; ++i) {
        const double a = 2.0 * std::numbers::pi * static_cast<double>(i) / 200.0;
        circle(i, 0) = std::cos(a);
        circle(i, 1) = std::sin(a);
    }
    const auto ring = tda::mapper(cloud_of(circle, rng), {tda::Lens::coordinate(0), {8, 0.4}, 0.3});
    const long betti = tda::first_betti_number(ring);
    c.expect(betti == 1, "circle Betti number " + std::to_string(betti));

    const double eps = 0.5;
    Matrix blobs = gaussian(rng, 200, 3, 0.05);
    for (Index i = 100; i < 200; ++i) blobs(i, 0) += 10.0 * eps;
    const auto two = tda::mapper(cloud_of(blobs, rng), {tda::Lens::coordinate(0), {6, 0.3}, eps});
    c.expect(tda::component_count(two) >= 2, "blob components " + std::to_string(tda::component_count(two)));
    std::size_t cross = 0;
    for (const auto& e : two.edges) cross += (two.nodes[e.source].members.front() >= "p0100") != (two.nodes[e.target].members.front() >= "p0100");
    for (const auto& node : two.nodes)
        c.expect(node.members.front() >= "p0100" || node.members.back() < "p0100", "node stays inside one blob");
    c.expect(cross == 0, "cross-blob edges " + std::to_string(cross));

    // brute-force invariants on random clouds up to 500 points
    std::size_t clouds = 0;
    for (int trial = 0; trial < 10; ++trial) {
        const Index n = 50 + static_cast<Index>(rng() % 451);
        const auto cloud = cloud_of(gaussian(rng, n, 3, 1.0), rng);
        tda::MapperConfig cfg;
        cfg.cover = {3 + rng() % 8, 0.1 + 0.1 * static_cast<double>(rng() % 6)};
        cfg.lens = trial % 2 ? tda::Lens::first_component() : tda::Lens::coordinate(rng() % 3);
        if (trial % 3 == 0) cfg.cluster_eps = 0.4;
        const auto g = tda::mapper(cloud, cfg);
        std::set<std::string> covered;
        for (const auto& node : g.nodes) covered.insert(node.members.begin(), node.members.end());
        c.expect(covered.size() == cloud.size(), "every point lies in some node");
        std::vector<tda::MapperEdge> expected;
        for (std::size_t a = 0; a < g.nodes.size(); ++a)
            for (std::size_t b = a + 1; b < g.nodes.size(); ++b) {
                std::set<std::string> sa(g.nodes[a].members.begin(), g.nodes[a].members.end());
                std::size_t shared = 0;
                for (const auto& m : g.nodes[b].members) shared += sa.count(m);
                if (shared) expected.push_back({a, b, shared});
            }
        c.expect(g.edges == expected, "edges are exactly the intersecting node pairs");
        ++clouds;
    }
    return c.outcome("circle Betti " + std::to_string(betti) + ", blobs " + std::to_string(tda::component_count(two)) +
                     " components with " + std::to_string(cross) + " cross edges, " + std::to_string(clouds) +
                     " random clouds checked");
}

// ---------------------------------------------------------------------------

Outcome pca() {
    Checks c;
    std::mt19937_64 rng(707);
    const Matrix basis = gaussian(rng, 2, 5, 1.0);
    const Matrix coeff = gaussian(rng, 120, 2, 1.0);
    tda::Vector offset(5);
    offset << 0.5, -1.0, 2.0, 0.0, 3.0;
    const Matrix x = (coeff * basis).rowwise() + offset.transpose();
    const auto plane = tda::pca_fit(x, 2);
    const double recon = (tda::pca_inverse(plane, tda::pca_transform(plane, x)) - x).cwiseAbs().maxCoeff();
    c.expect(recon <= 1e-9, "plane reconstruction " + fmt(recon));
    double ortho = 0.0;
    for (std::size_t k : {2u, 3u, 5u}) {
        const auto m = tda::pca_fit(gaussian(rng, 60, 5, 1.0), k);
        const auto kk = static_cast<Index>(k);
        ortho = std::max(ortho, (m.components * m.components.transpose() - Matrix::Identity(kk, kk)).cwiseAbs().maxCoeff());
    }
    ortho = std::max(ortho, (plane.components * plane.components.transpose() - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff());
    c.expect(ortho <= 1e-9, "orthonormality " + fmt(ortho));
    return c.outcome("orthonormality " + fmt(ortho) + ", plane reconstruction " + fmt(recon));
}

// ---------------------------------------------------------------------------

int run_cli(const std::string& args) {
    const int raw = std::system(("'" + std::string(MEDIASERIES_CLI) + "' " + args + " >/dev/null").c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

std::map<std::string, std::string> tree(const fs::path& root) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) files[fs::relative(e.path(), root).generic_string()] = io::read_file(e.path());
    return files;
}

Outcome end_to_end() {
    Checks c;
    const fs::path fixture = fs::path(MEDIASERIES_DATA_DIR) / "fixture";
    const auto base = fs::temp_directory_path() / "mediaseries_acceptance";
    fs::remove_all(base);
    for (const char* run : {"a", "b"}) {
        const int status = run_cli("--config '" + (fixture / "config.json").string() + "' all --paths.output='" +
                                   (base / run).string() + "'");
        c.expect(status == 0, std::string("run ") + run + " exit status " + std::to_string(status));
    }
    if (!fs::exists(base / "a") || !fs::exists(base / "b")) return c.outcome("pipeline did not run");
    const auto a = tree(base / "a");
    c.expect(a == tree(base / "b"), "output trees are byte-identical");

    const auto fx = synthetic::generate();
    const std::set<Date> spikes(fx.spike_days.begin(), fx.spike_days.end());
    std::set<Date> flagged;
    for (const auto& row : timeseries::anomalies_from_csv(a.at("anomalies/anomalies.csv")).anomalies()) flagged.insert(row.date);
    for (const auto& d : spikes) c.expect(flagged.count(d) > 0, format_date(d) + " in the anomaly CSV");

    // warmest heatmap cells: highest values, drawn in the warm end color
    const auto& svg = a.at("report/heatmap_" + std::to_string(static_cast<int>(fx.spike_days[0].year())) + ".svg");
    static const std::regex cell(R"re(fill="(#[0-9a-f]{6})" data-date="(\d{4}-\d\d-\d\d)" data-value="([-0-9.]+)")re");
    std::vector<std::pair<double, std::string>> cells;
    std::map<std::string, std::string> fills;
    for (auto it = std::sregex_iterator(svg.begin(), svg.end(), cell); it != std::sregex_iterator(); ++it) {
        cells.emplace_back(std::stod((*it)[3]), (*it)[2]);
        fills[(*it)[2]] = (*it)[1];
    }
    std::sort(cells.begin(), cells.end(), std::greater<>());
    std::set<std::string> warmest;
    for (std::size_t i = 0; i < spikes.size() && i < cells.size(); ++i) warmest.insert(cells[i].second);
    std::set<std::string> spike_names;
    for (const auto& d : spikes) spike_names.insert(format_date(d));
    c.expect(warmest == spike_names, "spike days are the warmest cells");
    if (spikes.size() < cells.size())
        c.expect(cells[spikes.size() - 1].first > cells[spikes.size()].first, "spike cells are strictly warmer than the rest");
    c.expect(!cells.empty() && fills[cells[0].second] == "#a50026", "hottest cell uses the warm end color");
    fs::remove_all(base);
    return c.outcome(std::to_string(a.size()) + " files identical across runs, " + std::to_string(flagged.size()) +
                     " flagged days including both spikes, warmest cells " +
                     [&] {
                         std::string s;
                         for (const auto& w : warmest) s += (s.empty() ? "" : " ") + w;
                         return s;
                     }());
}

// ---------------------------------------------------------------------------

Outcome threshold_semantics() {
    Checks c;
    classify::Architecture arch;
    arch.vocab_rows = 4;
    arch.sequence_length = 6;
    arch.embedding_dim = 2;
    arch.kernel_width = 3;
    arch.channels = {2};
    arch.labels = {"at", "above", "below"};
    auto model = classify::make_model(arch, 1, true);  // every output is exactly 0.5
    model.dense_bias(1) = 1e-9;
    model.dense_bias(2) = -1e-9;
    const std::vector<int> ids = {2, 3, 1, 0, 0, 0};
    const auto p = classify::forward(model, ids);
    c.expect(p[0] == 0.5, "zero logit gives exactly 0.5");
    const auto tags = classify::predict_tags(model, ids, 0.5);
    c.expect(tags == std::set<std::string>{"above"}, "tag at 0.5 excluded, above included");

    const double above = std::nextafter(0.9999, 1.0), below = std::nextafter(0.9999, 0.0);
    const auto picked = tda::select_above({{"at", 0.9999}, {"above", above}, {"below", below}, {"one", 1.0}}, 0.9999);
    c.expect(picked == std::vector<std::string>{"above", "one"}, "GBV subset at 0.9999 excluded");
    const auto defaults = tda::select_above({{"at", 0.9999}, {"above", above}});
    c.expect(defaults == std::vector<std::string>{"above"}, "default GBV threshold is 0.9999");
    return c.outcome("tag threshold 0.5 and GBV threshold 0.9999 both exclude the boundary");
}

struct Criterion {
    std::string name;
    double budget_seconds;  // 0: no runtime bound
    std::function<Outcome()> run;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {"decomposition oracle", 5, decomposition_oracle},
        {"gradient check", 60, gradient_check},
        {"classifier convergence", 300, classifier_convergence},
        {"structural fit recovery", 10, structural_recovery},
        {"anomaly calibration", 10, anomaly_calibration},
        {"CCF lag recovery", 0, ccf_lag},
        {"Mapper topology", 0, mapper_topology},
        {"PCA", 0, pca},
        {"end-to-end determinism", 0, end_to_end},
        {"threshold semantics", 0, threshold_semantics},
    };
    int failed = 0;
    for (const auto& criterion : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criterion.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (criterion.budget_seconds > 0 && seconds > criterion.budget_seconds) {
            o.pass = false;
            o.detail += "; FAILED runtime over " + fmt(criterion.budget_seconds) + " s";
        }
        failed += !o.pass;
        char timing[32];
        std::snprintf(timing, sizeof timing, "%.2fs", seconds);
        std::cout << (o.pass ? "PASS" : "FAIL") << "  " << criterion.name << "  [" << timing << "]  " << o.detail << std::endl;
    }
    std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed" << std::endl;
    return failed == 0 ? 0 : 1;
}
