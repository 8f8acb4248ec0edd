#pragma once

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mediaseries/classify.hpp"
#include "mediaseries/corpus.hpp"
#include "mediaseries/emit.hpp"
#include "mediaseries/error.hpp"
#include "mediaseries/html.hpp"
#include "mediaseries/io.hpp"
#include "mediaseries/stopwords.hpp"
#include "mediaseries/tda.hpp"
#include "mediaseries/timeseries.hpp"

namespace mediaseries::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

inline constexpr const char* kConfigEnv = "MEDIASERIES_CONFIG";

// ---------------------------------------------------------------------------
// configuration

/// Every accepted key with its default. Files and flags may only set keys
/// that appear here.
inline json default_config() {
    auto network = [](json channels, json pool_after) {
        return json{{"embedding_dim", 64}, {"kernel_width", 5}, {"channels", channels}, {"pool_after", pool_after},
                    {"learning_rate", 0.001}, {"epochs", 20}, {"batch_size", 32}, {"optimizer", "adam"}};
    };
    json tagger = network({128, 128}, json::array());
    tagger["min_tag_documents"] = 5;
    json scorer = network({64, 128, 128, 128}, {2});
    scorer["gbv_tag"] = "violencia machista";
    return {
        {"seed", 42},
        {"jobs", 1},
        {"paths",
         {{"html_dir", ""}, {"corpus", ""}, {"stopwords", ""}, {"survey", ""}, {"holidays", ""}, {"output", "out"}}},
        {"corpus", {{"min_df", 2}, {"max_vocab", 50000}, {"max_sequence_length", 512}}},
        {"tagger", tagger},
        {"scorer", scorer},
        {"thresholds", {{"tag", 0.5}, {"gbv_select", 0.9999}, {"gbv_report", 0.5}}},
        {"series", {{"period", 7}, {"trend_lag", 36}}},
        {"structural",
         {{"n_changepoints", 25},
          {"changepoint_range", 0.8},
          {"seasonalities", json::array({{{"period_days", 365.25}, {"order", 10}}})},
          {"ridge_lambda", 1e-4}}},
        {"ccf", {{"max_lag", 30}}},
        {"mapper",
         {{"subset", "gbv"},
          {"year", nullptr},
          {"dimension", 3},
          {"lens", "pc1"},
          {"n_intervals", 10},
          {"overlap", 0.35},
          {"cluster_eps", nullptr}}},
        {"report", {{"top_n", 20}, {"heatmap_scale", "global"}}},
    };
}

namespace detail {

/// Overlays `patch` on `base`, rejecting keys the base does not have.
inline void merge_known(json& base, const json& patch, const std::string& prefix) {
    if (!patch.is_object()) throw ConfigInvalid("configuration '" + (prefix.empty() ? "<root>" : prefix) + "' must be an object");
    for (const auto& [key, value] : patch.items()) {
        const auto path = prefix.empty() ? key : prefix + "." + key;
        if (!base.contains(key)) throw ConfigInvalid("unknown configuration key '" + path + "'");
        if (base[key].is_object())
            merge_known(base[key], value, path);
        else
            base[key] = value;
    }
}

}  // namespace detail

/// `key=value` with a dotted key. The value is read as JSON when it parses
/// and the key is not a string setting; otherwise it is taken verbatim.
inline void apply_override(json& config, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigInvalid("override '" + assignment + "' is not key=value");
    const auto key = assignment.substr(0, eq);
    const auto raw = assignment.substr(eq + 1);
    json* node = &config;
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        const auto part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (!node->is_object() || !node->contains(part)) throw ConfigInvalid("unknown configuration key '" + key + "'");
        node = &(*node)[part];
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    if (node->is_object()) throw ConfigInvalid("'" + key + "' is a section, not a setting");
    if (node->is_string()) {
        *node = raw;
        return;
    }
    auto parsed = json::parse(raw, nullptr, false);
    *node = parsed.is_discarded() ? json(raw) : parsed;
}

struct NetworkConfig {
    std::size_t embedding_dim = 64;
    int kernel_width = 5;
    std::vector<int> channels;
    std::vector<std::size_t> pool_after;
    classify::TrainConfig train;
};

struct Paths {
    fs::path html_dir, corpus, stopwords, survey, holidays, output;
};

struct RunConfig {
    json raw;
    std::uint64_t seed = 42;
    std::size_t jobs = 1;
    Paths paths;
    std::size_t min_df = 2, max_vocab = 50000, max_sequence_length = 512;
    NetworkConfig tagger, scorer;
    std::size_t min_tag_documents = 5;
    std::string gbv_tag;
    double tag_threshold = 0.5, gbv_select = 0.9999, gbv_report = 0.5;
    std::size_t period = 7, trend_lag = 36;
    timeseries::StructuralConfig structural;
    std::size_t max_lag = 30;
    std::string mapper_subset = "gbv";
    std::optional<int> mapper_year;
    std::size_t mapper_dimension = 3;
    tda::MapperConfig mapper;
    std::size_t top_n = 20;
    std::string heatmap_scale = "global";

    /// Ingested corpus location when no corpus file is configured.
    fs::path corpus_file() const { return paths.corpus.empty() ? paths.output / "corpus.jsonl" : paths.corpus; }
};

namespace detail {

inline fs::path resolve(const std::string& p, const fs::path& base) {
    if (p.empty()) return {};
    fs::path path(p);
    return path.is_absolute() ? path : base / path;
}

/// Non-negative integer setting; negative numbers are rejected rather than wrapped.
inline std::size_t count_at(const json& j, const std::string& key) {
    const auto& v = j.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0) throw ConfigInvalid("'" + key + "' must be a non-negative integer, got " + v.dump());
    return v.get<std::size_t>();
}

inline NetworkConfig network_from(const json& j, std::uint64_t seed, std::size_t jobs) {
    NetworkConfig n;
    n.embedding_dim = detail::count_at(j, "embedding_dim");
    n.kernel_width = j.at("kernel_width").get<int>();
    n.channels = j.at("channels").get<std::vector<int>>();
    n.pool_after = j.at("pool_after").get<std::vector<std::size_t>>();
    n.train.learning_rate = j.at("learning_rate").get<double>();
    n.train.epochs = detail::count_at(j, "epochs");
    n.train.batch_size = detail::count_at(j, "batch_size");
    n.train.optimizer = classify::optimizer_from_string(j.at("optimizer").get<std::string>());
    n.train.seed = seed;
    n.train.threads = jobs;
    if (n.embedding_dim == 0 || n.kernel_width < 1 || n.kernel_width % 2 == 0 || n.channels.empty() ||
        n.train.batch_size == 0 || n.train.epochs == 0 || !(n.train.learning_rate >= 0.0))
        throw ConfigInvalid("invalid network settings: " + j.dump());
    for (int c : n.channels)
        if (c < 1) throw ConfigInvalid("channel counts must be positive");
    return n;
}

inline void require_probability(double p, const std::string& name) {
    if (!(p > 0.0 && p < 1.0)) throw ConfigInvalid(name + " must lie in (0,1)");
}

}  // namespace detail

/// Typed view of a merged configuration. Relative paths resolve against
/// `base_dir`.
inline RunConfig parse_config(const json& merged, const fs::path& base_dir) {
    RunConfig c;
    c.raw = merged;
    try {
        c.seed = merged.at("seed").get<std::uint64_t>();
        c.jobs = std::max<std::size_t>(1, detail::count_at(merged, "jobs"));
        const auto& p = merged.at("paths");
        c.paths.html_dir = detail::resolve(p.at("html_dir").get<std::string>(), base_dir);
        c.paths.corpus = detail::resolve(p.at("corpus").get<std::string>(), base_dir);
        c.paths.stopwords = detail::resolve(p.at("stopwords").get<std::string>(), base_dir);
        c.paths.survey = detail::resolve(p.at("survey").get<std::string>(), base_dir);
        c.paths.holidays = detail::resolve(p.at("holidays").get<std::string>(), base_dir);
        c.paths.output = detail::resolve(p.at("output").get<std::string>(), base_dir);
        if (c.paths.output.empty()) throw ConfigInvalid("paths.output must be set");

        const auto& cj = merged.at("corpus");
        c.min_df = detail::count_at(cj, "min_df");
        c.max_vocab = detail::count_at(cj, "max_vocab");
        c.max_sequence_length = detail::count_at(cj, "max_sequence_length");
        if (c.min_df < 1 || c.max_vocab < 1 || c.max_sequence_length < 1)
            throw ConfigInvalid("corpus settings must be positive");

        c.tagger = detail::network_from(merged.at("tagger"), c.seed, c.jobs);
        c.min_tag_documents = detail::count_at(merged.at("tagger"), "min_tag_documents");
        if (c.min_tag_documents < 1) throw ConfigInvalid("tagger.min_tag_documents must be positive");
        c.scorer = detail::network_from(merged.at("scorer"), c.seed + 1, c.jobs);
        c.gbv_tag = text::trim(text::to_lower(merged.at("scorer").at("gbv_tag").get<std::string>()));
        if (c.gbv_tag.empty()) throw ConfigInvalid("scorer.gbv_tag must be set");

        const auto& t = merged.at("thresholds");
        c.tag_threshold = t.at("tag").get<double>();
        c.gbv_select = t.at("gbv_select").get<double>();
        c.gbv_report = t.at("gbv_report").get<double>();
        detail::require_probability(c.tag_threshold, "thresholds.tag");
        detail::require_probability(c.gbv_select, "thresholds.gbv_select");
        detail::require_probability(c.gbv_report, "thresholds.gbv_report");

        c.period = detail::count_at(merged.at("series"), "period");
        c.trend_lag = detail::count_at(merged.at("series"), "trend_lag");
        if (c.period < 2) throw ConfigInvalid("series.period must be at least 2");

        const auto& s = merged.at("structural");
        c.structural.n_changepoints = detail::count_at(s, "n_changepoints");
        c.structural.changepoint_range = s.at("changepoint_range").get<double>();
        c.structural.ridge_lambda = s.at("ridge_lambda").get<double>();
        c.structural.seasonalities.clear();
        for (const auto& f : s.at("seasonalities"))
            c.structural.seasonalities.push_back({f.at("period_days").get<double>(), detail::count_at(f, "order")});
        if (!(c.structural.changepoint_range > 0.0 && c.structural.changepoint_range <= 1.0))
            throw ConfigInvalid("structural.changepoint_range must lie in (0,1]");
        if (!(c.structural.ridge_lambda >= 0.0)) throw ConfigInvalid("structural.ridge_lambda must be non-negative");

        c.max_lag = detail::count_at(merged.at("ccf"), "max_lag");

        const auto& m = merged.at("mapper");
        c.mapper_subset = m.at("subset").get<std::string>();
        if (c.mapper_subset != "gbv" && c.mapper_subset != "all")
            throw ConfigInvalid("mapper.subset must be 'gbv' or 'all'");
        if (!m.at("year").is_null()) c.mapper_year = m.at("year").get<int>();
        c.mapper_dimension = detail::count_at(m, "dimension");
        if (c.mapper_dimension < 1) throw ConfigInvalid("mapper.dimension must be positive");
        try {
            c.mapper.lens = tda::lens_from_string(m.at("lens").get<std::string>());
        } catch (const ParseError& e) {
            throw ConfigInvalid(e.what());
        }
        c.mapper.cover = {detail::count_at(m, "n_intervals"), m.at("overlap").get<double>()};
        if (c.mapper.cover.n_intervals < 1) throw ConfigInvalid("mapper.n_intervals must be positive");
        detail::require_probability(c.mapper.cover.overlap, "mapper.overlap");
        if (!m.at("cluster_eps").is_null()) {
            c.mapper.cluster_eps = m.at("cluster_eps").get<double>();
            if (!(*c.mapper.cluster_eps > 0.0)) throw ConfigInvalid("mapper.cluster_eps must be positive");
        }

        c.top_n = detail::count_at(merged.at("report"), "top_n");
        c.heatmap_scale = merged.at("report").at("heatmap_scale").get<std::string>();
        if (c.heatmap_scale != "global" && c.heatmap_scale != "year")
            throw ConfigInvalid("report.heatmap_scale must be 'global' or 'year'");
    } catch (const json::exception& e) {
        throw ConfigInvalid(std::string("configuration has a wrong type: ") + e.what());
    } catch (const ParseError& e) {
        throw ConfigInvalid(e.what());
    }
    return c;
}

/// Defaults, then the file (if any), then `key=value` overrides.
inline RunConfig load_config(const std::optional<fs::path>& file, const std::vector<std::string>& overrides) {
    json merged = default_config();
    fs::path base = fs::current_path();
    if (file) {
        if (!fs::is_regular_file(*file)) throw ConfigInvalid("config file not found: " + file->string());
        auto parsed = json::parse(io::read_file(*file), nullptr, false);
        if (parsed.is_discarded()) throw ConfigInvalid("config file is not valid JSON: " + file->string());
        detail::merge_known(merged, parsed, "");
        base = fs::absolute(*file).parent_path();
    }
    for (const auto& o : overrides) apply_override(merged, o);
    return parse_config(merged, base);
}

// ---------------------------------------------------------------------------
// artifacts

/// Output layout, relative to the output directory.
namespace artifact {
inline const fs::path corpus = "corpus.jsonl";
inline const fs::path normalized = "normalized.jsonl";
inline const fs::path vocabulary = "vocabulary.json";
inline const fs::path tagger = fs::path("models") / "tagger.json";
inline const fs::path scorer = fs::path("models") / "scorer.json";
inline const fs::path scores = "scores.jsonl";
inline const fs::path daily = fs::path("series") / "daily.csv";
}  // namespace artifact

struct Score {
    std::string id;
    Date date;
    std::set<std::string> tags;
    double gbv = 0.0;
};

inline void to_json(json& j, const Score& s) {
    j = json{{"id", s.id}, {"date", format_date(s.date)}, {"tags", s.tags}, {"gbv", s.gbv}};
}

inline void from_json(const json& j, Score& s) {
    s.id = j.at("id").get<std::string>();
    s.date = parse_date(j.at("date").get<std::string>());
    s.tags = j.at("tags").get<std::set<std::string>>();
    s.gbv = j.at("gbv").get<double>();
}

/// Collects written paths; every artifact goes through here.
class Outputs {
public:
    explicit Outputs(fs::path root) : root_(std::move(root)) {}
    const fs::path& root() const { return root_; }
    fs::path path(const fs::path& rel) const { return root_ / rel; }

    void write(const fs::path& rel, std::string_view content) {
        io::write_file(path(rel), content);
        written_.push_back(path(rel));
    }
    void record(const std::vector<fs::path>& paths) { written_.insert(written_.end(), paths.begin(), paths.end()); }
    const std::vector<fs::path>& written() const { return written_; }

private:
    fs::path root_;
    std::vector<fs::path> written_;
};

namespace detail {

inline void require_file(const fs::path& p, const std::string& what) {
    if (p.empty()) throw ConfigInvalid(what + " is not configured");
    if (!fs::is_regular_file(p)) throw ConfigInvalid(what + " not found: " + p.string());
}

inline void require_dir(const fs::path& p, const std::string& what) {
    if (p.empty()) throw ConfigInvalid(what + " is not configured");
    if (!fs::is_directory(p)) throw ConfigInvalid(what + " not found: " + p.string());
}

inline void require_artifact(const Outputs& out, const fs::path& rel, const std::string& producer) {
    if (!fs::is_regular_file(out.path(rel)))
        throw ConfigInvalid("missing " + out.path(rel).string() + "; run '" + producer + "' first");
}

inline std::set<std::string> stopwords(const RunConfig& c) {
    return c.paths.stopwords.empty() ? corpus::default_stopwords() : corpus::load_stopwords(c.paths.stopwords);
}

/// Canonical link or og:url of a page, if present.
inline std::string page_url(std::string_view markup) {
    std::string canonical, og;
    html::Visitor v;
    v.on_tag = [&](const html::Tag& tag) {
        if (tag.closing) return;
        if (tag.name == "link" && html::detail::lower_ascii(tag.attr("rel")) == "canonical" && canonical.empty())
            canonical = text::trim(tag.attr("href"));
        if (tag.name == "meta" && html::detail::lower_ascii(tag.attr("property")) == "og:url" && og.empty())
            og = text::trim(tag.attr("content"));
    };
    html::scan(markup, v);
    return !canonical.empty() ? canonical : og;
}

inline std::string host_of(const std::string& url) {
    const auto scheme = url.find("://");
    if (scheme == std::string::npos) return "local";
    const auto start = scheme + 3;
    const auto end = url.find_first_of("/?#", start);
    auto host = url.substr(start, end == std::string::npos ? std::string::npos : end - start);
    return host.empty() ? "local" : host;
}

/// Held-out documents: a fixed fifth chosen by id hash.
inline bool held_out(const std::string& id) { return std::stoull(io::fnv1a_hex(id), nullptr, 16) % 5 == 0; }

struct Vectorized {
    std::vector<corpus::NormalizedDoc> docs;  // sorted by id
    corpus::Vocabulary vocab;
    std::map<std::string, std::vector<int>> ids;
};

inline Vectorized load_vectorized(const Outputs& out) {
    Vectorized v;
    v.docs = corpus::read_jsonl<corpus::NormalizedDoc>(out.path(artifact::normalized));
    v.vocab = corpus::vocabulary_from_json(json::parse(io::read_file(out.path(artifact::vocabulary))));
    for (const auto& d : v.docs) v.ids[d.doc_id] = corpus::vectorize(d, v.vocab);
    return v;
}

inline std::map<std::string, corpus::Document> corpus_by_id(const RunConfig& c) {
    std::map<std::string, corpus::Document> out;
    for (auto& d : corpus::read_corpus(c.corpus_file())) out.emplace(d.id, std::move(d));
    return out;
}

inline classify::Architecture architecture(const NetworkConfig& n, std::size_t vocab_rows, std::size_t seq,
                                           std::vector<std::string> labels) {
    return {vocab_rows, seq, n.embedding_dim, n.kernel_width, n.channels, n.pool_after, std::move(labels)};
}

inline json metrics_json(const classify::EvalMetrics& m) {
    return {{"bce", m.bce}, {"subset_accuracy", m.subset_accuracy}, {"precision", m.precision}, {"recall", m.recall}};
}

/// Trains on the non-held-out documents and writes model, metrics and log.
inline void train_and_write(const RunConfig& c, Outputs& out, const NetworkConfig& net, const classify::Architecture& arch,
                            const std::vector<std::string>& order, const std::map<std::string, std::vector<int>>& ids,
                            const std::map<std::string, std::vector<double>>& targets, const std::string& name) {
    std::vector<classify::Example> train_set, test_set;
    for (const auto& id : order) {
        classify::Example ex{ids.at(id), targets.at(id)};
        (held_out(id) ? test_set : train_set).push_back(std::move(ex));
    }
    if (train_set.empty()) throw EmptyDataset("no training documents for the " + name);
    auto result = classify::train(classify::make_model(arch, net.train.seed), train_set, net.train);
    json metrics = {{"train", metrics_json(classify::evaluate(result.model, train_set, c.tag_threshold))},
                    {"train_documents", train_set.size()},
                    {"held_out_documents", test_set.size()},
                    {"labels", arch.labels}};
    metrics["held_out"] = test_set.empty() ? json(nullptr) : metrics_json(classify::evaluate(result.model, test_set, c.tag_threshold));
    out.write(fs::path("models") / (name + ".json"), classify::model_to_json(result.model).dump() + "\n");
    out.write(fs::path("models") / (name + "_metrics.json"), metrics.dump(2) + "\n");
    out.write(fs::path("models") / (name + "_training.csv"), classify::training_log_csv(result.loss_history));
}

inline std::vector<Score> load_scores(const Outputs& out) {
    return corpus::read_jsonl<Score>(out.path(artifact::scores));
}

inline timeseries::TimeSeries load_daily(const Outputs& out) {
    auto ts = timeseries::series_from_csv(io::read_file(out.path(artifact::daily)), timeseries::Granularity::daily);
    ts.validate();
    return ts;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// subcommands

/// HTML pages (*.html, *.htm) to corpus JSONL sorted by id. Pages that fail
/// extraction are skipped and reported through `warn`.
inline void ingest(const RunConfig& c, Outputs& out, const std::function<void(const std::string&)>& warn) {
    detail::require_dir(c.paths.html_dir, "paths.html_dir");
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(c.paths.html_dir))
        if (e.is_regular_file() && (e.path().extension() == ".html" || e.path().extension() == ".htm"))
            files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::map<std::string, corpus::Document> docs;
    for (const auto& f : files) {
        corpus::RawArticle raw;
        raw.markup = io::read_file(f);
        raw.url = detail::page_url(raw.markup);
        if (raw.url.empty()) raw.url = "file:" + fs::relative(f, c.paths.html_dir).generic_string();
        raw.source_id = detail::host_of(raw.url);
        try {
            auto doc = corpus::extract_article(raw);
            if (!docs.emplace(doc.id, doc).second) warn("duplicate page skipped: " + f.string());
        } catch (const ExtractionFailed& e) {
            warn(std::string("page skipped: ") + e.what());
        } catch (const DateUnparseable& e) {
            warn(std::string("page skipped: ") + e.what());
        }
    }
    if (docs.empty()) throw EmptyInput("no article could be extracted from " + c.paths.html_dir.string());
    std::vector<corpus::Document> sorted;
    for (auto& [id, d] : docs) sorted.push_back(std::move(d));
    out.write(artifact::corpus, corpus::to_jsonl(sorted));
}

inline void normalize(const RunConfig& c, Outputs& out) {
    auto docs = corpus::read_corpus(c.corpus_file());
    if (docs.empty()) throw EmptyInput("corpus is empty");
    std::sort(docs.begin(), docs.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    const auto stop = detail::stopwords(c);
    std::vector<corpus::NormalizedDoc> normalized(docs.size());
    classify::detail::parallel_for(docs.size(), c.jobs,
                                   [&](std::size_t i) { normalized[i] = corpus::normalize_document(docs[i], stop); });
    const auto vocab = corpus::build_vocabulary(normalized, c.min_df, c.max_vocab, c.max_sequence_length);
    out.write(artifact::normalized, corpus::to_jsonl(normalized));
    out.write(artifact::vocabulary, corpus::vocabulary_to_json(vocab).dump(1) + "\n");
}

/// Multilabel tagger over every tag carried by at least `min_tag_documents` documents.
inline void train_tags(const RunConfig& c, Outputs& out) {
    const auto docs = detail::corpus_by_id(c);
    const auto v = detail::load_vectorized(out);
    std::vector<std::set<std::string>> tag_sets;
    for (const auto& [id, d] : docs) tag_sets.push_back(d.tags);
    std::vector<std::string> labels;
    try {
        for (const auto& row : emit::tag_frequency(tag_sets, std::numeric_limits<std::size_t>::max()).rows)
            if (row.count >= c.min_tag_documents) labels.push_back(row.tag);
    } catch (const EmptyInput&) {
    }
    if (labels.empty()) throw EmptyDataset("the corpus has no tags to learn");
    std::map<std::string, std::vector<double>> targets;
    std::vector<std::string> order;
    for (const auto& d : v.docs) {
        auto it = docs.find(d.doc_id);
        if (it == docs.end()) throw LengthMismatch("normalized document '" + d.doc_id + "' is not in the corpus");
        std::vector<double> t;
        for (const auto& l : labels) t.push_back(it->second.tags.count(l) ? 1.0 : 0.0);
        targets[d.doc_id] = std::move(t);
        order.push_back(d.doc_id);
    }
    const auto arch = detail::architecture(c.tagger, v.vocab.rows(), v.vocab.max_sequence_length, labels);
    detail::train_and_write(c, out, c.tagger, arch, order, v.ids, targets, "tagger");
}

/// Binary scorer: target 1 when the document carries the GBV tag.
inline void train_gbv(const RunConfig& c, Outputs& out) {
    const auto docs = detail::corpus_by_id(c);
    const auto v = detail::load_vectorized(out);
    std::map<std::string, std::vector<double>> targets;
    std::vector<std::string> order;
    for (const auto& d : v.docs) {
        auto it = docs.find(d.doc_id);
        if (it == docs.end()) throw LengthMismatch("normalized document '" + d.doc_id + "' is not in the corpus");
        targets[d.doc_id] = {it->second.tags.count(c.gbv_tag) ? 1.0 : 0.0};
        order.push_back(d.doc_id);
    }
    const auto arch = detail::architecture(c.scorer, v.vocab.rows(), v.vocab.max_sequence_length, {"gbv"});
    detail::train_and_write(c, out, c.scorer, arch, order, v.ids, targets, "scorer");
}

inline void score(const RunConfig& c, Outputs& out) {
    const auto docs = detail::corpus_by_id(c);
    const auto v = detail::load_vectorized(out);
    const auto tagger = classify::load_model(out.path(artifact::tagger));
    const auto scorer = classify::load_model(out.path(artifact::scorer));
    if (scorer.label_count() != 1) throw NotBinaryModel("scorer model must have one output");
    std::vector<std::vector<int>> inputs;
    for (const auto& d : v.docs) inputs.push_back(v.ids.at(d.doc_id));
    const auto tag_p = classify::predict_all(tagger, inputs, c.jobs);
    const auto gbv_p = classify::predict_all(scorer, inputs, c.jobs);
    std::vector<Score> scores;
    for (std::size_t i = 0; i < v.docs.size(); ++i) {
        auto it = docs.find(v.docs[i].doc_id);
        if (it == docs.end()) throw LengthMismatch("normalized document '" + v.docs[i].doc_id + "' is not in the corpus");
        Score s{it->first, it->second.published_at, {}, gbv_p[i][0]};
        for (std::size_t j = 0; j < tag_p[i].size(); ++j)
            if (tag_p[i][j] > c.tag_threshold) s.tags.insert(tagger.label_names[j]);
        scores.push_back(std::move(s));
    }
    out.write(artifact::scores, corpus::to_jsonl(scores));
}

/// Mean GBV probability per day and per month, plus the classical
/// decomposition of the daily series.
inline void series(const RunConfig& c, Outputs& out) {
    std::vector<timeseries::Prediction> preds;
    for (const auto& s : detail::load_scores(out)) preds.push_back({s.date, s.gbv});
    const auto daily = timeseries::aggregate(preds, timeseries::Granularity::daily);
    const auto monthly = timeseries::aggregate(preds, timeseries::Granularity::monthly);
    const auto d = timeseries::decompose_ma(daily, c.period);
    const auto ratio = timeseries::trend_ratio(d, c.trend_lag);
    out.write(artifact::daily, timeseries::series_to_csv(daily));
    out.write(fs::path("series") / "monthly.csv", timeseries::series_to_csv(monthly));
    out.record(emit::render_report(d, out.path("series"), "decomposition"));
    json summary = {{"days", daily.size()},
                    {"months", monthly.size()},
                    {"period", c.period},
                    {"trend_lag", c.trend_lag},
                    {"trend_ratio", ratio ? json(*ratio) : json(nullptr)}};
    out.write(fs::path("series") / "summary.json", summary.dump(2) + "\n");
}

inline void anomalies(const RunConfig& c, Outputs& out) {
    const auto daily = detail::load_daily(out);
    auto cfg = c.structural;
    if (!c.paths.holidays.empty()) cfg.holidays = timeseries::read_holidays(c.paths.holidays);
    const auto model = timeseries::fit_structural(daily, cfg);
    const auto report = timeseries::detect_anomalies(daily, model);
    // headline of each flagged day: its highest-scoring document
    std::map<Date, std::pair<double, std::string>> best;
    const auto docs = detail::corpus_by_id(c);
    for (const auto& s : detail::load_scores(out)) {
        auto it = docs.find(s.id);
        if (it == docs.end()) continue;
        auto [pos, inserted] = best.try_emplace(s.date, s.gbv, it->second.title);
        if (!inserted && s.gbv > pos->second.first) pos->second = {s.gbv, it->second.title};
    }
    std::map<Date, std::string> headlines;
    for (const auto& [date, v] : best) headlines[date] = v.second;
    out.record(emit::render_report(report, out.path("anomalies"), "anomalies", headlines));
    out.write(fs::path("anomalies") / "model.json", timeseries::model_to_json(model).dump(2) + "\n");
}

inline void ccf(const RunConfig& c, Outputs& out) {
    const auto daily = detail::load_daily(out);
    auto survey = timeseries::series_from_csv(io::read_file(c.paths.survey), timeseries::Granularity::daily);
    survey.validate();
    const auto r = timeseries::ccf(daily, survey, c.max_lag);
    out.record(emit::render_report(r, out.path("ccf"), "ccf"));
}

/// Tagger probability vectors of the chosen documents, reduced by PCA,
/// then Mapper.
inline void mapper(const RunConfig& c, Outputs& out) {
    const auto v = detail::load_vectorized(out);
    const auto tagger = classify::load_model(out.path(artifact::tagger));
    std::map<std::string, double> gbv;
    std::map<std::string, Date> dates;
    for (const auto& s : detail::load_scores(out)) {
        gbv[s.id] = s.gbv;
        dates[s.id] = s.date;
    }
    std::vector<std::string> chosen;
    if (c.mapper_subset == "gbv") {
        chosen = tda::select_above(gbv, c.gbv_select);
    } else {
        for (const auto& [id, p] : gbv) chosen.push_back(id);
    }
    if (c.mapper_year)
        std::erase_if(chosen, [&](const std::string& id) { return static_cast<int>(dates.at(id).year()) != *c.mapper_year; });
    if (chosen.empty()) throw EmptyInput("no documents selected for Mapper (subset '" + c.mapper_subset + "')");
    std::vector<tda::VectorizedDoc> docs;
    for (const auto& id : chosen) {
        auto it = v.ids.find(id);
        if (it == v.ids.end()) throw LengthMismatch("scored document '" + id + "' is not normalized");
        docs.push_back({id, it->second});
    }
    const auto cloud = tda::tag_probability_cloud(tagger, docs, gbv, c.jobs);
    const auto k = std::min<std::size_t>(c.mapper_dimension, static_cast<std::size_t>(cloud.coords.cols()));
    const auto reduced = tda::reduce(cloud, k);
    const auto graph = tda::decorate(tda::mapper(reduced, c.mapper));
    out.record(emit::render_report(graph, out.path("mapper"), "graph"));
    out.write(fs::path("mapper") / "summary.json",
              json{{"documents", chosen.size()},
                   {"subset", c.mapper_subset},
                   {"year", c.mapper_year ? json(*c.mapper_year) : json(nullptr)},
                   {"lens", c.mapper.lens.name()},
                   {"nodes", graph.nodes.size()},
                   {"edges", graph.edges.size()},
                   {"components", tda::component_count(graph)},
                   {"first_betti_number", tda::first_betti_number(graph)}}
                      .dump(2) +
                  "\n");
}

/// Calendar heatmap per year of the daily series and predicted tag
/// frequencies for all documents and for the GBV ones.
inline void report(const RunConfig& c, Outputs& out) {
    const auto daily = detail::load_daily(out);
    const auto scores = detail::load_scores(out);
    if (daily.empty()) throw EmptyInput("daily series is empty");
    std::set<int> years;
    for (const auto& p : daily.points) years.insert(static_cast<int>(p.date.year()));
    for (int y : years) {
        std::optional<emit::ColorScale> scale;
        if (c.heatmap_scale == "year") {
            timeseries::TimeSeries part{{}, daily.granularity};
            for (const auto& p : daily.points)
                if (static_cast<int>(p.date.year()) == y) part.points.push_back(p);
            scale = emit::scale_of(part);
        }
        out.write(fs::path("report") / ("heatmap_" + std::to_string(y) + ".svg"), emit::render_heatmap(daily, y, scale).svg);
    }
    std::vector<std::set<std::string>> all, gbv;
    for (const auto& s : scores) {
        all.push_back(s.tags);
        if (s.gbv > c.gbv_report) gbv.push_back(s.tags);
    }
    out.record(emit::render_report(emit::tag_frequency(all, c.top_n), out.path("report"), "tags_all"));
    if (!gbv.empty()) out.record(emit::render_report(emit::tag_frequency(gbv, c.top_n), out.path("report"), "tags_gbv"));
}

// ---------------------------------------------------------------------------
// dispatch

inline const std::vector<std::string>& subcommands() {
    static const std::vector<std::string> names = {"ingest", "normalize", "train-tags", "train-gbv", "score", "series",
                                                   "anomalies", "ccf",    "mapper",     "report",    "all"};
    return names;
}

/// Steps `all` runs. Ingestion only happens when no corpus file is given.
inline std::vector<std::string> all_steps(const RunConfig& c) {
    std::vector<std::string> steps;
    if (c.paths.corpus.empty()) steps.push_back("ingest");
    for (const auto& s : subcommands())
        if (s != "ingest" && s != "all") steps.push_back(s);
    return steps;
}

/// Checks inputs of a step before anything is written. `produced` lists
/// artifacts earlier steps of the same run will create.
inline void validate(const std::string& step, const RunConfig& c, const Outputs& out, const std::set<fs::path>& produced) {
    auto need = [&](const fs::path& rel, const std::string& producer) {
        if (!produced.count(rel)) detail::require_artifact(out, rel, producer);
    };
    auto need_corpus = [&] {
        if (c.paths.corpus.empty())
            need(artifact::corpus, "ingest");
        else
            detail::require_file(c.paths.corpus, "paths.corpus");
    };
    if (!c.paths.stopwords.empty()) detail::require_file(c.paths.stopwords, "paths.stopwords");
    if (step == "ingest") {
        detail::require_dir(c.paths.html_dir, "paths.html_dir");
    } else if (step == "normalize") {
        need_corpus();
    } else if (step == "train-tags" || step == "train-gbv") {
        need_corpus();
        need(artifact::normalized, "normalize");
        need(artifact::vocabulary, "normalize");
    } else if (step == "score") {
        need_corpus();
        need(artifact::normalized, "normalize");
        need(artifact::vocabulary, "normalize");
        need(artifact::tagger, "train-tags");
        need(artifact::scorer, "train-gbv");
    } else if (step == "series") {
        need(artifact::scores, "score");
    } else if (step == "anomalies") {
        if (!c.paths.holidays.empty()) detail::require_file(c.paths.holidays, "paths.holidays");
        need_corpus();
        need(artifact::daily, "series");
        need(artifact::scores, "score");
    } else if (step == "ccf") {
        detail::require_file(c.paths.survey, "paths.survey");
        need(artifact::daily, "series");
    } else if (step == "mapper") {
        need(artifact::normalized, "normalize");
        need(artifact::vocabulary, "normalize");
        need(artifact::tagger, "train-tags");
        need(artifact::scores, "score");
    } else if (step == "report") {
        need(artifact::daily, "series");
        need(artifact::scores, "score");
    } else {
        throw ConfigInvalid("unknown subcommand '" + step + "'");
    }
}

inline std::set<fs::path> products(const std::string& step) {
    if (step == "ingest") return {artifact::corpus};
    if (step == "normalize") return {artifact::normalized, artifact::vocabulary};
    if (step == "train-tags") return {artifact::tagger};
    if (step == "train-gbv") return {artifact::scorer};
    if (step == "score") return {artifact::scores};
    if (step == "series") return {artifact::daily};
    return {};
}

inline void run_step(const std::string& step, const RunConfig& c, Outputs& out,
                     const std::function<void(const std::string&)>& warn) {
    if (step == "ingest") ingest(c, out, warn);
    else if (step == "normalize") normalize(c, out);
    else if (step == "train-tags") train_tags(c, out);
    else if (step == "train-gbv") train_gbv(c, out);
    else if (step == "score") score(c, out);
    else if (step == "series") series(c, out);
    else if (step == "anomalies") anomalies(c, out);
    else if (step == "ccf") ccf(c, out);
    else if (step == "mapper") mapper(c, out);
    else if (step == "report") report(c, out);
    else throw ConfigInvalid("unknown subcommand '" + step + "'");
}

/// Runs a subcommand. All inputs are checked up front; `current_step`
/// names the step being executed so callers can report it on failure.
inline std::vector<fs::path> run(const std::string& subcommand, const RunConfig& c,
                                 const std::function<void(const std::string&)>& warn, std::string* current_step = nullptr) {
    Outputs out(c.paths.output);
    const auto steps = subcommand == "all" ? all_steps(c) : std::vector<std::string>{subcommand};
    std::set<fs::path> produced;
    for (const auto& s : steps) {
        if (current_step) *current_step = s;
        validate(s, c, out, produced);
        const auto p = products(s);
        produced.insert(p.begin(), p.end());
    }
    for (const auto& s : steps) {
        if (current_step) *current_step = s;
        run_step(s, c, out, warn);
    }
    return out.written();
}

/// Exit status for an error category.
inline int exit_code(ErrorCategory category) {
    switch (category) {
        case ErrorCategory::config: return 2;
        case ErrorCategory::data: return 3;
        case ErrorCategory::numeric: return 4;
    }
    return 1;
}

}  // namespace mediaseries::pipeline
