#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "mediaseries/classify.hpp"
#include "mediaseries/color.hpp"
#include "mediaseries/error.hpp"
#include "mediaseries/io.hpp"

namespace mediaseries::tda {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// One row per document; `extra` holds each document's GBV probability.
struct PointCloud {
    std::vector<std::string> ids;
    Matrix coords;
    std::map<std::string, double> extra;

    std::size_t size() const { return ids.size(); }

    void validate() const {
        if (static_cast<std::size_t>(coords.rows()) != ids.size())
            throw ShapeMismatch("point cloud has " + std::to_string(coords.rows()) + " rows for " +
                                std::to_string(ids.size()) + " ids");
        if (!coords.allFinite()) throw ShapeMismatch("point cloud has non-finite coordinates");
        std::set<std::string> seen;
        for (const auto& id : ids)
            if (!seen.insert(id).second) throw ShapeMismatch("duplicate point id '" + id + "'");
    }

    /// Same points, rows ordered by id.
    PointCloud sorted() const {
        std::vector<std::size_t> order(ids.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ids[a] < ids[b]; });
        PointCloud out;
        out.extra = extra;
        out.coords.resize(coords.rows(), coords.cols());
        for (std::size_t i = 0; i < order.size(); ++i) {
            out.ids.push_back(ids[order[i]]);
            out.coords.row(static_cast<Index>(i)) = coords.row(static_cast<Index>(order[i]));
        }
        return out;
    }
};

struct VectorizedDoc {
    std::string id;
    std::vector<int> ids;
};

/// Rows are the tagger's full probability vectors.
inline PointCloud tag_probability_cloud(const classify::ConvTextModel& tagger, const std::vector<VectorizedDoc>& docs,
                                        const std::map<std::string, double>& gbv, std::size_t threads = 1) {
    if (docs.empty()) throw EmptyInput("no documents for the point cloud");
    std::vector<std::vector<int>> inputs;
    for (const auto& d : docs) inputs.push_back(d.ids);
    const auto probs = classify::predict_all(tagger, inputs, threads);
    PointCloud cloud;
    cloud.coords.resize(static_cast<Index>(docs.size()), static_cast<Index>(tagger.label_count()));
    for (std::size_t i = 0; i < docs.size(); ++i) {
        cloud.ids.push_back(docs[i].id);
        for (std::size_t j = 0; j < probs[i].size(); ++j) cloud.coords(static_cast<Index>(i), static_cast<Index>(j)) = probs[i][j];
        auto it = gbv.find(docs[i].id);
        if (it == gbv.end()) throw LengthMismatch("no GBV probability for document '" + docs[i].id + "'");
        cloud.extra[docs[i].id] = it->second;
    }
    cloud.validate();
    return cloud;
}

/// Ids whose probability is strictly above the threshold, sorted.
inline std::vector<std::string> select_above(const std::map<std::string, double>& probabilities, double threshold = 0.9999) {
    std::vector<std::string> out;
    for (const auto& [id, p] : probabilities)
        if (p > threshold) out.push_back(id);
    return out;
}

// ---------------------------------------------------------------------------
// PCA

struct PcaModel {
    Vector mean;
    Matrix components;  // k x d, orthonormal rows
    Vector explained_variance;
};

/// Thin SVD of the centred data. Each component is signed so that its
/// largest-magnitude entry (first on ties) is positive.
inline PcaModel pca_fit(const Matrix& coords, std::size_t k) {
    const Index n = coords.rows(), d = coords.cols();
    if (n < 2) throw ShapeMismatch("PCA needs at least two points");
    if (k < 1 || static_cast<Index>(k) > std::min(n - 1, d))
        throw ShapeMismatch("PCA dimension " + std::to_string(k) + " outside [1, " + std::to_string(std::min(n - 1, d)) + "]");
    if (!coords.allFinite()) throw ShapeMismatch("non-finite coordinates");
    PcaModel m;
    m.mean = coords.colwise().mean().transpose();
    const Matrix centred = coords.rowwise() - m.mean.transpose();
    if (centred.cwiseAbs().maxCoeff() == 0.0) throw DegenerateInput("all points are identical");
    Eigen::JacobiSVD<Matrix> svd(centred, Eigen::ComputeThinV);
    const auto kk = static_cast<Index>(k);
    m.components = svd.matrixV().leftCols(kk).transpose();
    for (Index i = 0; i < kk; ++i) {
        Index best = 0;
        for (Index j = 1; j < d; ++j)
            if (std::abs(m.components(i, j)) > std::abs(m.components(i, best))) best = j;
        if (m.components(i, best) < 0) m.components.row(i) *= -1.0;
    }
    m.explained_variance = svd.singularValues().head(kk).array().square() / static_cast<double>(n - 1);
    return m;
}

inline Matrix pca_transform(const PcaModel& m, const Matrix& coords) {
    if (coords.cols() != m.mean.size())
        throw ShapeMismatch("expected " + std::to_string(m.mean.size()) + " columns, got " + std::to_string(coords.cols()));
    return (coords.rowwise() - m.mean.transpose()) * m.components.transpose();
}

inline Matrix pca_inverse(const PcaModel& m, const Matrix& reduced) {
    if (reduced.cols() != m.components.rows()) throw ShapeMismatch("reduced width differs from component count");
    return (reduced * m.components).rowwise() + m.mean.transpose();
}

/// The cloud in k principal coordinates (k capped by what the data allows).
inline PointCloud reduce(const PointCloud& cloud, std::size_t k = 3) {
    cloud.validate();
    const auto limit = static_cast<std::size_t>(std::min<Index>(cloud.coords.rows() - 1, cloud.coords.cols()));
    auto m = pca_fit(cloud.coords, std::min(k, limit));
    PointCloud out = cloud;
    out.coords = pca_transform(m, cloud.coords);
    return out;
}

// ---------------------------------------------------------------------------
// Mapper

struct Cover {
    std::size_t n_intervals = 10;
    double overlap = 0.35;
};

/// Filter function: a coordinate of the (reduced) cloud, or its first
/// principal component.
struct Lens {
    enum class Kind { coordinate, first_component } kind = Kind::first_component;
    std::size_t index = 0;

    static Lens coordinate(std::size_t i) { return {Kind::coordinate, i}; }
    static Lens first_component() { return {}; }

    std::string name() const { return kind == Kind::coordinate ? "x" + std::to_string(index) : "pc1"; }
};

inline Lens lens_from_string(const std::string& s) {
    if (s == "pc1") return Lens::first_component();
    if (s.size() > 1 && s[0] == 'x') {
        const auto i = io::parse_int(std::string_view(s).substr(1));
        if (i >= 0) return Lens::coordinate(static_cast<std::size_t>(i));
    }
    throw ParseError("unknown lens '" + s + "' (use pc1 or x<index>)");
}

struct MapperNode {
    std::size_t id = 0;
    std::size_t interval = 0;
    std::vector<std::string> members;  // sorted
    double mean_gbv = 0.0;
    double color = 0.0;
    double radius = 0.0;
    std::size_t size() const { return members.size(); }
};

struct MapperEdge {
    std::size_t source = 0, target = 0;
    std::size_t shared = 0;
    bool operator==(const MapperEdge&) const = default;
};

struct MapperGraph {
    std::vector<MapperNode> nodes;
    std::vector<MapperEdge> edges;
};

struct MapperConfig {
    Lens lens;
    Cover cover;
    std::optional<double> cluster_eps;  // default: half the median pairwise distance, per bin
};

namespace detail {

struct DisjointSets {
    std::vector<std::size_t> parent;
    explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    std::size_t find(std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

inline double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline std::vector<double> lens_values(const PointCloud& cloud, const Lens& lens) {
    const Index n = cloud.coords.rows();
    std::vector<double> out(static_cast<std::size_t>(n), 0.0);
    if (lens.kind == Lens::Kind::coordinate) {
        if (static_cast<Index>(lens.index) >= cloud.coords.cols())
            throw ShapeMismatch("lens coordinate " + std::to_string(lens.index) + " out of range");
        for (Index i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = cloud.coords(i, static_cast<Index>(lens.index));
        return out;
    }
    if (n < 2 || cloud.coords.cols() < 1) return out;
    const Matrix centred = cloud.coords.rowwise() - cloud.coords.colwise().mean();
    if (centred.cwiseAbs().maxCoeff() == 0.0) return out;
    const Matrix projected = pca_transform(pca_fit(cloud.coords, 1), cloud.coords);
    for (Index i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = projected(i, 0);
    return out;
}

}  // namespace detail

/// Interval bounds of the cover over [lo, hi]: equal base intervals, each
/// widened symmetrically so neighbours share `overlap` of their length.
inline std::vector<std::pair<double, double>> cover_intervals(double lo, double hi, const Cover& cover) {
    if (cover.n_intervals < 1) throw BadCover("cover needs at least one interval");
    if (!(cover.overlap > 0.0 && cover.overlap < 1.0)) throw BadCover("overlap must lie strictly inside (0,1)");
    if (!(hi > lo)) return {{lo, hi}};
    const double base = (hi - lo) / static_cast<double>(cover.n_intervals);
    const double width = base / (1.0 - cover.overlap);
    const double pad = 0.5 * (width - base);
    std::vector<std::pair<double, double>> out;
    for (std::size_t i = 0; i < cover.n_intervals; ++i) {
        const double a = lo + base * static_cast<double>(i);
        const double b = i + 1 == cover.n_intervals ? hi : lo + base * static_cast<double>(i + 1);
        out.emplace_back(a - pad, b + pad);
    }
    return out;
}

/// Nerve graph of single-linkage clusters inside each cover bin. Points on
/// an interval boundary belong to every interval that contains it; node ids
/// follow (interval, smallest member id).
inline MapperGraph mapper(const PointCloud& input, const MapperConfig& cfg) {
    if (input.size() == 0) throw EmptyInput("no points for Mapper");
    if (cfg.cover.n_intervals < 1) throw BadCover("cover needs at least one interval");
    if (cfg.cluster_eps && !(*cfg.cluster_eps > 0.0)) throw BadCover("cluster_eps must be positive");
    input.validate();
    const PointCloud cloud = input.sorted();
    for (const auto& id : cloud.ids)
        if (!cloud.extra.count(id)) throw LengthMismatch("no GBV value for point '" + id + "'");

    const auto lens = detail::lens_values(cloud, cfg.lens);
    for (double v : lens)
        if (!std::isfinite(v)) throw ShapeMismatch("non-finite lens value");
    const auto [lo_it, hi_it] = std::minmax_element(lens.begin(), lens.end());
    const auto intervals = cover_intervals(*lo_it, *hi_it, cfg.cover);

    struct Cluster {
        std::size_t interval;
        std::vector<std::size_t> rows;  // ascending, so rows[0] has the smallest id
    };
    std::vector<Cluster> clusters;
    for (std::size_t k = 0; k < intervals.size(); ++k) {
        std::vector<std::size_t> bin;
        for (std::size_t i = 0; i < lens.size(); ++i)
            if (lens[i] >= intervals[k].first && lens[i] <= intervals[k].second) bin.push_back(i);
        if (bin.empty()) continue;
        const std::size_t m = bin.size();
        std::vector<double> dist;
        dist.reserve(m * (m - 1) / 2);
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t b = a + 1; b < m; ++b)
                dist.push_back((cloud.coords.row(static_cast<Index>(bin[a])) - cloud.coords.row(static_cast<Index>(bin[b]))).norm());
        const double eps = cfg.cluster_eps ? *cfg.cluster_eps : (dist.empty() ? 0.0 : 0.5 * detail::median(dist));
        detail::DisjointSets sets(m);
        std::size_t p = 0;
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t b = a + 1; b < m; ++b)
                if (dist[p++] <= eps) sets.unite(a, b);
        std::map<std::size_t, std::vector<std::size_t>> groups;  // keyed by smallest local index
        for (std::size_t a = 0; a < m; ++a) groups[sets.find(a)].push_back(bin[a]);
        for (auto& [root, rows] : groups) clusters.push_back({k, std::move(rows)});
    }

    MapperGraph g;
    for (const auto& c : clusters) {
        MapperNode node;
        node.id = g.nodes.size();
        node.interval = c.interval;
        double sum = 0.0;
        for (auto r : c.rows) {
            node.members.push_back(cloud.ids[r]);
            sum += cloud.extra.at(cloud.ids[r]);
        }
        node.mean_gbv = sum / static_cast<double>(c.rows.size());
        g.nodes.push_back(std::move(node));
    }
    for (std::size_t a = 0; a < g.nodes.size(); ++a)
        for (std::size_t b = a + 1; b < g.nodes.size(); ++b) {
            if (g.nodes[a].interval == g.nodes[b].interval) continue;
            std::vector<std::string> shared;
            std::set_intersection(g.nodes[a].members.begin(), g.nodes[a].members.end(), g.nodes[b].members.begin(),
                                  g.nodes[b].members.end(), std::back_inserter(shared));
            if (!shared.empty()) g.edges.push_back({a, b, shared.size()});
        }
    return g;
}

/// Render hints only: color is mean_gbv min-max scaled over the graph (0
/// when all nodes agree), radius is sqrt(size).
inline MapperGraph decorate(MapperGraph g) {
    if (g.nodes.empty()) return g;
    double lo = g.nodes[0].mean_gbv, hi = lo;
    for (const auto& n : g.nodes) {
        lo = std::min(lo, n.mean_gbv);
        hi = std::max(hi, n.mean_gbv);
    }
    for (auto& n : g.nodes) {
        n.color = hi > lo ? (n.mean_gbv - lo) / (hi - lo) : 0.0;
        n.radius = std::sqrt(static_cast<double>(n.size()));
    }
    return g;
}

/// Number of connected components.
inline std::size_t component_count(const MapperGraph& g) {
    detail::DisjointSets sets(g.nodes.size());
    for (const auto& e : g.edges) sets.unite(e.source, e.target);
    std::set<std::size_t> roots;
    for (std::size_t i = 0; i < g.nodes.size(); ++i) roots.insert(sets.find(i));
    return roots.size();
}

/// Independent cycles: edges - nodes + components.
inline long first_betti_number(const MapperGraph& g) {
    return static_cast<long>(g.edges.size()) - static_cast<long>(g.nodes.size()) + static_cast<long>(component_count(g));
}

inline nlohmann::json graph_to_json(const MapperGraph& g) {
    nlohmann::json nodes = nlohmann::json::array(), edges = nlohmann::json::array();
    for (const auto& n : g.nodes)
        nodes.push_back({{"id", n.id},
                         {"interval", n.interval},
                         {"size", n.size()},
                         {"mean_gbv", n.mean_gbv},
                         {"color", n.color},
                         {"radius", n.radius},
                         {"members", n.members}});
    for (const auto& e : g.edges) edges.push_back({{"source", e.source}, {"target", e.target}, {"shared", e.shared}});
    return {{"nodes", nodes}, {"edges", edges}};
}

inline MapperGraph graph_from_json(const nlohmann::json& j) {
    try {
        MapperGraph g;
        for (const auto& n : j.at("nodes")) {
            MapperNode node;
            node.id = n.at("id").get<std::size_t>();
            node.interval = n.at("interval").get<std::size_t>();
            node.mean_gbv = n.at("mean_gbv").get<double>();
            node.color = n.at("color").get<double>();
            node.radius = n.at("radius").get<double>();
            node.members = n.at("members").get<std::vector<std::string>>();
            g.nodes.push_back(std::move(node));
        }
        for (const auto& e : j.at("edges"))
            g.edges.push_back({e.at("source").get<std::size_t>(), e.at("target").get<std::size_t>(), e.at("shared").get<std::size_t>()});
        return g;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed graph: ") + e.what());
    }
}

/// Undirected DOT, one statement per node and per edge.
inline std::string graph_to_dot(const MapperGraph& g) {
    std::string out = "graph mapper {\n  node [shape=circle, style=filled, fontsize=8];\n";
    for (const auto& n : g.nodes)
        out += "  n" + std::to_string(n.id) + " [label=\"" + std::to_string(n.size()) + "\", width=" +
               io::format_fixed(0.2 * n.radius) + ", fillcolor=\"" + color::ramp_hex(n.color) +
               "\", mean_gbv=" + io::format_fixed(n.mean_gbv) + "];\n";
    for (const auto& e : g.edges)
        out += "  n" + std::to_string(e.source) + " -- n" + std::to_string(e.target) + " [weight=" +
               std::to_string(e.shared) + "];\n";
    out += "}\n";
    return out;
}

}  // namespace mediaseries::tda
