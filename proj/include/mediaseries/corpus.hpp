#pragma once

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mediaseries/date.hpp"
#include "mediaseries/error.hpp"
#include "mediaseries/html.hpp"
#include "mediaseries/io.hpp"
#include "mediaseries/stemmer.hpp"
#include "mediaseries/stopwords.hpp"
#include "mediaseries/text.hpp"

namespace mediaseries::corpus {

struct RawArticle {
    std::string url;
    std::chrono::sys_seconds fetched_at{};
    std::string markup;
    std::string source_id;
};

struct Document {
    std::string id;
    std::string source_id;
    Date published_at{};
    std::string title;
    std::string body;
    std::set<std::string> tags;

    bool operator==(const Document&) const = default;
};

struct NormalizedDoc {
    std::string doc_id;
    std::vector<std::string> tokens;

    bool operator==(const NormalizedDoc&) const = default;
};

struct Vocabulary {
    std::map<std::string, int> token_to_id;
    std::map<std::string, std::size_t> document_frequency;
    std::size_t max_sequence_length = 512;

    static constexpr int kPaddingId = 0;
    static constexpr int kUnknownId = 1;

    std::size_t size() const { return token_to_id.size(); }
    /// Embedding rows needed: padding + unknown + one per token.
    std::size_t rows() const { return token_to_id.size() + 2; }
};

// ---------------------------------------------------------------------------
// extraction

namespace detail {

inline bool is_excluded_container(const std::string& name) {
    static const std::set<std::string> names = {"script", "style", "nav",    "header", "footer", "aside",
                                                "noscript", "form", "template", "iframe", "svg"};
    return names.count(name) > 0;
}

inline bool closes_paragraph(const std::string& name) {
    static const std::set<std::string> names = {
        "p",  "div", "ul", "ol", "li", "table", "section", "article", "blockquote", "h1",
        "h2", "h3",  "h4", "h5", "h6", "pre",   "figure",  "main",    "hr"};
    return names.count(name) > 0;
}

inline std::string clean_text(std::string_view raw) {
    std::string decoded = text::decode_entities(raw);
    for (auto& c : decoded)
        if (c == '<' || c == '>') c = ' ';
    std::string out = text::collapse_whitespace(decoded);
    // collapse_whitespace leaves U+00A0 alone; treat it as a space too
    std::string result;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (static_cast<unsigned char>(out[i]) == 0xC2 && i + 1 < out.size() &&
            static_cast<unsigned char>(out[i + 1]) == 0xA0) {
            result += ' ';
            ++i;
        } else {
            result += out[i];
        }
    }
    return text::collapse_whitespace(result);
}

inline std::set<std::string> split_keywords(std::string_view content) {
    std::set<std::string> tags;
    std::string decoded = clean_text(content);
    std::size_t start = 0;
    while (start <= decoded.size()) {
        auto comma = decoded.find(',', start);
        if (comma == std::string::npos) comma = decoded.size();
        std::string tag = text::trim(text::to_lower(decoded.substr(start, comma - start)));
        if (!tag.empty()) tags.insert(std::move(tag));
        start = comma + 1;
    }
    return tags;
}

}  // namespace detail

/// Stable document id derived from the article URL.
inline std::string document_id(std::string_view url) { return "doc-" + io::fnv1a_hex(url); }

/// Pulls title, paragraph body, keyword tags and publication date out of a
/// page. Navigation, header/footer, asides, scripts and styles never reach
/// the body.
inline Document extract_article(const RawArticle& raw, std::optional<Date> fallback_date = std::nullopt) {
    if (raw.url.empty()) throw ExtractionFailed("article url is empty");
    if (raw.markup.empty()) throw ExtractionFailed("article markup is empty: " + raw.url);

    int excluded = 0;
    bool in_title = false, in_h1 = false, in_paragraph = false;
    std::string title_raw, og_title, h1_raw, paragraph_raw;
    bool title_done = false, h1_done = false;
    std::vector<std::string> paragraphs;
    std::set<std::string> tags;
    std::vector<std::pair<int, std::string>> date_candidates;  // (priority, value)

    auto flush_paragraph = [&] {
        if (in_paragraph) {
            auto cleaned = detail::clean_text(paragraph_raw);
            if (!cleaned.empty()) paragraphs.push_back(std::move(cleaned));
        }
        paragraph_raw.clear();
        in_paragraph = false;
    };

    html::Visitor visitor;
    visitor.on_tag = [&](const html::Tag& tag) {
        const auto& name = tag.name;
        if (detail::is_excluded_container(name)) {
            if (!tag.self_closing) excluded += tag.closing ? (excluded > 0 ? -1 : 0) : 1;
            return;
        }
        if (name == "title") {
            in_title = !tag.closing && !title_done;
            if (tag.closing && !title_raw.empty()) title_done = true;
            return;
        }
        if (name == "meta") {
            auto key = html::detail::lower_ascii(
                !tag.attr("name").empty() ? tag.attr("name")
                                          : (!tag.attr("property").empty() ? tag.attr("property")
                                                                           : tag.attr("itemprop")));
            auto content = tag.attr("content");
            if (key == "keywords" || key == "news_keywords" || key == "article:tag") {
                auto found = detail::split_keywords(content);
                tags.insert(found.begin(), found.end());
            } else if (key == "og:title") {
                if (og_title.empty()) og_title = content;
            } else if (key == "article:published_time") {
                date_candidates.emplace_back(0, content);
            } else if (key == "datepublished") {
                date_candidates.emplace_back(1, content);
            } else if (key == "date" || key == "pubdate" || key == "publishdate" || key == "dc.date" ||
                       key == "dc.date.issued" || key == "article.published") {
                date_candidates.emplace_back(2, content);
            }
            return;
        }
        if (name == "time" && !tag.closing && !tag.attr("datetime").empty()) {
            date_candidates.emplace_back(3, tag.attr("datetime"));
        }
        if (excluded > 0) return;
        if (name == "h1") {
            in_h1 = !tag.closing && !h1_done;
            if (tag.closing && !h1_raw.empty()) h1_done = true;
        }
        if (name == "br" && in_paragraph) {
            paragraph_raw += ' ';
            return;
        }
        if (detail::closes_paragraph(name)) {
            flush_paragraph();
            if (name == "p" && !tag.closing && !tag.self_closing) in_paragraph = true;
        }
    };
    visitor.on_text = [&](std::string_view run) {
        if (in_title) title_raw += run;
        if (excluded > 0) return;
        if (in_h1) h1_raw += run;
        if (in_paragraph) paragraph_raw += run;
    };
    html::scan(raw.markup, visitor);
    flush_paragraph();

    if (paragraphs.empty()) throw ExtractionFailed("no paragraph text found in " + raw.url);

    Document doc;
    doc.id = document_id(raw.url);
    doc.source_id = raw.source_id;
    doc.title = detail::clean_text(title_raw);
    if (doc.title.empty()) doc.title = detail::clean_text(og_title);
    if (doc.title.empty()) doc.title = detail::clean_text(h1_raw);
    for (std::size_t i = 0; i < paragraphs.size(); ++i) {
        if (i) doc.body += '\n';
        doc.body += paragraphs[i];
    }
    doc.tags = std::move(tags);

    std::stable_sort(date_candidates.begin(), date_candidates.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    std::optional<Date> published;
    for (const auto& [priority, value] : date_candidates) {
        if ((published = try_parse_date(text::trim(value)))) break;
    }
    if (!published) published = fallback_date;
    if (!published) throw DateUnparseable("no publication date in " + raw.url + " and no fallback given");
    doc.published_at = *published;
    return doc;
}

// ---------------------------------------------------------------------------
// normalization

/// Fixed contraction table: Spanish has no apostrophe contractions, only
/// preposition + article fusions.
inline const std::map<std::string, std::string>& contraction_table() {
    static const std::map<std::string, std::string> table = {{"del", "de el"}, {"al", "a el"}};
    return table;
}

/// Cleaning pipeline, in order: strip markup, lowercase, fold accents,
/// expand contractions, keep only [a-z ñ], split, drop stopwords and
/// one-letter tokens, stem. Stems that land on a stopword, a contraction or
/// a single letter are dropped too so the output is a fixed point.
inline std::vector<std::string> normalize(std::string_view input, const std::set<std::string>& stopwords) {
    std::u32string cps = text::decode_utf8(text::strip_markup(input));
    for (auto& cp : cps) cp = text::to_lower(cp);
    cps = text::fold_accents(cps);

    auto is_letter = [](char32_t cp) { return (cp >= U'a' && cp <= U'z') || cp == U'ñ'; };

    // contractions, on maximal letter runs
    std::u32string expanded;
    expanded.reserve(cps.size());
    std::size_t i = 0;
    while (i < cps.size()) {
        if (!is_letter(cps[i])) {
            expanded += cps[i++];
            continue;
        }
        std::size_t j = i;
        while (j < cps.size() && is_letter(cps[j])) ++j;
        std::string word = text::encode_utf8(std::u32string_view(cps).substr(i, j - i));
        auto it = contraction_table().find(word);
        expanded += it == contraction_table().end() ? cps.substr(i, j - i) : text::decode_utf8(it->second);
        i = j;
    }

    for (auto& cp : expanded)
        if (!is_letter(cp)) cp = U' ';

    std::vector<std::string> tokens;
    std::size_t pos = 0;
    while (pos < expanded.size()) {
        while (pos < expanded.size() && expanded[pos] == U' ') ++pos;
        std::size_t end = pos;
        while (end < expanded.size() && expanded[end] != U' ') ++end;
        if (end > pos) {
            std::string token = text::encode_utf8(std::u32string_view(expanded).substr(pos, end - pos));
            if (end - pos >= 2 && !stopwords.count(token)) {
                std::string stemmed = stem(std::move(token));
                if (text::utf8_length(stemmed) >= 2 && !stopwords.count(stemmed) &&
                    !contraction_table().count(stemmed))
                    tokens.push_back(std::move(stemmed));
            }
        }
        pos = end;
    }
    return tokens;
}

inline std::string join_tokens(const std::vector<std::string>& tokens) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) out += ' ';
        out += tokens[i];
    }
    return out;
}

/// Title and body are classified together.
inline NormalizedDoc normalize_document(const Document& doc, const std::set<std::string>& stopwords) {
    return NormalizedDoc{doc.id, normalize(doc.title + "\n" + doc.body, stopwords)};
}

// ---------------------------------------------------------------------------
// vocabulary

inline Vocabulary build_vocabulary(const std::vector<NormalizedDoc>& docs, std::size_t min_df,
                                   std::size_t max_size, std::size_t max_sequence_length = 512) {
    if (min_df < 1) throw EmptyVocabulary("min_df must be at least 1");
    if (max_size < 1) throw EmptyVocabulary("max_size must be at least 1");
    if (max_sequence_length < 1) throw EmptyVocabulary("max_sequence_length must be at least 1");

    std::map<std::string, std::size_t> df;
    for (const auto& doc : docs) {
        std::set<std::string> seen(doc.tokens.begin(), doc.tokens.end());
        for (const auto& token : seen) ++df[token];
    }
    std::vector<std::pair<std::string, std::size_t>> kept;
    for (const auto& [token, count] : df)
        if (count >= min_df) kept.emplace_back(token, count);
    if (kept.empty()) throw EmptyVocabulary("no token reaches document frequency " + std::to_string(min_df));

    std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (kept.size() > max_size) kept.resize(max_size);

    Vocabulary vocab;
    vocab.max_sequence_length = max_sequence_length;
    int next_id = 2;
    for (const auto& [token, count] : kept) {
        vocab.token_to_id.emplace(token, next_id++);
        vocab.document_frequency.emplace(token, count);
    }
    return vocab;
}

/// Token ids, unknown -> 1, truncated or right-padded with 0.
inline std::vector<int> vectorize(const NormalizedDoc& doc, const Vocabulary& vocab) {
    std::vector<int> ids(vocab.max_sequence_length, Vocabulary::kPaddingId);
    const std::size_t n = std::min(doc.tokens.size(), vocab.max_sequence_length);
    for (std::size_t i = 0; i < n; ++i) {
        auto it = vocab.token_to_id.find(doc.tokens[i]);
        ids[i] = it == vocab.token_to_id.end() ? Vocabulary::kUnknownId : it->second;
    }
    return ids;
}

// ---------------------------------------------------------------------------
// serialization

inline void to_json(nlohmann::json& j, const Document& d) {
    j = nlohmann::json{{"id", d.id},
                       {"source_id", d.source_id},
                       {"published_at", format_date(d.published_at)},
                       {"title", d.title},
                       {"body", d.body},
                       {"tags", d.tags}};
}

inline void from_json(const nlohmann::json& j, Document& d) {
    d.id = j.at("id").get<std::string>();
    d.source_id = j.value("source_id", std::string{});
    d.published_at = parse_date(j.at("published_at").get<std::string>());
    d.title = j.value("title", std::string{});
    d.body = j.value("body", std::string{});
    d.tags.clear();
    if (j.contains("tags"))
        for (const auto& t : j.at("tags")) {
            auto tag = text::trim(text::to_lower(t.get<std::string>()));
            if (!tag.empty()) d.tags.insert(std::move(tag));
        }
}

inline void to_json(nlohmann::json& j, const NormalizedDoc& d) {
    j = nlohmann::json{{"doc_id", d.doc_id}, {"tokens", d.tokens}};
}

inline void from_json(const nlohmann::json& j, NormalizedDoc& d) {
    d.doc_id = j.at("doc_id").get<std::string>();
    d.tokens = j.at("tokens").get<std::vector<std::string>>();
}

template <typename T>
std::vector<T> read_jsonl(const std::filesystem::path& path) {
    std::vector<T> out;
    std::size_t line_no = 0;
    for (const auto& line : io::split_lines(io::read_file(path))) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        try {
            out.push_back(nlohmann::json::parse(line).get<T>());
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

template <typename T>
std::string to_jsonl(const std::vector<T>& items) {
    std::string out;
    for (const auto& item : items) {
        out += nlohmann::json(item).dump();
        out += '\n';
    }
    return out;
}

/// Rejects duplicate ids; the corpus is keyed by id everywhere downstream.
inline std::vector<Document> read_corpus(const std::filesystem::path& path) {
    auto docs = read_jsonl<Document>(path);
    std::set<std::string> ids;
    for (const auto& d : docs)
        if (!ids.insert(d.id).second) throw ParseError("duplicate document id '" + d.id + "' in " + path.string());
    return docs;
}

inline nlohmann::json vocabulary_to_json(const Vocabulary& vocab) {
    nlohmann::json tokens = nlohmann::json::object();
    for (const auto& [token, id] : vocab.token_to_id) tokens[token] = id;
    nlohmann::json df = nlohmann::json::object();
    for (const auto& [token, count] : vocab.document_frequency) df[token] = count;
    return {{"meta",
             {{"format", "mediaseries-vocab/1"},
              {"size", vocab.size()},
              {"max_sequence_length", vocab.max_sequence_length},
              {"padding_id", Vocabulary::kPaddingId},
              {"unknown_id", Vocabulary::kUnknownId}}},
            {"tokens", tokens},
            {"document_frequency", df}};
}

inline Vocabulary vocabulary_from_json(const nlohmann::json& j) {
    Vocabulary vocab;
    const auto& meta = j.at("meta");
    if (meta.value("format", std::string{}) != "mediaseries-vocab/1")
        throw ParseError("unsupported vocabulary format");
    vocab.max_sequence_length = meta.at("max_sequence_length").get<std::size_t>();
    for (const auto& [token, id] : j.at("tokens").items()) vocab.token_to_id.emplace(token, id.get<int>());
    if (j.contains("document_frequency"))
        for (const auto& [token, count] : j.at("document_frequency").items())
            vocab.document_frequency.emplace(token, count.get<std::size_t>());
    std::vector<int> ids;
    for (const auto& [token, id] : vocab.token_to_id) ids.push_back(id);
    std::sort(ids.begin(), ids.end());
    for (std::size_t i = 0; i < ids.size(); ++i)
        if (ids[i] != static_cast<int>(i) + 2) throw ParseError("vocabulary ids are not contiguous from 2");
    return vocab;
}

}  // namespace mediaseries::corpus
