#pragma once

#include <algorithm>
#include <cctype>
#include <functional>
#include <map>
#include <string>
#include <string_view>

namespace mediaseries::html {

/// A start or end tag as seen by the tolerant scanner.
struct Tag {
    std::string name;  // lowercase
    bool closing = false;
    bool self_closing = false;
    std::map<std::string, std::string> attributes;  // lowercase names, raw values

    std::string attr(const std::string& key) const {
        auto it = attributes.find(key);
        return it == attributes.end() ? std::string{} : it->second;
    }
};

/// Receives tags and raw (undecoded) text runs in document order.
struct Visitor {
    std::function<void(const Tag&)> on_tag;
    std::function<void(std::string_view)> on_text;
};

namespace detail {
inline std::string lower_ascii(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

inline bool is_name_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == ':' || c == '.';
}

/// Parses a tag starting after '<'. Returns the position after '>'.
inline std::size_t parse_tag(std::string_view doc, std::size_t pos, Tag& tag) {
    std::size_t i = pos;
    if (i < doc.size() && doc[i] == '/') {
        tag.closing = true;
        ++i;
    }
    std::size_t name_start = i;
    while (i < doc.size() && is_name_char(doc[i])) ++i;
    tag.name = lower_ascii(doc.substr(name_start, i - name_start));
    while (i < doc.size()) {
        while (i < doc.size() && std::isspace(static_cast<unsigned char>(doc[i]))) ++i;
        if (i >= doc.size()) break;
        if (doc[i] == '>') return i + 1;
        if (doc[i] == '/') {
            tag.self_closing = true;
            ++i;
            continue;
        }
        std::size_t key_start = i;
        while (i < doc.size() && doc[i] != '=' && doc[i] != '>' && doc[i] != '/' &&
               !std::isspace(static_cast<unsigned char>(doc[i])))
            ++i;
        std::string key = lower_ascii(doc.substr(key_start, i - key_start));
        while (i < doc.size() && std::isspace(static_cast<unsigned char>(doc[i]))) ++i;
        std::string value;
        if (i < doc.size() && doc[i] == '=') {
            ++i;
            while (i < doc.size() && std::isspace(static_cast<unsigned char>(doc[i]))) ++i;
            if (i < doc.size() && (doc[i] == '"' || doc[i] == '\'')) {
                char quote = doc[i++];
                auto end = doc.find(quote, i);
                if (end == std::string_view::npos) end = doc.size();
                value = std::string(doc.substr(i, end - i));
                i = std::min(end + 1, doc.size());
            } else {
                std::size_t v_start = i;
                while (i < doc.size() && doc[i] != '>' && !std::isspace(static_cast<unsigned char>(doc[i]))) ++i;
                value = std::string(doc.substr(v_start, i - v_start));
            }
        }
        if (!key.empty()) tag.attributes.emplace(std::move(key), std::move(value));
        if (key_start == i) ++i;  // stray character
    }
    return doc.size();
}

inline std::size_t find_ci(std::string_view haystack, std::string_view needle, std::size_t from) {
    auto it = std::search(haystack.begin() + static_cast<std::ptrdiff_t>(std::min(from, haystack.size())),
                          haystack.end(), needle.begin(), needle.end(), [](char a, char b) {
                              return std::tolower(static_cast<unsigned char>(a)) ==
                                     std::tolower(static_cast<unsigned char>(b));
                          });
    return it == haystack.end() ? std::string_view::npos
                                : static_cast<std::size_t>(it - haystack.begin());
}
}  // namespace detail

/// Walks markup without building a tree. Comments, doctypes and processing
/// instructions are skipped; script/style bodies are reported as a single
/// text run between their tags so callers can drop them. Unclosed constructs
/// run to end of input.
inline void scan(std::string_view doc, const Visitor& visitor) {
    std::size_t i = 0;
    std::size_t text_start = 0;
    auto flush_text = [&](std::size_t end) {
        if (end > text_start && visitor.on_text) visitor.on_text(doc.substr(text_start, end - text_start));
    };
    while (i < doc.size()) {
        if (doc[i] != '<' || i + 1 >= doc.size()) {
            ++i;
            continue;
        }
        char next = doc[i + 1];
        if (doc.compare(i, 4, "<!--") == 0) {
            flush_text(i);
            auto end = doc.find("-->", i + 4);
            i = end == std::string_view::npos ? doc.size() : end + 3;
            text_start = i;
            continue;
        }
        if (next == '!' || next == '?') {
            flush_text(i);
            auto end = doc.find('>', i);
            i = end == std::string_view::npos ? doc.size() : end + 1;
            text_start = i;
            continue;
        }
        if (!std::isalpha(static_cast<unsigned char>(next)) && next != '/') {
            ++i;  // a literal '<' in text
            continue;
        }
        flush_text(i);
        Tag tag;
        i = detail::parse_tag(doc, i + 1, tag);
        text_start = i;
        if (tag.name.empty()) continue;
        if (visitor.on_tag) visitor.on_tag(tag);
        if (!tag.closing && !tag.self_closing && (tag.name == "script" || tag.name == "style")) {
            auto end = detail::find_ci(doc, "</" + tag.name, i);
            if (end == std::string_view::npos) end = doc.size();
            if (visitor.on_text) visitor.on_text(doc.substr(i, end - i));
            if (end == doc.size()) {
                i = text_start = doc.size();
                break;
            }
            Tag close;
            i = detail::parse_tag(doc, end + 1, close);
            if (visitor.on_tag) visitor.on_tag(close);
            text_start = i;
        }
    }
    flush_text(doc.size());
}

}  // namespace mediaseries::html
