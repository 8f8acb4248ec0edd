#pragma once

#include <array>
#include <string>
#include <string_view>

#include "mediaseries/text.hpp"

namespace mediaseries::corpus {

/// One suffix-stripping rule: remove `suffix` when at least `min_stem`
/// characters remain.
struct SuffixRule {
    std::string_view suffix;
    std::size_t min_stem;
};

/// Spanish suffix table, longest suffixes first. Derivational and verbal
/// endings, then plurals, then the final gender/thematic vowel.
inline constexpr std::array<SuffixRule, 42> kSpanishSuffixRules{{
    {"amientos", 3}, {"imientos", 3}, {"amiento", 3}, {"imiento", 3},
    {"aciones", 3},  {"uciones", 3},  {"idades", 3},  {"ismos", 3},
    {"istas", 3},    {"ables", 3},    {"ibles", 3},   {"acion", 3},
    {"ucion", 3},    {"mente", 4},    {"iendo", 3},   {"ieron", 3},
    {"idad", 3},     {"ismo", 3},     {"ista", 3},    {"able", 3},
    {"ible", 3},     {"ando", 3},     {"aron", 3},    {"aban", 3},
    {"ados", 3},     {"idos", 3},     {"adas", 3},    {"idas", 3},
    {"ado", 3},      {"ido", 3},      {"ada", 3},     {"ida", 3},
    {"ar", 4},       {"er", 4},       {"ir", 4},      {"es", 3},
    {"os", 3},       {"as", 3},       {"s", 3},       {"a", 4},
    {"o", 4},        {"e", 4},
}};

namespace detail {
inline bool strip_once(std::string& word) {
    const std::size_t length = text::utf8_length(word);
    for (const auto& rule : kSpanishSuffixRules) {
        if (word.size() < rule.suffix.size()) continue;
        if (word.compare(word.size() - rule.suffix.size(), rule.suffix.size(), rule.suffix) != 0) continue;
        if (length - rule.suffix.size() < rule.min_stem) continue;
        word.erase(word.size() - rule.suffix.size());
        return true;
    }
    return false;
}
}  // namespace detail

/// Applies the rule table until no rule fires. Iterating to a fixed point
/// makes stem(stem(w)) == stem(w).
inline std::string stem(std::string word) {
    while (detail::strip_once(word)) {
    }
    return word;
}

}  // namespace mediaseries::corpus
