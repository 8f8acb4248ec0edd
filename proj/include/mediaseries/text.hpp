#pragma once

#include <cctype>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace mediaseries::text {

/// Decodes UTF-8; malformed bytes become U+FFFD.
inline std::u32string decode_utf8(std::string_view in) {
    std::u32string out;
    out.reserve(in.size());
    std::size_t i = 0;
    while (i < in.size()) {
        auto c = static_cast<unsigned char>(in[i]);
        char32_t cp = 0xFFFD;
        std::size_t len = 1;
        if (c < 0x80) {
            cp = c;
        } else if ((c >> 5) == 0x6) {
            len = 2;
            cp = c & 0x1F;
        } else if ((c >> 4) == 0xE) {
            len = 3;
            cp = c & 0x0F;
        } else if ((c >> 3) == 0x1E) {
            len = 4;
            cp = c & 0x07;
        } else {
            out += char32_t{0xFFFD};
            ++i;
            continue;
        }
        if (i + len > in.size()) {
            out += char32_t{0xFFFD};
            break;
        }
        bool ok = true;
        for (std::size_t j = 1; j < len; ++j) {
            auto cc = static_cast<unsigned char>(in[i + j]);
            if ((cc >> 6) != 0x2) {
                ok = false;
                break;
            }
            cp = (cp << 6) | (cc & 0x3F);
        }
        if (!ok) {
            out += char32_t{0xFFFD};
            ++i;
            continue;
        }
        out += cp;
        i += len;
    }
    return out;
}

inline void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out += static_cast<char>(cp);
    } else if (cp < 0x800) {
        out += static_cast<char>(0xC0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
        out += static_cast<char>(0xE0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
        out += static_cast<char>(0xF0 | (cp >> 18));
        out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    }
}

inline std::string encode_utf8(std::u32string_view in) {
    std::string out;
    out.reserve(in.size());
    for (char32_t cp : in) append_utf8(out, cp);
    return out;
}

inline std::size_t utf8_length(std::string_view in) {
    std::size_t n = 0;
    for (char c : in)
        if ((static_cast<unsigned char>(c) & 0xC0) != 0x80) ++n;
    return n;
}

/// Lowercase for ASCII, Latin-1 and Latin Extended-A.
inline char32_t to_lower(char32_t cp) {
    if (cp >= U'A' && cp <= U'Z') return cp + 32;
    if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 32;
    if (cp >= 0x100 && cp <= 0x17F) {
        // Ext-A pairs are (upper even, lower odd) except the 0x139..0x148 and 0x179..0x17E runs.
        bool odd_upper = (cp >= 0x139 && cp <= 0x148) || (cp >= 0x179 && cp <= 0x17E);
        if (cp == 0x130) return U'i';
        if (cp == 0x138 || cp == 0x149 || cp == 0x17F) return cp;
        if (cp == 0x178) return 0xFF;
        if (odd_upper ? (cp % 2 == 1) : (cp % 2 == 0)) return cp + 1;
    }
    return cp;
}

inline std::string to_lower(std::string_view in) {
    auto cps = decode_utf8(in);
    for (auto& cp : cps) cp = to_lower(cp);
    return encode_utf8(cps);
}

/// ASCII base letters for lowercase Latin-1 U+00E0..U+00FF; '*' marks no fold.
inline constexpr std::string_view kLatin1Fold = "aaaaaaaceeeeiiiidnooooo*ouuuuyty";
/// Base letters for U+0100..U+017F.
inline constexpr std::string_view kLatinExtAFold =
    "aaaaaaccccccccddddeeeeeeeeeegggggggghhhhiiiiiiiiiiiijjkkkllllllllllnnnnnnnnnoooooooorrrrrrssssssss"
    "ttttttuuuuuuuuuuuuwwyyyzzzzzzs";
static_assert(kLatin1Fold.size() == 32 && kLatinExtAFold.size() == 128);

/// Folds one lowercase code point to its ASCII spelling. ñ is a letter of
/// its own in Spanish and is kept.
inline std::u32string fold_accent(char32_t cp) {
    if (cp < 0x80 || cp == U'ñ') return std::u32string(1, cp);
    if (cp == U'æ') return U"ae";
    if (cp == U'ß') return U"ss";
    if (cp == U'þ') return U"th";
    if (cp == U'œ') return U"oe";
    if (cp >= 0xE0 && cp <= 0xFF) {
        char base = kLatin1Fold[cp - 0xE0];
        if (base != '*') return std::u32string(1, static_cast<char32_t>(base));
    }
    if (cp >= 0x100 && cp <= 0x17F) return std::u32string(1, static_cast<char32_t>(kLatinExtAFold[cp - 0x100]));
    if (cp >= 0x300 && cp <= 0x36F) return {};  // stray combining marks
    return std::u32string(1, cp);
}

inline std::u32string fold_accents(std::u32string_view in) {
    std::u32string out;
    out.reserve(in.size());
    for (char32_t cp : in) out += fold_accent(cp);
    return out;
}

inline bool is_space(char32_t cp) {
    return cp == U' ' || cp == U'\t' || cp == U'\n' || cp == U'\r' || cp == U'\f' || cp == U'\v' ||
           cp == 0xA0;
}

/// Collapses whitespace runs to single spaces and trims.
inline std::string collapse_whitespace(std::string_view in) {
    std::string out;
    bool pending = false;
    for (char c : in) {
        bool ws = c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
        if (ws) {
            pending = !out.empty();
            continue;
        }
        if (pending) out += ' ';
        pending = false;
        out += c;
    }
    return out;
}

inline std::string trim(std::string_view in) {
    auto first = in.find_first_not_of(" \t\r\n\f\v");
    if (first == std::string_view::npos) return {};
    auto last = in.find_last_not_of(" \t\r\n\f\v");
    return std::string(in.substr(first, last - first + 1));
}

namespace detail {
struct NamedEntity {
    std::string_view name;
    char32_t cp;
};
inline constexpr NamedEntity kEntities[] = {
    {"amp", U'&'},      {"lt", U'<'},       {"gt", U'>'},       {"quot", U'"'},
    {"apos", U'\''},    {"nbsp", 0xA0},     {"iexcl", 0xA1},    {"iquest", 0xBF},
    {"laquo", 0xAB},    {"raquo", 0xBB},    {"ordf", 0xAA},     {"ordm", 0xBA},
    {"copy", 0xA9},     {"reg", 0xAE},      {"deg", 0xB0},      {"middot", 0xB7},
    {"aacute", 0xE1},   {"eacute", 0xE9},   {"iacute", 0xED},   {"oacute", 0xF3},
    {"uacute", 0xFA},   {"Aacute", 0xC1},   {"Eacute", 0xC9},   {"Iacute", 0xCD},
    {"Oacute", 0xD3},   {"Uacute", 0xDA},   {"ntilde", 0xF1},   {"Ntilde", 0xD1},
    {"uuml", 0xFC},     {"Uuml", 0xDC},     {"agrave", 0xE0},   {"egrave", 0xE8},
    {"ograve", 0xF2},   {"ccedil", 0xE7},   {"Ccedil", 0xC7},   {"hellip", 0x2026},
    {"mdash", 0x2014},  {"ndash", 0x2013},  {"lsquo", 0x2018},  {"rsquo", 0x2019},
    {"ldquo", 0x201C},  {"rdquo", 0x201D},  {"euro", 0x20AC},   {"bull", 0x2022},
};
}  // namespace detail

/// Decodes named and numeric character references. Unknown references are
/// left as written.
inline std::string decode_entities(std::string_view in) {
    std::string out;
    out.reserve(in.size());
    std::size_t i = 0;
    while (i < in.size()) {
        if (in[i] != '&') {
            out += in[i++];
            continue;
        }
        auto semi = in.find(';', i + 1);
        if (semi == std::string_view::npos || semi - i > 12) {
            out += in[i++];
            continue;
        }
        auto name = in.substr(i + 1, semi - i - 1);
        char32_t cp = 0;
        if (!name.empty() && name[0] == '#') {
            bool hex = name.size() > 1 && (name[1] == 'x' || name[1] == 'X');
            auto digits = name.substr(hex ? 2 : 1);
            std::uint32_t v = 0;
            bool ok = !digits.empty();
            for (char c : digits) {
                int d = -1;
                if (c >= '0' && c <= '9') d = c - '0';
                else if (hex && c >= 'a' && c <= 'f') d = c - 'a' + 10;
                else if (hex && c >= 'A' && c <= 'F') d = c - 'A' + 10;
                if (d < 0 || v > 0x10FFFF) {
                    ok = false;
                    break;
                }
                v = v * (hex ? 16 : 10) + static_cast<std::uint32_t>(d);
            }
            if (ok && v > 0 && v <= 0x10FFFF) cp = v;
        } else {
            for (const auto& e : detail::kEntities)
                if (e.name == name) cp = e.cp;
        }
        if (cp == 0) {
            out += in[i++];
            continue;
        }
        append_utf8(out, cp);
        i = semi + 1;
    }
    return out;
}

/// Replaces anything that looks like a tag with a space and decodes entities.
inline std::string strip_markup(std::string_view in) {
    std::string out;
    out.reserve(in.size());
    std::size_t i = 0;
    while (i < in.size()) {
        if (in[i] == '<') {
            auto close = in.find('>', i + 1);
            bool tag_like = close != std::string_view::npos && i + 1 < in.size() &&
                            (std::isalpha(static_cast<unsigned char>(in[i + 1])) || in[i + 1] == '/' ||
                             in[i + 1] == '!' || in[i + 1] == '?');
            if (tag_like) {
                out += ' ';
                i = close + 1;
                continue;
            }
        }
        out += in[i++];
    }
    return decode_entities(out);
}

}  // namespace mediaseries::text
