#pragma once

#include <charconv>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

#include "mediaseries/error.hpp"

namespace mediaseries {

using Date = std::chrono::year_month_day;

/// Parses the leading `YYYY-MM-DD` of an ISO-8601 date or timestamp.
inline std::optional<Date> try_parse_date(std::string_view text) {
    if (text.size() < 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
    if (text.size() > 10 && text[10] != 'T' && text[10] != ' ') return std::nullopt;
    int y = 0;
    unsigned m = 0, d = 0;
    auto field = [&](std::size_t pos, std::size_t len, auto& out) {
        auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, out);
        return ec == std::errc{} && ptr == text.data() + pos + len;
    };
    if (!field(0, 4, y) || !field(5, 2, m) || !field(8, 2, d)) return std::nullopt;
    Date date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!date.ok()) return std::nullopt;
    return date;
}

inline Date parse_date(std::string_view text) {
    if (auto d = try_parse_date(text)) return *d;
    throw DateUnparseable("cannot parse date '" + std::string(text) + "'");
}

inline std::string format_date(const Date& date) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(date.year()),
                  static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
    return buf;
}

/// Days since 1970-01-01.
inline std::int64_t day_number(const Date& date) {
    return std::chrono::sys_days{date}.time_since_epoch().count();
}

inline Date date_from_day_number(std::int64_t days) {
    return Date{std::chrono::sys_days{std::chrono::days{days}}};
}

/// Months since 0000-01, used to check monthly spacing.
inline std::int64_t month_number(const Date& date) {
    return static_cast<std::int64_t>(static_cast<int>(date.year())) * 12 +
           static_cast<unsigned>(date.month()) - 1;
}

inline Date first_of_month(const Date& date) {
    return Date{date.year(), date.month(), std::chrono::day{1}};
}

/// 0 = Monday .. 6 = Sunday.
inline unsigned iso_weekday_index(const Date& date) {
    return std::chrono::weekday{std::chrono::sys_days{date}}.iso_encoding() - 1;
}

}  // namespace mediaseries
