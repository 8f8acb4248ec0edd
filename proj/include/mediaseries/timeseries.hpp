#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "mediaseries/date.hpp"
#include "mediaseries/error.hpp"
#include "mediaseries/io.hpp"

namespace mediaseries::timeseries {

enum class Granularity { daily, monthly };

inline std::string to_string(Granularity g) { return g == Granularity::daily ? "daily" : "monthly"; }

inline Granularity granularity_from_string(const std::string& name) {
    if (name == "daily") return Granularity::daily;
    if (name == "monthly") return Granularity::monthly;
    throw ParseError("unknown granularity '" + name + "'");
}

struct Point {
    Date date;
    double value = 0.0;
    bool operator==(const Point&) const = default;
};

/// Dates strictly increasing. Missing dates are simply absent; monthly
/// points sit on the first of the month.
struct TimeSeries {
    std::vector<Point> points;
    Granularity granularity = Granularity::daily;

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }

    std::vector<double> values() const {
        std::vector<double> v;
        v.reserve(points.size());
        for (const auto& p : points) v.push_back(p.value);
        return v;
    }

    void validate() const {
        for (std::size_t i = 1; i < points.size(); ++i)
            if (!(points[i - 1].date < points[i].date))
                throw ShapeMismatch("series dates are not strictly increasing at " + format_date(points[i].date));
        for (const auto& p : points)
            if (!std::isfinite(p.value)) throw ShapeMismatch("non-finite value at " + format_date(p.date));
    }

    /// Index distance between two dates at this granularity.
    std::int64_t step(const Date& a, const Date& b) const {
        return granularity == Granularity::daily ? day_number(b) - day_number(a) : month_number(b) - month_number(a);
    }

    bool has_gaps() const {
        for (std::size_t i = 1; i < points.size(); ++i)
            if (step(points[i - 1].date, points[i].date) != 1) return true;
        return false;
    }
};

struct Prediction {
    Date date;
    double probability = 0.0;
};

inline Date bucket_of(const Date& d, Granularity g) { return g == Granularity::daily ? d : first_of_month(d); }

/// Arithmetic mean per calendar day or month, buckets in date order.
inline TimeSeries aggregate(const std::vector<Prediction>& predictions, Granularity granularity) {
    if (predictions.empty()) throw EmptyInput("no predictions to aggregate");
    std::map<std::int64_t, std::pair<double, std::size_t>> buckets;
    for (const auto& p : predictions) {
        auto& [sum, count] = buckets[day_number(bucket_of(p.date, granularity))];
        sum += p.probability;
        ++count;
    }
    TimeSeries ts;
    ts.granularity = granularity;
    for (const auto& [day, acc] : buckets)
        ts.points.push_back({date_from_day_number(day), acc.first / static_cast<double>(acc.second)});
    return ts;
}

// ---------------------------------------------------------------------------
// classical decomposition

struct Decomposition {
    std::vector<Date> dates;
    std::vector<double> observed;
    std::vector<std::optional<double>> trend;  // empty on the half-window edges
    std::vector<double> seasonal;
    std::vector<std::optional<double>> residual;
    std::size_t period = 1;
};

/// Additive X = T + S + e. T is the centred moving average of width
/// `period` (2 x period with half-weight ends when the period is even).
inline Decomposition decompose_ma(const TimeSeries& series, std::size_t period) {
    if (period < 1) throw TooShort("period must be positive");
    series.validate();
    const std::size_t n = series.size();
    if (n < 2 * period)
        throw TooShort("decomposition needs at least " + std::to_string(2 * period) + " points, got " +
                       std::to_string(n));
    if (series.has_gaps()) throw GapsPresent("series has missing dates; moving averages need regular spacing");

    Decomposition d;
    d.period = period;
    d.observed = series.values();
    for (const auto& p : series.points) d.dates.push_back(p.date);
    d.trend.assign(n, std::nullopt);
    d.residual.assign(n, std::nullopt);

    const std::size_t half = period / 2;
    const bool even = period % 2 == 0;
    const double p = static_cast<double>(period);
    for (std::size_t t = half; t + half < n; ++t) {
        double s = 0.0;
        if (even) {
            s = 0.5 * (d.observed[t - half] + d.observed[t + half]);
            for (std::size_t i = t - half + 1; i < t + half; ++i) s += d.observed[i];
        } else {
            for (std::size_t i = t - half; i <= t + half; ++i) s += d.observed[i];
        }
        d.trend[t] = s / p;
    }

    std::vector<double> phase_sum(period, 0.0);
    std::vector<std::size_t> phase_count(period, 0);
    for (std::size_t t = 0; t < n; ++t)
        if (d.trend[t]) {
            phase_sum[t % period] += d.observed[t] - *d.trend[t];
            ++phase_count[t % period];
        }
    std::vector<double> phase_mean(period);
    for (std::size_t k = 0; k < period; ++k) phase_mean[k] = phase_sum[k] / static_cast<double>(phase_count[k]);
    double centre = 0.0;
    for (double v : phase_mean) centre += v;
    centre /= p;
    for (auto& v : phase_mean) v -= centre;

    d.seasonal.resize(n);
    for (std::size_t t = 0; t < n; ++t) {
        d.seasonal[t] = phase_mean[t % period];
        if (d.trend[t]) d.residual[t] = d.observed[t] - *d.trend[t] - d.seasonal[t];
    }
    return d;
}

/// Last defined trend value over the one `lag` steps earlier.
inline std::optional<double> trend_ratio(const Decomposition& d, std::size_t lag = 36) {
    std::optional<std::size_t> last;
    for (std::size_t t = d.trend.size(); t-- > 0;)
        if (d.trend[t]) {
            last = t;
            break;
        }
    if (!last || *last < lag || !d.trend[*last - lag] || *d.trend[*last - lag] == 0.0) return std::nullopt;
    return *d.trend[*last] / *d.trend[*last - lag];
}

// ---------------------------------------------------------------------------
// cross-correlation

struct CcfResult {
    std::vector<int> lags;
    std::vector<double> correlations;
    int peak_lag = 0;
    double peak_correlation = 0.0;
    std::size_t overlap = 0;
};

namespace detail {
/// Constant windows are detected by value, not by a variance that rounding
/// can leave slightly above zero.
inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    auto constant = [](const std::vector<double>& v) {
        return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
    };
    if (constant(a) || constant(b)) throw ZeroVariance("constant window in cross-correlation");
    const auto n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma, db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa == 0.0 || sbb == 0.0) throw ZeroVariance("constant window in cross-correlation");
    return sab / std::sqrt(saa * sbb);
}
}  // namespace detail

/// r_k = corr(x_t, y_{t+k}) over the shared dates, each lag normalised by
/// its own window. Positive peak lag: y follows x.
inline CcfResult ccf(const TimeSeries& x, const TimeSeries& y, std::size_t max_lag) {
    if (x.granularity != y.granularity) throw ShapeMismatch("series granularities differ");
    x.validate();
    y.validate();
    std::vector<double> a, b;
    std::size_t i = 0, j = 0;
    while (i < x.size() && j < y.size()) {
        if (x.points[i].date < y.points[j].date) {
            ++i;
        } else if (y.points[j].date < x.points[i].date) {
            ++j;
        } else {
            a.push_back(x.points[i++].value);
            b.push_back(y.points[j++].value);
        }
    }
    const std::size_t n = a.size();
    if (n <= max_lag + 2)
        throw InsufficientOverlap("series share " + std::to_string(n) + " dates; need more than " +
                                  std::to_string(max_lag + 2));
    CcfResult r;
    r.overlap = n;
    const auto K = static_cast<long>(max_lag);
    for (long k = -K; k <= K; ++k) {
        std::vector<double> wa, wb;
        for (long t = std::max(0L, -k); t < static_cast<long>(n) && t + k < static_cast<long>(n); ++t) {
            wa.push_back(a[static_cast<std::size_t>(t)]);
            wb.push_back(b[static_cast<std::size_t>(t + k)]);
        }
        r.lags.push_back(static_cast<int>(k));
        r.correlations.push_back(detail::pearson(wa, wb));
    }
    // candidates in order 0, -1, +1, -2, +2, ...; only a strictly larger |r| wins
    double best = -1.0;
    for (long m = 0; m <= K; ++m)
        for (long k : {-m, m}) {
            if (m == 0 && k != 0) continue;
            const double v = r.correlations[static_cast<std::size_t>(k + K)];
            if (std::abs(v) > best) {
                best = std::abs(v);
                r.peak_lag = static_cast<int>(k);
                r.peak_correlation = v;
            }
            if (m == 0) break;
        }
    return r;
}

// ---------------------------------------------------------------------------
// structural model: piecewise-linear trend + Fourier seasonality + holidays

inline constexpr double kZ99 = 2.5758293;

struct FourierSpec {
    double period_days = 365.25;
    std::size_t order = 10;
};

using HolidaySets = std::map<std::string, std::set<Date>>;

struct StructuralConfig {
    std::size_t n_changepoints = 25;
    double changepoint_range = 0.8;
    std::vector<FourierSpec> seasonalities = {FourierSpec{}};
    HolidaySets holidays;
    /// Penalty on changepoint deltas, per point: the objective is
    /// mean squared residual + lambda * |delta|^2.
    double ridge_lambda = 1e-4;
};

struct Changepoint {
    Date date;
    double t = 0.0;  // position on the rescaled [0,1] axis
    double delta = 0.0;
};

struct FourierTerms {
    double period_days = 0.0;
    std::vector<double> a;  // cos coefficients, n = 1..N
    std::vector<double> b;  // sin coefficients
};

struct StructuralModel {
    Date start;
    double span_days = 1.0;
    double base_level = 0.0;
    double base_slope = 0.0;
    std::vector<Changepoint> changepoints;
    std::vector<FourierTerms> fourier;
    std::map<std::string, double> holiday_effects;
    HolidaySets holidays;
    double residual_sigma = 0.0;
};

/// Changepoints sit on observed dates, evenly spaced by index over the
/// first `range` fraction of the points (at most one per date).
inline std::vector<Date> changepoint_dates(const std::vector<Date>& dates, std::size_t count, double range) {
    std::vector<Date> out;
    if (count == 0 || dates.size() < 2) return out;
    const auto history = std::max<std::size_t>(2, static_cast<std::size_t>(std::floor(static_cast<double>(dates.size()) * range)));
    std::set<std::size_t> picked;
    for (std::size_t j = 1; j <= count; ++j) {
        const double pos = static_cast<double>(j) * static_cast<double>(history - 1) / static_cast<double>(count);
        picked.insert(static_cast<std::size_t>(std::llround(pos)));
    }
    for (auto idx : picked) out.push_back(dates[idx]);
    return out;
}

namespace detail {

inline double scaled_time(const StructuralModel& m, const Date& d) {
    return static_cast<double>(day_number(d) - day_number(m.start)) / m.span_days;
}

inline double trend_at(const StructuralModel& m, double t) {
    double v = m.base_level + m.base_slope * t;
    for (const auto& c : m.changepoints) v += c.delta * std::max(0.0, t - c.t);
    return v;
}

/// cos/sin(2 pi n d / P) with d = days since the start.
inline double seasonal_at(const StructuralModel& m, const Date& date) {
    const double days = static_cast<double>(day_number(date) - day_number(m.start));
    double v = 0.0;
    for (const auto& f : m.fourier)
        for (std::size_t n = 1; n <= f.a.size(); ++n) {
            const double angle = 2.0 * std::numbers::pi * std::fmod(static_cast<double>(n) * days, f.period_days) / f.period_days;
            v += f.a[n - 1] * std::cos(angle) + f.b[n - 1] * std::sin(angle);
        }
    return v;
}

inline double holidays_at(const StructuralModel& m, const Date& date) {
    double v = 0.0;
    for (const auto& [name, effect] : m.holiday_effects) {
        auto it = m.holidays.find(name);
        if (it != m.holidays.end() && it->second.count(date)) v += effect;
    }
    return v;
}

}  // namespace detail

inline double trend_component(const StructuralModel& m, const Date& date) {
    return detail::trend_at(m, detail::scaled_time(m, date));
}

inline double seasonal_component(const StructuralModel& m, const Date& date) { return detail::seasonal_at(m, date); }

inline double holiday_component(const StructuralModel& m, const Date& date) { return detail::holidays_at(m, date); }

inline double expected_value(const StructuralModel& m, const Date& date) {
    return trend_component(m, date) + seasonal_component(m, date) + holiday_component(m, date);
}

/// Ridge least squares with the penalty on changepoint deltas only. Missing
/// dates are fine; the input order of points does not matter. Holiday sets
/// with no date inside the data get a zero effect.
inline StructuralModel fit_structural(const TimeSeries& series, const StructuralConfig& cfg) {
    std::vector<Point> pts = series.points;
    std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) { return a.date < b.date; });
    for (std::size_t i = 1; i < pts.size(); ++i)
        if (pts[i - 1].date == pts[i].date) throw ShapeMismatch("duplicate date " + format_date(pts[i].date));
    for (const auto& p : pts)
        if (!std::isfinite(p.value)) throw ShapeMismatch("non-finite value at " + format_date(p.date));
    if (!(cfg.changepoint_range > 0.0 && cfg.changepoint_range <= 1.0))
        throw ShapeMismatch("changepoint_range must lie in (0,1]");
    if (cfg.ridge_lambda < 0.0) throw ShapeMismatch("ridge_lambda must be non-negative");
    for (const auto& f : cfg.seasonalities)
        if (!(f.period_days > 0.0)) throw ShapeMismatch("seasonal period must be positive");

    std::size_t fourier_cols = 0;
    for (const auto& f : cfg.seasonalities) fourier_cols += 2 * f.order;
    const std::size_t needed = 2 * (fourier_cols + cfg.n_changepoints + cfg.holidays.size() + 2);
    if (pts.size() < needed)
        throw TooShort("structural fit needs at least " + std::to_string(needed) + " points, got " +
                       std::to_string(pts.size()));

    StructuralModel m;
    m.start = pts.front().date;
    m.span_days = std::max<double>(1.0, static_cast<double>(day_number(pts.back().date) - day_number(m.start)));
    m.holidays = cfg.holidays;

    std::vector<Date> dates;
    for (const auto& p : pts) dates.push_back(p.date);
    for (const auto& d : changepoint_dates(dates, cfg.n_changepoints, cfg.changepoint_range))
        m.changepoints.push_back({d, detail::scaled_time(m, d), 0.0});

    std::vector<std::string> active_holidays;
    for (const auto& [name, set] : cfg.holidays) {
        m.holiday_effects[name] = 0.0;
        if (std::any_of(dates.begin(), dates.end(), [&](const Date& d) { return set.count(d) > 0; }))
            active_holidays.push_back(name);
    }

    const auto n = static_cast<Eigen::Index>(pts.size());
    const auto n_cp = static_cast<Eigen::Index>(m.changepoints.size());
    const Eigen::Index cols = 2 + n_cp + static_cast<Eigen::Index>(fourier_cols + active_holidays.size());
    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(n + n_cp, cols);
    Eigen::VectorXd y = Eigen::VectorXd::Zero(n + n_cp);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& p = pts[static_cast<std::size_t>(i)];
        const double t = detail::scaled_time(m, p.date);
        const double days = static_cast<double>(day_number(p.date) - day_number(m.start));
        Eigen::Index c = 0;
        X(i, c++) = 1.0;
        X(i, c++) = t;
        for (const auto& cp : m.changepoints) X(i, c++) = std::max(0.0, t - cp.t);
        for (const auto& f : cfg.seasonalities)
            for (std::size_t k = 1; k <= f.order; ++k) {
                const double angle =
                    2.0 * std::numbers::pi * std::fmod(static_cast<double>(k) * days, f.period_days) / f.period_days;
                X(i, c++) = std::cos(angle);
                X(i, c++) = std::sin(angle);
            }
        for (const auto& name : active_holidays) X(i, c++) = cfg.holidays.at(name).count(p.date) ? 1.0 : 0.0;
        y(i) = p.value;
    }
    const double penalty = std::sqrt(cfg.ridge_lambda * static_cast<double>(n));
    for (Eigen::Index j = 0; j < n_cp; ++j) X(n + j, 2 + j) = penalty;

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    if (qr.rank() < cols)
        throw RankDeficient("design matrix has rank " + std::to_string(qr.rank()) + " of " + std::to_string(cols) +
                            (cfg.ridge_lambda == 0.0 ? "; a positive ridge_lambda resolves changepoint collinearity" : ""));
    const Eigen::VectorXd beta = qr.solve(y);

    Eigen::Index c = 0;
    m.base_level = beta(c++);
    m.base_slope = beta(c++);
    for (auto& cp : m.changepoints) cp.delta = beta(c++);
    for (const auto& f : cfg.seasonalities) {
        FourierTerms terms{f.period_days, {}, {}};
        for (std::size_t k = 1; k <= f.order; ++k) {
            terms.a.push_back(beta(c++));
            terms.b.push_back(beta(c++));
        }
        m.fourier.push_back(std::move(terms));
    }
    for (const auto& name : active_holidays) m.holiday_effects[name] = beta(c++);

    const Eigen::VectorXd residual = y.head(n) - X.topRows(n) * beta;
    const double mean = residual.mean();
    m.residual_sigma = n > 1 ? std::sqrt((residual.array() - mean).square().sum() / static_cast<double>(n - 1)) : 0.0;
    return m;
}

struct Interval {
    double expected = 0.0;
    double lower = 0.0;
    double upper = 0.0;
};

/// expected +/- z sigma; the half-width is the same on every date.
inline std::vector<Interval> predict(const StructuralModel& m, const std::vector<Date>& dates) {
    std::vector<Interval> out;
    out.reserve(dates.size());
    const double half = kZ99 * m.residual_sigma;
    for (const auto& d : dates) {
        const double e = expected_value(m, d);
        out.push_back({e, e - half, e + half});
    }
    return out;
}

struct AnomalyRow {
    Date date;
    double observed = 0.0;
    double expected = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    bool is_anomaly = false;
    bool operator==(const AnomalyRow&) const = default;
};

struct AnomalyReport {
    std::vector<AnomalyRow> rows;  // newest first

    std::vector<AnomalyRow> anomalies() const {
        std::vector<AnomalyRow> out;
        std::copy_if(rows.begin(), rows.end(), std::back_inserter(out), [](const AnomalyRow& r) { return r.is_anomaly; });
        return out;
    }
};

/// Relative slack on the interval test so that rounding noise in an exact
/// fit does not flag points.
inline constexpr double kIntervalSlack = 1e-9;

inline AnomalyReport detect_anomalies(const TimeSeries& series, const StructuralModel& m) {
    AnomalyReport report;
    std::vector<Date> dates;
    for (const auto& p : series.points) dates.push_back(p.date);
    const auto intervals = predict(m, dates);
    for (std::size_t i = 0; i < dates.size(); ++i) {
        const auto& iv = intervals[i];
        const double obs = series.points[i].value;
        const double slack = kIntervalSlack * std::max(1.0, std::abs(iv.expected));
        const bool outside = obs < iv.lower - slack || obs > iv.upper + slack;
        report.rows.push_back({dates[i], obs, iv.expected, iv.lower, iv.upper, outside});
    }
    std::sort(report.rows.begin(), report.rows.end(),
              [](const AnomalyRow& a, const AnomalyRow& b) { return b.date < a.date; });
    return report;
}

// ---------------------------------------------------------------------------
// files

inline std::string series_to_csv(const TimeSeries& ts) {
    std::string out = "date,value\n";
    for (const auto& p : ts.points) out += io::csv_row({format_date(p.date), io::format_double(p.value)});
    return out;
}

inline TimeSeries series_from_csv(std::string_view text, Granularity granularity = Granularity::daily) {
    auto rows = io::parse_csv(text);
    if (rows.empty() || rows[0].size() < 2 || rows[0][0] != "date" || rows[0][1] != "value")
        throw ParseError("series CSV must start with a 'date,value' header");
    TimeSeries ts;
    ts.granularity = granularity;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() == 1 && rows[i][0].empty()) continue;
        if (rows[i].size() != 2) throw ParseError("series CSV row " + std::to_string(i + 1) + " has " +
                                                  std::to_string(rows[i].size()) + " fields");
        ts.points.push_back({parse_date(rows[i][0]), io::parse_double(rows[i][1])});
    }
    std::sort(ts.points.begin(), ts.points.end(), [](const Point& a, const Point& b) { return a.date < b.date; });
    ts.validate();
    return ts;
}

inline std::string decomposition_to_csv(const Decomposition& d) {
    auto opt = [](const std::optional<double>& v) { return v ? io::format_double(*v) : std::string(); };
    std::string out = "date,observed,trend,seasonal,residual\n";
    for (std::size_t i = 0; i < d.dates.size(); ++i)
        out += io::csv_row({format_date(d.dates[i]), io::format_double(d.observed[i]), opt(d.trend[i]),
                            io::format_double(d.seasonal[i]), opt(d.residual[i])});
    return out;
}

inline std::string anomalies_to_csv(const AnomalyReport& r) {
    std::string out = "date,observed,expected,lower,upper,is_anomaly\n";
    for (const auto& row : r.rows)
        out += io::csv_row({format_date(row.date), io::format_double(row.observed), io::format_double(row.expected),
                            io::format_double(row.lower), io::format_double(row.upper),
                            row.is_anomaly ? "true" : "false"});
    return out;
}

inline AnomalyReport anomalies_from_csv(std::string_view text) {
    auto rows = io::parse_csv(text);
    if (rows.empty() || rows[0] != std::vector<std::string>{"date", "observed", "expected", "lower", "upper", "is_anomaly"})
        throw ParseError("unexpected anomaly CSV header");
    AnomalyReport r;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& f = rows[i];
        if (f.size() != 6) throw ParseError("anomaly CSV row " + std::to_string(i + 1) + " malformed");
        if (f[5] != "true" && f[5] != "false") throw ParseError("is_anomaly must be true or false");
        r.rows.push_back({parse_date(f[0]), io::parse_double(f[1]), io::parse_double(f[2]), io::parse_double(f[3]),
                          io::parse_double(f[4]), f[5] == "true"});
    }
    return r;
}

inline std::string ccf_to_csv(const CcfResult& r) {
    std::string out = "lag,correlation\n";
    for (std::size_t i = 0; i < r.lags.size(); ++i)
        out += io::csv_row({std::to_string(r.lags[i]), io::format_double(r.correlations[i])});
    return out;
}

/// `{"name": ["YYYY-MM-DD", ...], ...}`
inline HolidaySets holidays_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ParseError("holiday file must be a JSON object");
    HolidaySets sets;
    for (const auto& [name, list] : j.items()) {
        if (!list.is_array()) throw ParseError("holiday set '" + name + "' must be an array of dates");
        auto& set = sets[name];
        for (const auto& d : list) {
            if (!d.is_string()) throw ParseError("holiday set '" + name + "' contains a non-string entry");
            set.insert(parse_date(d.get<std::string>()));
        }
    }
    return sets;
}

inline HolidaySets read_holidays(const std::filesystem::path& path) {
    try {
        return holidays_from_json(nlohmann::json::parse(io::read_file(path)));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

inline nlohmann::json model_to_json(const StructuralModel& m) {
    nlohmann::json cps = nlohmann::json::array();
    for (const auto& c : m.changepoints) cps.push_back({{"date", format_date(c.date)}, {"t", c.t}, {"delta", c.delta}});
    nlohmann::json fourier = nlohmann::json::array();
    for (const auto& f : m.fourier) fourier.push_back({{"period_days", f.period_days}, {"a", f.a}, {"b", f.b}});
    return {{"start", format_date(m.start)},
            {"span_days", m.span_days},
            {"base_level", m.base_level},
            {"base_slope", m.base_slope},
            {"changepoints", cps},
            {"fourier", fourier},
            {"holiday_effects", m.holiday_effects},
            {"residual_sigma", m.residual_sigma},
            {"interval_z", kZ99}};
}

}  // namespace mediaseries::timeseries
