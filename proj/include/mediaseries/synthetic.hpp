#pragma once

#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "mediaseries/corpus.hpp"
#include "mediaseries/date.hpp"
#include "mediaseries/timeseries.hpp"

namespace mediaseries::synthetic {

/// Draws built only from raw 64-bit outputs, so a seed produces the same
/// corpus with any standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    std::uint64_t below(std::uint64_t n) { return engine_() % n; }
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    bool chance(double p) { return uniform() < p; }
    template <typename T>
    const T& pick(const std::vector<T>& v) {
        return v[below(v.size())];
    }

private:
    std::mt19937_64 engine_;
};

struct Topic {
    std::string name;
    std::vector<std::string> words;
    std::vector<std::string> tags;           // always attached
    std::vector<std::string> optional_tags;  // attached with probability 0.4
};

inline const std::vector<Topic>& topics() {
    static const std::vector<Topic> t = {
        {"gbv",
         {"violencia", "violencias", "machista", "machistas", "mujer", "mujeres", "agresion", "agresor", "victima",
          "victimas", "maltrato", "pareja", "expareja", "feminicidio", "acoso", "denunciante", "alejamiento",
          "asesinada", "igualdad", "genero", "proteccion", "amenazas", "custodia", "refugio"},
         {"violencia machista", "sucesos"},
         {"justicia"}},
        {"politics",
         {"gobierno", "congreso", "elecciones", "partido", "ministro", "ministra", "votacion", "coalicion",
          "diputados", "senado", "campaña", "alcalde", "parlamento", "oposicion", "presidente", "reforma",
          "escaños", "encuesta"},
         {"politica"},
         {"justicia"}},
        {"economy",
         {"economia", "empresa", "empresas", "mercado", "inflacion", "empleo", "paro", "banco", "impuestos",
          "crecimiento", "bolsa", "exportaciones", "salarios", "inversion", "deuda", "beneficios", "consumo",
          "precios"},
         {"economia"},
         {"empresas"}},
        {"sports",
         {"futbol", "liga", "equipo", "gol", "goles", "entrenador", "estadio", "jugadores", "temporada",
          "campeonato", "aficion", "fichaje", "torneo", "baloncesto", "victoria", "derrota"},
         {"deportes"},
         {}},
        {"culture",
         {"museo", "exposicion", "pelicula", "festival", "novela", "escritora", "concierto", "teatro", "musica",
          "premio", "obra", "director", "estreno", "pintura", "libro"},
         {"cultura"},
         {}},
    };
    return t;
}

inline const std::vector<std::string>& filler_words() {
    static const std::vector<std::string> w = {
        "segun", "fuentes", "ayer", "ciudad", "madrid", "barcelona", "informacion", "datos", "semana", "lunes",
        "martes", "viernes", "tarde", "mañana", "vecinos", "calle", "barrio", "centro", "nacional", "provincia",
        "publico", "nuevo", "primera", "ultimos", "años", "meses", "horas", "caso", "situacion", "momento"};
    return w;
}

inline const std::vector<std::string>& function_words() {
    static const std::vector<std::string> w = {"la", "el", "de", "que", "en", "y", "los", "se", "las", "por",
                                               "un", "para", "con", "una", "su", "del", "al", "como", "mas"};
    return w;
}

struct Options {
    std::uint64_t seed = 20190501;
    Date start = Date{std::chrono::year{2019}, std::chrono::May, std::chrono::day{1}};
    std::size_t days = 56;
    std::size_t docs_per_day = 4;
    /// GBV documents per day: weekdays / weekends.
    std::size_t gbv_weekday = 1;
    std::size_t gbv_weekend = 2;
    std::vector<Date> spike_days = {Date{std::chrono::year{2019}, std::chrono::June, std::chrono::day{8}},
                                    Date{std::chrono::year{2019}, std::chrono::June, std::chrono::day{22}}};
    std::size_t spike_extra_docs = 6;
    /// Opinion series follows the daily GBV share with this delay (days).
    std::size_t survey_lag = 3;
    double survey_noise = 0.02;
};

struct Article {
    corpus::Document document;
    std::string url;
    std::string file_name;
    std::string html;
    bool gbv = false;
};

struct Fixture {
    std::vector<Article> articles;  // in file-name order
    timeseries::TimeSeries survey;
    timeseries::HolidaySets holidays;
    std::vector<Date> spike_days;
};

namespace detail {

inline std::string capitalize(std::string s) {
    if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
    return s;
}

/// A sentence of 8-14 words: topic words, filler and function words.
inline std::string sentence(Rng& rng, const Topic& topic, double topical_share) {
    const std::size_t n = 8 + rng.below(7);
    std::string out;
    for (std::size_t i = 0; i < n; ++i) {
        const double u = rng.uniform();
        const std::string& w = u < topical_share ? rng.pick(topic.words)
                                                 : (u < topical_share + 0.3 ? rng.pick(filler_words()) : rng.pick(function_words()));
        if (i) out += ' ';
        out += i == 0 ? capitalize(w) : w;
        if (i + 1 < n && rng.chance(0.08)) out += ',';
    }
    return out + ".";
}

inline std::string escape_html(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '&') out += "&amp;";
        else if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else if (c == '"') out += "&quot;";
        else out += c;
    }
    return out;
}

inline std::string render_html(const corpus::Document& d, const std::string& url, const std::vector<std::string>& paragraphs) {
    std::string keywords;
    for (const auto& t : d.tags) keywords += (keywords.empty() ? "" : ", ") + t;
    std::string html = "<!DOCTYPE html>\n<html lang=\"es\">\n<head>\n<meta charset=\"utf-8\">\n<title>" +
                       escape_html(d.title) + "</title>\n<link rel=\"canonical\" href=\"" + escape_html(url) +
                       "\">\n<meta name=\"keywords\" content=\"" + escape_html(keywords) +
                       "\">\n<meta property=\"article:published_time\" content=\"" + format_date(d.published_at) +
                       "T08:00:00+02:00\">\n</head>\n<body>\n<nav><a href=\"/\">Portada</a> <p>Secciones</p></nav>\n"
                       "<article>\n<h1>" + escape_html(d.title) + "</h1>\n";
    for (const auto& p : paragraphs) html += "<p>" + escape_html(p) + "</p>\n";
    html += "</article>\n<footer><p>Diario de ejemplo</p></footer>\n</body>\n</html>\n";
    return html;
}

}  // namespace detail

/// Two latent themes (GBV versus everything else) over consecutive days,
/// with more GBV coverage on weekends and two event days where GBV news
/// dominates.
inline Fixture generate(const Options& opt = {}) {
    Rng rng(opt.seed);
    const auto& all = topics();
    Fixture fx;
    fx.spike_days = opt.spike_days;
    std::vector<double> gbv_share;
    const std::set<Date> spikes(opt.spike_days.begin(), opt.spike_days.end());

    for (std::size_t day = 0; day < opt.days; ++day) {
        const Date date = date_from_day_number(day_number(opt.start) + static_cast<std::int64_t>(day));
        const bool spike = spikes.count(date) > 0;
        const bool weekend = iso_weekday_index(date) >= 5;
        const std::size_t count = opt.docs_per_day + (spike ? opt.spike_extra_docs : 0);
        const std::size_t gbv_count = spike ? count : (weekend ? opt.gbv_weekend : opt.gbv_weekday);
        gbv_share.push_back(static_cast<double>(gbv_count) / static_cast<double>(count));
        // which slots carry GBV stories
        std::vector<bool> is_gbv(count, false);
        for (std::size_t k = 0; k < gbv_count; ++k) is_gbv[k] = true;
        for (std::size_t i = count; i > 1; --i) std::swap(is_gbv[i - 1], is_gbv[rng.below(i)]);

        for (std::size_t k = 0; k < count; ++k) {
            const Topic& topic = is_gbv[k] ? all[0] : all[1 + rng.below(all.size() - 1)];
            Article a;
            a.gbv = is_gbv[k];
            char stem[64];
            std::snprintf(stem, sizeof stem, "%s-%02zu", format_date(date).c_str(), k + 1);
            a.file_name = std::string(stem) + ".html";
            a.url = "https://noticias.example/" + std::string(stem);

            corpus::Document& d = a.document;
            d.id = corpus::document_id(a.url);
            d.source_id = "noticias.example";
            d.published_at = date;
            std::string title;
            const std::size_t title_words = 5 + rng.below(4);
            for (std::size_t i = 0; i < title_words; ++i) {
                const std::string& w = rng.chance(0.6) ? rng.pick(topic.words) : rng.pick(filler_words());
                title += (i ? " " : "") + (i == 0 ? detail::capitalize(w) : w);
            }
            d.title = title;
            std::vector<std::string> paragraphs;
            const std::size_t n_par = 2 + rng.below(2);
            for (std::size_t p = 0; p < n_par; ++p) {
                std::string par;
                const std::size_t n_sent = 2 + rng.below(2);
                for (std::size_t s = 0; s < n_sent; ++s) par += (s ? " " : "") + detail::sentence(rng, topic, 0.45);
                paragraphs.push_back(par);
            }
            for (std::size_t p = 0; p < paragraphs.size(); ++p) d.body += (p ? "\n" : "") + paragraphs[p];
            d.tags.insert(topic.tags.begin(), topic.tags.end());
            for (const auto& t : topic.optional_tags)
                if (rng.chance(0.4)) d.tags.insert(t);
            a.html = detail::render_html(d, a.url, paragraphs);
            fx.articles.push_back(std::move(a));
        }
    }

    // opinion survey: lagged GBV share plus noise, over the same days
    for (std::size_t day = 0; day < opt.days; ++day) {
        const std::size_t src = day >= opt.survey_lag ? day - opt.survey_lag : 0;
        const double noise = (rng.uniform() - 0.5) * 2.0 * opt.survey_noise;
        fx.survey.points.push_back(
            {date_from_day_number(day_number(opt.start) + static_cast<std::int64_t>(day)), 0.1 + gbv_share[src] + noise});
    }

    auto in_range = [&](int y, unsigned m, unsigned d) {
        const Date date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
        const auto n = day_number(date) - day_number(opt.start);
        return n >= 0 && n < static_cast<std::int64_t>(opt.days);
    };
    const int year = static_cast<int>(opt.start.year());
    for (auto [m, d] : {std::pair{5u, 1u}, std::pair{6u, 24u}, std::pair{8u, 15u}, std::pair{10u, 12u}, std::pair{12u, 25u}})
        if (in_range(year, m, d))
            fx.holidays["fiestas"].insert(Date{std::chrono::year{year}, std::chrono::month{m}, std::chrono::day{d}});
    return fx;
}

}  // namespace mediaseries::synthetic
