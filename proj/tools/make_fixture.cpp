// Writes the synthetic fixture: HTML pages, corpus JSONL, survey CSV and holidays.
// Usage: make_fixture <output-dir> [seed]

#include <filesystem>
#include <iostream>
#include <string>

#include <nlohmann/json.hpp>

#include "mediaseries/synthetic.hpp"

int main(int argc, char** argv) {
    using namespace mediaseries;
    if (argc < 2) {
        std::cerr << "usage: make_fixture <output-dir> [seed]\n";
        return 2;
    }
    const std::filesystem::path dir = argv[1];
    synthetic::Options opt;
    if (argc > 2) opt.seed = std::stoull(argv[2]);
    const auto fx = synthetic::generate(opt);

    std::filesystem::remove_all(dir / "html");
    std::vector<corpus::Document> docs;
    for (const auto& a : fx.articles) {
        io::write_file(dir / "html" / a.file_name, a.html);
        docs.push_back(a.document);
    }
    std::sort(docs.begin(), docs.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    io::write_file(dir / "corpus.jsonl", corpus::to_jsonl(docs));
    io::write_file(dir / "survey.csv", timeseries::series_to_csv(fx.survey));
    nlohmann::json holidays = nlohmann::json::object();
    for (const auto& [name, dates] : fx.holidays) {
        auto& list = holidays[name] = nlohmann::json::array();
        for (const auto& d : dates) list.push_back(format_date(d));
    }
    io::write_file(dir / "holidays.json", holidays.dump(2) + "\n");
    std::cout << fx.articles.size() << " articles written to " << dir.string() << "\n";
    return 0;
}
