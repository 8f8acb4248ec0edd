// Command-line entry point: mediaseries [--config FILE] [--jobs N] <subcommand> [--dotted.key=value ...]

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mediaseries/pipeline.hpp"

namespace {

using namespace mediaseries;

const char* category_name(ErrorCategory c) {
    switch (c) {
        case ErrorCategory::config: return "config";
        case ErrorCategory::data: return "data";
        case ErrorCategory::numeric: return "numeric";
    }
    return "unknown";
}

void report_error(const std::string& code, const std::string& category, const std::string& subcommand,
                  const std::string& message) {
    nlohmann::json j = {{"error", code}, {"category", category}, {"subcommand", subcommand}, {"message", message}};
    std::cerr << j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << "\n";
}

/// `--a.b=v` and `--a.b v` to `a.b=v`.
std::vector<std::string> overrides_from(const std::vector<std::string>& extras) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < extras.size(); ++i) {
        const auto& arg = extras[i];
        if (arg.rfind("--", 0) != 0 || arg.size() < 3)
            throw ConfigInvalid("unexpected argument '" + arg + "'");
        auto body = arg.substr(2);
        if (body.find('=') == std::string::npos) {
            if (i + 1 >= extras.size()) throw ConfigInvalid("option '" + arg + "' needs a value");
            body += "=" + extras[++i];
        }
        out.push_back(body);
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Media coverage time series: corpus, classifiers, anomalies, correlation and Mapper graphs"};
    std::string config_path;
    std::optional<std::size_t> jobs;
    app.add_option("-c,--config", config_path, "JSON configuration file (default: $MEDIASERIES_CONFIG)");
    app.add_option("-j,--jobs", jobs, "Worker threads for per-document work");
    app.require_subcommand(1);
    const std::map<std::string, std::string> help = {
        {"ingest", "HTML directory to corpus JSONL"},
        {"normalize", "Tokenize the corpus and build the vocabulary"},
        {"train-tags", "Train the multilabel tagger"},
        {"train-gbv", "Train the binary GBV scorer"},
        {"score", "Per-document tags and GBV probability"},
        {"series", "Daily and monthly series with decomposition"},
        {"anomalies", "Structural fit and anomaly report"},
        {"ccf", "Cross-correlation against the survey series"},
        {"mapper", "Mapper graph of tag probability vectors"},
        {"report", "Calendar heatmaps and tag frequencies"},
        {"all", "Every step in order"}};
    std::vector<CLI::App*> subs;
    for (const auto& name : pipeline::subcommands()) {
        auto* sub = app.add_subcommand(name, help.at(name));
        sub->allow_extras();
        subs.push_back(sub);
    }
    CLI11_PARSE(app, argc, argv);

    CLI::App* chosen = nullptr;
    for (auto* s : subs)
        if (s->parsed()) chosen = s;
    const std::string subcommand = chosen->get_name();
    std::string step = subcommand;
    try {
        auto overrides = overrides_from(chosen->remaining());
        if (jobs) overrides.push_back("jobs=" + std::to_string(*jobs));
        std::optional<std::filesystem::path> file;
        if (!config_path.empty()) {
            file = config_path;
        } else if (const char* env = std::getenv(pipeline::kConfigEnv); env && *env) {
            file = std::filesystem::path(env);
        }
        const auto config = pipeline::load_config(file, overrides);
        const auto written = pipeline::run(
            subcommand, config, [&](const std::string& note) { report_error("Warning", "data", step, note); }, &step);
        for (const auto& p : written) std::cout << p.string() << "\n";
    } catch (const Error& e) {
        report_error(e.code(), category_name(e.category()), step, e.what());
        return pipeline::exit_code(e.category());
    } catch (const nlohmann::json::exception& e) {
        report_error("ParseError", "data", step, e.what());
        return 3;
    } catch (const std::filesystem::filesystem_error& e) {
        report_error("IoError", "data", step, e.what());
        return 3;
    } catch (const std::exception& e) {
        report_error("InternalError", "numeric", step, e.what());
        return 4;
    }
    return 0;
}
