#include <catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <map>

#include "mediaseries/pipeline.hpp"
#include "mediaseries/synthetic.hpp"

using namespace mediaseries;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kFixture = fs::path(MEDIASERIES_DATA_DIR) / "fixture";
const fs::path kConfig = kFixture / "config.json";

/// Short training keeps the pipeline runs quick; the full fixture run lives
/// in the acceptance suite.
const std::string kQuick = " --tagger.epochs=2 --scorer.epochs=2";

struct RunResult {
    int status = -1;
    std::string out, err;
};

fs::path scratch(const std::string& name) {
    auto p = fs::temp_directory_path() / ("mediaseries_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

RunResult cli(const std::string& args, const std::string& env = "") {
    const auto dir = fs::temp_directory_path() / "mediaseries_cli_streams";
    fs::create_directories(dir);
    const auto out = dir / "stdout", err = dir / "stderr";
    const std::string cmd =
        env + " '" + std::string(MEDIASERIES_CLI) + "' " + args + " >'" + out.string() + "' 2>'" + err.string() + "'";
    const int raw = std::system(cmd.c_str());
    RunResult r;
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.out = io::read_file(out);
    r.err = io::read_file(err);
    return r;
}

std::string fixture_run(const std::string& subcommand, const fs::path& out, const std::string& extra = "") {
    return "--config '" + kConfig.string() + "' " + subcommand + " --paths.output='" + out.string() + "'" + kQuick + extra;
}

/// relative path -> bytes for every file under `root`
std::map<std::string, std::string> tree(const fs::path& root) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) files[fs::relative(e.path(), root).generic_string()] = io::read_file(e.path());
    return files;
}

}  // namespace

TEST_CASE("fixture files are reproduced by the generator", "[cli][fixture]") {
    const auto fx = synthetic::generate();
    std::vector<corpus::Document> docs;
    std::size_t pages = 0;
    for (const auto& a : fx.articles) {
        CHECK(io::read_file(kFixture / "html" / a.file_name) == a.html);
        docs.push_back(a.document);
        ++pages;
    }
    for (const auto& e : fs::directory_iterator(kFixture / "html")) (void)e, --pages;
    CHECK(pages == 0);
    std::sort(docs.begin(), docs.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    CHECK(io::read_file(kFixture / "corpus.jsonl") == corpus::to_jsonl(docs));
    CHECK(io::read_file(kFixture / "survey.csv") == timeseries::series_to_csv(fx.survey));
    CHECK(timeseries::read_holidays(kFixture / "holidays.json") == fx.holidays);
}

TEST_CASE("ingest of the fixture pages equals the bundled corpus", "[cli][ingest]") {
    const auto out = scratch("ingest");
    auto r = cli(fixture_run("ingest", out));
    REQUIRE(r.status == 0);
    CHECK(r.out == (out / "corpus.jsonl").string() + "\n");
    CHECK(io::read_file(out / "corpus.jsonl") == io::read_file(kFixture / "corpus.jsonl"));
}

TEST_CASE("ingest skips pages without article text", "[cli][ingest]") {
    const auto dir = scratch("ingest_bad");
    const auto fx = synthetic::generate();
    io::write_file(dir / "html" / "good.html", fx.articles[0].html);
    io::write_file(dir / "html" / "empty.html", "<html><head><title>x</title></head><body><nav>menu</nav></body></html>");
    io::write_file(dir / "html" / "notes.txt", "not a page");
    auto r = cli("ingest --paths.html_dir='" + (dir / "html").string() + "' --paths.output='" + (dir / "out").string() + "'");
    REQUIRE(r.status == 0);
    CHECK(r.err.find("page skipped") != std::string::npos);
    auto docs = corpus::read_corpus(dir / "out" / "corpus.jsonl");
    REQUIRE(docs.size() == 1);
    CHECK(docs[0] == fx.articles[0].document);

    auto none = cli("ingest --paths.html_dir='" + (dir / "out").string() + "' --paths.output='" + (dir / "o2").string() + "'");
    CHECK(none.status == 3);
}

TEST_CASE("subcommands in sequence, all, and repeated all agree byte for byte", "[cli][determinism]") {
    const auto base = scratch("determinism");
    std::vector<std::string> printed;
    for (const auto& step : {"normalize", "train-tags", "train-gbv", "score", "series", "anomalies", "ccf", "mapper", "report"}) {
        auto r = cli(fixture_run(step, base / "steps"));
        INFO(step << ": " << r.err);
        REQUIRE(r.status == 0);
        for (const auto& line : io::split_lines(r.out))
            if (!line.empty()) printed.push_back(line);
    }
    auto first = cli(fixture_run("all", base / "first"));
    REQUIRE(first.status == 0);
    auto second = cli(fixture_run("all", base / "second"));
    REQUIRE(second.status == 0);
    auto threaded = cli(fixture_run("all", base / "threaded", " --jobs=3"));
    REQUIRE(threaded.status == 0);

    const auto steps = tree(base / "steps");
    CHECK(tree(base / "first") == steps);
    CHECK(tree(base / "second") == steps);
    CHECK(tree(base / "threaded") == steps);

    // every written file is printed exactly once
    std::set<std::string> listed;
    for (const auto& line : io::split_lines(first.out))
        if (!line.empty()) CHECK(listed.insert(fs::relative(line, base / "first").generic_string()).second);
    std::set<std::string> on_disk;
    for (const auto& [rel, bytes] : steps) on_disk.insert(rel);
    CHECK(listed == on_disk);
    CHECK(printed.size() == on_disk.size());
}

TEST_CASE("score writes one record per document", "[cli][score]") {
    const auto out = scratch("score");
    for (const auto& step : {"normalize", "train-tags", "train-gbv", "score"}) REQUIRE(cli(fixture_run(step, out)).status == 0);
    const auto corpus = corpus::read_corpus(kFixture / "corpus.jsonl");
    std::size_t n = 0;
    std::string previous;
    for (const auto& line : io::split_lines(io::read_file(out / "scores.jsonl"))) {
        if (line.empty()) continue;
        auto j = json::parse(line);
        REQUIRE(j.contains("id"));
        REQUIRE(j.contains("date"));
        REQUIRE(j.at("tags").is_array());
        const double p = j.at("gbv").get<double>();
        CHECK(p > 0.0);
        CHECK(p < 1.0);
        CHECK(j.at("id").get<std::string>() > previous);
        previous = j.at("id").get<std::string>();
        ++n;
    }
    CHECK(n == corpus.size());
    auto metrics = json::parse(io::read_file(out / "models" / "scorer_metrics.json"));
    CHECK(metrics.at("train_documents").get<std::size_t>() + metrics.at("held_out_documents").get<std::size_t>() == corpus.size());
}

TEST_CASE("missing inputs fail before anything is written", "[cli][errors]") {
    const auto base = scratch("missing");
    auto r = cli(fixture_run("all", base / "out", " --paths.corpus='" + (base / "absent.jsonl").string() + "'"));
    CHECK(r.status == 2);
    CHECK(r.out.empty());
    CHECK_FALSE(fs::exists(base / "out"));
    auto err = json::parse(r.err);
    CHECK(err.at("error") == "ConfigInvalid");
    CHECK(err.at("category") == "config");
    CHECK(err.at("subcommand") == "normalize");

    auto survey = cli(fixture_run("all", base / "out", " --paths.survey='" + (base / "absent.csv").string() + "'"));
    CHECK(survey.status == 2);
    CHECK_FALSE(fs::exists(base / "out"));

    auto downstream = cli(fixture_run("anomalies", base / "out"));
    CHECK(downstream.status == 2);
    CHECK(json::parse(downstream.err).at("message").get<std::string>().find("series") != std::string::npos);
    CHECK_FALSE(fs::exists(base / "out"));
}

TEST_CASE("configuration errors exit with status 2", "[cli][errors]") {
    const auto base = scratch("config");
    CHECK(cli(fixture_run("normalize", base / "out", " --tagger.depth=3")).status == 2);
    CHECK(cli(fixture_run("normalize", base / "out", " --thresholds.tag=1.0")).status == 2);
    CHECK(cli(fixture_run("normalize", base / "out", " --corpus.min_df=\"two\"")).status == 2);
    CHECK(cli(fixture_run("normalize", base / "out", " --mapper.lens=pc9")).status == 2);
    CHECK(cli("--config '" + (base / "nothing.json").string() + "' normalize").status == 2);
    io::write_file(base / "bad.json", R"({"paths": {"corpus": "c.jsonl"}, "extra": 1})");
    auto bad = cli("--config '" + (base / "bad.json").string() + "' normalize");
    CHECK(bad.status == 2);
    CHECK(json::parse(bad.err).at("message").get<std::string>().find("extra") != std::string::npos);
    CHECK_FALSE(fs::exists(base / "out"));
}

TEST_CASE("data and numeric failures map to their exit codes", "[cli][errors]") {
    const auto base = scratch("codes");
    io::write_file(base / "broken.jsonl", "{\"id\": 3}\n");
    auto data = cli("normalize --paths.corpus='" + (base / "broken.jsonl").string() + "' --paths.output='" + (base / "o").string() + "'");
    CHECK(data.status == 3);
    CHECK(json::parse(data.err).at("category") == "data");

    // the same document once per day: a constant series cannot be correlated
    const auto docs = corpus::read_corpus(kFixture / "corpus.jsonl");
    std::set<Date> days;
    for (const auto& d : docs) days.insert(d.published_at);
    std::vector<corpus::Document> same;
    for (const auto& day : days) {
        auto d = docs[0];
        d.id = "doc-" + format_date(day);
        d.published_at = day;
        same.push_back(d);
    }
    io::write_file(base / "same.jsonl", corpus::to_jsonl(same));
    const auto out = base / "numeric";
    const std::string args = " --paths.corpus='" + (base / "same.jsonl").string() + "'";
    for (const auto& step : {"normalize", "train-tags", "train-gbv", "score", "series"}) REQUIRE(cli(fixture_run(step, out, args)).status == 0);
    auto numeric = cli(fixture_run("ccf", out, args));
    CHECK(numeric.status == 4);
    CHECK(json::parse(numeric.err).at("error") == "ZeroVariance");
}

TEST_CASE("config path comes from the environment when no flag is given", "[cli][config]") {
    const auto out = scratch("env");
    auto r = cli("ingest --paths.output='" + out.string() + "'", "MEDIASERIES_CONFIG='" + kConfig.string() + "'");
    REQUIRE(r.status == 0);
    CHECK(fs::exists(out / "corpus.jsonl"));
}

TEST_CASE("configuration merging and overrides", "[cli][config]") {
    auto c = pipeline::load_config(kConfig, {"seed=11", "mapper.year=2019", "paths.output=/tmp/x", "structural.seasonalities=[]"});
    CHECK(c.seed == 11);
    CHECK(c.scorer.train.seed == 12);
    CHECK(c.mapper_year == 2019);
    CHECK(c.paths.output == fs::path("/tmp/x"));
    CHECK(c.paths.corpus == kFixture / "corpus.jsonl");
    CHECK(c.structural.seasonalities.empty());
    CHECK(c.max_sequence_length == 64);
    CHECK(c.tagger.channels == std::vector<int>{128, 128});
    CHECK(c.tag_threshold == 0.5);
    CHECK(c.gbv_select == 0.9999);

    auto defaults = pipeline::load_config(std::nullopt, {});
    CHECK(defaults.paths.corpus.empty());
    CHECK(defaults.corpus_file() == defaults.paths.output / "corpus.jsonl");
    CHECK(pipeline::all_steps(defaults).front() == "ingest");
    CHECK(pipeline::all_steps(c).front() == "normalize");

    // a string setting keeps the raw text even if it looks like JSON
    auto s = pipeline::load_config(std::nullopt, {"scorer.gbv_tag=123"});
    CHECK(s.gbv_tag == "123");
    CHECK_THROWS_AS(pipeline::load_config(std::nullopt, {"tagger"}), ConfigInvalid);
    CHECK_THROWS_AS(pipeline::load_config(std::nullopt, {"tagger={}"}), ConfigInvalid);
    CHECK_THROWS_AS(pipeline::load_config(std::nullopt, {"tagger.min_tag_documents=-1"}), ConfigInvalid);
    CHECK_THROWS_AS(pipeline::load_config(std::nullopt, {"thresholds.gbv_select=0"}), ConfigInvalid);
    CHECK_THROWS_AS(pipeline::load_config(std::nullopt, {"mapper.subset=some"}), ConfigInvalid);
}

TEST_CASE("inputs are left untouched", "[cli][invariants]") {
    const auto before = tree(kFixture);
    const auto out = scratch("untouched");
    REQUIRE(cli(fixture_run("ingest", out)).status == 0);
    REQUIRE(cli(fixture_run("normalize", out)).status == 0);
    auto after = tree(kFixture);
    // a stray output tree from a manual run is not part of the fixture
    std::erase_if(after, [](const auto& kv) { return kv.first.rfind("out/", 0) == 0; });
    auto expected = before;
    std::erase_if(expected, [](const auto& kv) { return kv.first.rfind("out/", 0) == 0; });
    CHECK(after == expected);
}
