#include "generators.hpp"

#include "apiprobe/commands.hpp"
#include "apiprobe/error.hpp"
#include "apiprobe/io.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace apiprobe;
using namespace apiprobe::testing;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = APIPROBE_FIXTURES;
const fs::path kGolden = kFixtures / "golden";

RunConfig golden_config(const fs::path& out) {
    auto c = load_config(APIPROBE_GOLDEN_CONFIG);
    c.output_dir = out;
    return c;
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(read_text_file(p)); }

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorCode::IoFailure;
}

std::string cli() { return std::string("\"") + APIPROBE_CLI + "\""; }

}  // namespace

TEST(ClientStem, Sanitised) {
    EXPECT_EQ(client_file_stem("owner/repo"), "owner__repo");
    EXPECT_EQ(client_file_stem("a\\b:c"), "a__b_c");
    EXPECT_EQ(client_file_stem("plain"), "plain");
}

TEST(Pipeline, GoldenThroughApi) {
    TempDir tmp("pipe");
    const auto config = golden_config(tmp.path());
    const ArtifactPaths paths{tmp.path()};
    Diagnostics diag;
    std::ostringstream out;

    const auto catalogs = cmd_catalog(config, "", diag, out);
    ASSERT_EQ(catalogs.size(), 1u);
    const auto expected = read_json(kGolden / "expected.json");
    EXPECT_EQ(catalogs[0].names(), (expected["catalog"].get<std::set<std::string>>()));

    const auto aggs = cmd_scan(config, "tinykv", diag, out);
    ASSERT_EQ(aggs.size(), 1u);
    EXPECT_EQ(aggs[0].skipped_clients, (std::vector<std::string>{"client_gone"}));
    EXPECT_EQ(diag.count("client_skipped"), 1u);
    for (const auto& r : aggs[0].clients) {
        const auto& e = expected["clients"][r.client_id];
        EXPECT_EQ(r.uses, (e["uses"].get<std::map<std::string, std::uint64_t>>())) << r.client_id;
        const auto prep = read_json(paths.client_prep("tinykv", r.client_id));
        EXPECT_EQ(prep["excluded_dirs"], e["excluded_dirs"]) << r.client_id;
        EXPECT_EQ(prep["excluded_files"], e["excluded_files"]) << r.client_id;
        EXPECT_EQ(prep["rule"], e["rule"]) << r.client_id;
        EXPECT_TRUE(fs::exists(paths.client_report("tinykv", r.client_id)));
    }

    EXPECT_EQ(code_of([&] { cmd_report(config, "tinykv", diag, out); }), ErrorCode::MissingInputs);

    CoverageArgs args;
    args.library = "tinykv";
    args.tracefiles = {kFixtures / "lcov/tinykv.info"};
    args.baseline = kFixtures / "lcov/tinykv.info";
    args.augmented = kFixtures / "lcov/tinykv.info";
    const auto cov = cmd_coverage(config, args, diag, out);
    EXPECT_EQ(cov.annotated.apis.at("tkv_put").covered_lines, 13u);
    ASSERT_TRUE(cov.annotated.provenance.total_coverage_pct);
    EXPECT_DOUBLE_EQ(*cov.annotated.provenance.total_coverage_pct, 100.0 * 35 / 62);
    ASSERT_TRUE(cov.improvement);
    EXPECT_EQ(cov.improvement->extra_total_coverage_pct, 0.0);

    const auto files = cmd_report(config, "tinykv", diag, out);
    std::size_t json_files = 0;
    for (const auto& f : files) json_files += f.ends_with(".json");
    EXPECT_EQ(json_files, 7u);
    const auto unused = read_json(paths.reports() / "report_unused.json");
    EXPECT_EQ(unused["rows"][0]["unused"], 0);
}

TEST(Pipeline, CatalogRerunIsIdempotent) {
    TempDir tmp("idem");
    const auto config = golden_config(tmp.path());
    std::ostringstream out;
    cmd_catalog(config, "tinykv", Diagnostics::discard(), out);
    const auto first = read_text_file(ArtifactPaths{tmp.path()}.catalog("tinykv"));
    cmd_catalog(config, "tinykv", Diagnostics::discard(), out);
    EXPECT_EQ(read_text_file(ArtifactPaths{tmp.path()}.catalog("tinykv")), first);
}

TEST(Pipeline, ScanNeedsCatalog) {
    TempDir tmp("nocat");
    const auto config = golden_config(tmp.path());
    std::ostringstream out;
    EXPECT_THROW(cmd_scan(config, "tinykv", Diagnostics::discard(), out), Error);
}

TEST(Coverage, ArgumentChecks) {
    TempDir tmp("covargs");
    const auto config = golden_config(tmp.path());
    std::ostringstream out;
    CoverageArgs args;
    args.library = "tinykv";
    EXPECT_EQ(code_of([&] { cmd_coverage(config, args, Diagnostics::discard(), out); }), ErrorCode::MissingInputs);
    args.baseline = kFixtures / "lcov/tinykv.info";
    EXPECT_EQ(code_of([&] { cmd_coverage(config, args, Diagnostics::discard(), out); }), ErrorCode::InvalidConfig);
}

TEST(Coverage, MedianRunSelected) {
    TempDir tmp("covmed");
    const auto config = golden_config(tmp.path());
    std::ostringstream out;
    cmd_catalog(config, "tinykv", Diagnostics::discard(), out);
    CoverageArgs args;
    args.library = "tinykv";
    args.median = true;
    const auto full = read_text_file(kFixtures / "lcov/tinykv.info");
    std::string none = full;
    for (std::size_t p = 0; (p = none.find("DA:", p)) != std::string::npos; p += 3) {
        const auto comma = none.find(',', p);
        const auto eol = none.find('\n', comma);
        none.replace(comma + 1, eol - comma - 1, "0");
    }
    write_file(tmp / "r0.info", none);
    write_file(tmp / "r1.info", full);
    write_file(tmp / "r2.info", full);
    args.tracefiles = {tmp / "r1.info", tmp / "r0.info", tmp / "r2.info"};
    const auto r = cmd_coverage(config, args, Diagnostics::discard(), out);
    ASSERT_TRUE(r.median_index);
    EXPECT_EQ(*r.median_index, 0u);
    EXPECT_EQ(r.annotated.apis.at("tkv_open").covered_lines, 5u);
}

TEST(Eval, StoredCountsRoundTrip) {
    TempDir tmp("eval");
    write_file(tmp / "tool.json", R"({"c1": {"f": 2, "g": 1}, "c2": {"f": 1}})");
    write_file(tmp / "oracle.json", R"({"c1": {"f": 1, "h": 1}, "c2": {"f": 1}})");
    RunConfig config;
    config.output_dir = tmp / "out";
    std::ostringstream out;
    const auto rows = cmd_eval(config, tmp / "tool.json", tmp / "oracle.json", Diagnostics::discard(), out);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].eval.distinct_counts.tp, 1u);
    EXPECT_EQ(rows[0].eval.distinct_counts.fp, 1u);
    EXPECT_EQ(rows[0].eval.distinct_counts.fn, 1u);
    const auto back = eval_rows_from_json(read_json(ArtifactPaths{config.output_dir}.eval()));
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[0].eval.total_counts.fp, rows[0].eval.total_counts.fp);
    EXPECT_EQ(*back[1].eval.distinct.precision, 1.0);
    EXPECT_NE(out.str().find("client\tP_D"), std::string::npos);
}

TEST(Config, Validation) {
    const nlohmann::json base = {{"libraries", {{{"name", "x"}, {"shared_objects", {"a.so"}}, {"header_root", "inc"}}}}};
    EXPECT_NO_THROW(config_from_json(base, "/tmp"));
    auto bad = base;
    bad["thresholds"] = {{"overlap", 1.5}};
    EXPECT_EQ(code_of([&] { config_from_json(bad, "/tmp"); }), ErrorCode::InvalidConfig);
    bad = base;
    bad["libraries"].push_back(base["libraries"][0]);
    EXPECT_EQ(code_of([&] { config_from_json(bad, "/tmp"); }), ErrorCode::InvalidConfig);
    bad = base;
    bad["libraries"][0]["name"] = "../x";
    EXPECT_EQ(code_of([&] { config_from_json(bad, "/tmp"); }), ErrorCode::InvalidConfig);
    const auto c = config_from_json(base, "/tmp");
    EXPECT_EQ(c.libraries[0].header_root, fs::path("/tmp/inc"));
    EXPECT_EQ(c.output_dir, fs::path("/tmp/out"));
    EXPECT_EQ(code_of([&] { c.library("y"); }), ErrorCode::InvalidConfig);
}

TEST(Config, DependencyDb) {
    const auto ok = dependency_db_from_json(nlohmann::json::parse(
        R"([{"client": "a", "source": "", "library": "x"}, {"client": "a", "source": "", "library": "y"}])"));
    EXPECT_EQ(ok.size(), 2u);
    EXPECT_EQ(code_of([] {
                  dependency_db_from_json(nlohmann::json::parse(
                      R"([{"client": "a", "source": "", "library": "x"}, {"client": "a", "source": "s", "library": "x"}])"));
              }),
              ErrorCode::InvalidConfig);
    EXPECT_EQ(code_of([] { dependency_db_from_json(nlohmann::json::object()); }), ErrorCode::InvalidConfig);
    EXPECT_EQ(code_of([] {
                  dependency_db_from_json(nlohmann::json::parse(R"([{"client": "../a", "library": "x"}])"));
              }),
              ErrorCode::InvalidConfig);
}

TEST(Cli, GoldenPipeline) {
    TempDir tmp("cli");
    const std::string base = cli() + " --config \"" + APIPROBE_GOLDEN_CONFIG + "\" --output \"" + tmp.path().string() + "\"";
    std::string output;
    ASSERT_EQ(run_shell(base + " catalog", &output), 0) << output;
    EXPECT_NE(output.find("tinykv: 6 APIs"), std::string::npos) << output;
    ASSERT_EQ(run_shell(base + " --jobs 2 scan --library tinykv", &output), 0) << output;
    EXPECT_NE(run_shell(base + " report", &output), 0);
    EXPECT_NE(output.find("error:"), std::string::npos);
    ASSERT_EQ(run_shell(base + " coverage --library tinykv \"" + (kFixtures / "lcov/tinykv.info").string() + "\"",
                        &output),
              0)
        << output;
    ASSERT_EQ(run_shell(base + " report", &output), 0) << output;
    EXPECT_TRUE(fs::exists(tmp / "reports/report_used_not_tested.json"));

    const auto agg = read_json(ArtifactPaths{tmp.path()}.aggregate("tinykv"));
    const auto expected = read_json(kGolden / "expected.json");
    for (const auto& c : agg["clients"])
        EXPECT_EQ(c["uses"], expected["clients"][c["client"].get<std::string>()]["uses"]);
}

TEST(Cli, FailuresExitNonZero) {
    TempDir tmp("clibad");
    write_file(tmp / "cfg.json", R"({"libraries": [{"name": "x", "shared_objects": ["missing.so"], "header_root": "inc"}]})");
    write_file(tmp / "inc/x.h", "int f(void);");
    std::string output;
    EXPECT_NE(run_shell(cli() + " --config \"" + (tmp / "cfg.json").string() + "\" catalog", &output), 0);
    EXPECT_NE(output.find("missing.so"), std::string::npos) << output;
    EXPECT_NE(run_shell(cli() + " --config \"" + (tmp / "nope.json").string() + "\" catalog", &output), 0);
    EXPECT_NE(run_shell(cli(), &output), 0);
}

TEST(Cli, EvalWithoutConfig) {
    TempDir tmp("clieval");
    write_file(tmp / "t.json", R"({"c": {"f": 1}})");
    write_file(tmp / "o.json", R"({"c": {"f": 1}})");
    std::string output;
    ASSERT_EQ(run_shell(cli() + " --output \"" + tmp.path().string() + "\" eval --tool \"" + (tmp / "t.json").string() +
                            "\" --oracle \"" + (tmp / "o.json").string() + "\"",
                        &output),
              0)
        << output;
    EXPECT_TRUE(fs::exists(tmp / "eval.json"));
}
