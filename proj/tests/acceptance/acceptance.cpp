// One PASS/FAIL line per acceptance criterion; exits non-zero if any fail.
#include "generators.hpp"
#include "properties.hpp"

#include "apiprobe/commands.hpp"
#include "apiprobe/io.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>

using namespace apiprobe;
using namespace apiprobe::testing;
namespace fs = std::filesystem;

namespace {

constexpr double kGoldenBudgetSeconds = 5.0;
constexpr double kThroughputBudgetSeconds = 30.0;
constexpr std::size_t kThroughputLines = 100000;
constexpr std::size_t kThroughputApis = 200;
constexpr double kExact = 0.0;
constexpr double kPctTolerance = 1e-9;

const fs::path kFixtures = APIPROBE_FIXTURES;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
    bool ok = true;
    std::string detail;

    void check(bool cond, const std::string& what) {
        if (cond) return;
        ok = false;
        if (!detail.empty()) detail += "; ";
        detail += what;
    }
};

Outcome golden_exactness() {
    Outcome o;
    TempDir tmp("accept_golden");
    auto config = load_config(APIPROBE_GOLDEN_CONFIG);
    config.output_dir = tmp.path();
    const auto expected = nlohmann::json::parse(read_text_file(kFixtures / "golden/expected.json"));
    std::ostringstream sink;

    const auto t0 = Clock::now();
    const auto catalogs = cmd_catalog(config, "tinykv", Diagnostics::discard(), sink);
    const auto aggs = cmd_scan(config, "tinykv", Diagnostics::discard(), sink);
    const double elapsed = seconds_since(t0);

    o.check(catalogs.at(0).names() == expected["catalog"].get<std::set<std::string>>(), "catalog");
    const auto& agg = aggs.at(0);
    o.check(agg.clients.size() == expected["clients"].size(), "client count");
    o.check(agg.skipped_clients == expected["skipped_clients"].get<std::vector<std::string>>(), "skipped clients");
    const ArtifactPaths paths{tmp.path()};
    for (const auto& r : agg.clients) {
        const auto& e = expected["clients"][r.client_id];
        o.check(r.uses == e["uses"].get<std::map<std::string, std::uint64_t>>(), r.client_id + " uses");
        o.check(r.distinct_count == e["distinct"].get<std::size_t>(), r.client_id + " distinct");
        o.check(r.total_uses() == e["total"].get<std::uint64_t>(), r.client_id + " total");
        o.check(std::abs(r.utilisation_pct - e["utilisation_pct"].get<double>()) <= kPctTolerance,
                r.client_id + " utilisation");
        const auto prep = nlohmann::json::parse(read_text_file(paths.client_prep("tinykv", r.client_id)));
        o.check(prep["excluded_dirs"] == e["excluded_dirs"] && prep["excluded_files"] == e["excluded_files"] &&
                    prep["rule"] == e["rule"],
                r.client_id + " exclusions");
    }
    for (const auto& [api, s] : expected["per_api"].items()) {
        const auto& got = agg.per_api.at(api);
        o.check(got.client_count == s["clients"].get<std::uint64_t>() && got.total_uses == s["uses"].get<std::uint64_t>(),
                api + " per-api");
    }
    o.check(elapsed < kGoldenBudgetSeconds, "took " + std::to_string(elapsed) + " s");
    if (o.ok) o.detail = "3 clients exact in " + std::to_string(elapsed) + " s";
    return o;
}

Outcome table_rows() {
    Outcome o;
    struct Row {
        const char* lib;
        std::size_t total, unused;
        int pct;
    };
    for (const auto& row : {Row{"lmdb", 56, 10, 18}, Row{"hdf5", 983, 603, 61}, Row{"xxhash", 49, 0, 0}}) {
        std::vector<std::string> names;
        for (std::size_t i = 0; i < row.total; ++i) names.push_back("f" + std::to_string(i));
        const auto catalog = make_catalog(row.lib, names);
        UsageReport r;
        r.client_id = "c";
        for (std::size_t i = 0; i < row.total - row.unused; ++i) r.uses[names[i]] = 1;
        const auto u = unused_apis(aggregate_reports({r}, catalog), catalog);
        o.check(u.unused == row.unused && u.unused_pct == row.pct,
                std::string(row.lib) + " got " + std::to_string(u.unused_pct) + "%");
    }
    if (o.ok) o.detail = "18% 61% 0%";
    return o;
}

Outcome pr_formula() {
    Outcome o;
    const auto pr = precision_recall_from({EvalMode::Distinct, 62, 37, 1});
    o.check(round2(*pr.precision) == 0.63 && round2(*pr.recall) == 0.98, "distinct P/R");
    const UseCounts u{{"a", 4}, {"b", 1}, {"c", 0}};
    const auto id = precision_recall(u, u);
    for (const auto* side : {&id.distinct, &id.total})
        o.check(round2(*side->precision) == 1.0 && round2(*side->recall) == 1.0, "identity");
    if (o.ok) o.detail = "P_D=0.63 R_D=0.98, identity 1.00/1.00";
    return o;
}

Outcome coverage_attribution() {
    Outcome o;
    const auto tf = load_tracefile(kFixtures / "lcov/tinykv.info");
    const auto catalog =
        make_catalog("tinykv", {"tkv_open", "tkv_close", "tkv_get", "tkv_put", "tkv_del", "tkv_version"});
    const auto annotated = annotate_catalog_coverage(catalog, tf);
    // Hand counts for the fixture.
    const std::map<std::string, std::pair<std::uint64_t, std::uint64_t>> hand = {
        {"tkv_open", {8, 5}}, {"tkv_close", {12, 0}}, {"tkv_get", {2, 2}},
        {"tkv_put", {16, 13}}, {"tkv_del", {9, 0}},   {"tkv_version", {1, 1}}};
    for (const auto& [api, ec] : hand) {
        const auto& a = annotated.apis.at(api);
        o.check(a.eloc == ec.first && a.covered_lines == ec.second, api);
    }
    const std::vector<Tracefile> twice{tf, tf};
    const auto merged = merge_tracefiles(twice);
    bool doubled = true;
    for (const auto& [path, f] : tf.files)
        for (const auto& [line, n] : f.line_counts) doubled &= merged.files.at(path).line_counts.at(line) == 2 * n;
    o.check(doubled, "self-merge counts");
    o.check(std::abs(overall_coverage_pct(merged) - overall_coverage_pct(tf)) <= kExact, "self-merge TCov");
    o.check(annotate_catalog_coverage(catalog, merged).apis == annotated.apis, "self-merge per-API");
    const auto d = coverage_delta(tf, tf, catalog);
    o.check(d.extra_total_coverage_pct == 0.0 && d.newly_covered_apis.empty() && d.improved_apis.empty() &&
                d.new_api_lines_covered == 0,
            "delta(x,x)");
    if (o.ok) o.detail = "6 APIs exact, merge and delta laws hold";
    return o;
}

Outcome improvement_shape() {
    Outcome o;
    const auto base = load_tracefile(kFixtures / "lcov/improve_baseline.info");
    const auto aug = load_tracefile(kFixtures / "lcov/improve_augmented.info");
    const auto catalog = make_catalog("lmdbish", {"mdb_env_create", "mdb_env_open", "mdb_txn_begin", "mdb_txn_commit",
                                                  "mdb_get", "mdb_put", "mdb_del", "mdb_cursor_open", "mdb_strerror",
                                                  "mdb_env_copy"});
    const auto r = coverage_delta(base, aug, catalog);
    o.check(r.newly_covered_apis.size() == 4, "newly " + std::to_string(r.newly_covered_apis.size()));
    o.check(r.improved_apis.size() == 4, "improved " + std::to_string(r.improved_apis.size()));
    o.check(r.extra_total_coverage_pct > 0.0, "extra not positive");
    if (o.ok) o.detail = "newly=4 improved=4 extra=+" + std::to_string(r.extra_total_coverage_pct) + "pp";
    return o;
}

Outcome property_suites() {
    Outcome o;
    std::size_t total = 0;
    for (const auto& p : all_properties()) {
        const auto r = p.run(0xacce97, kPropertyCases);
        total += r.cases;
        o.check(r.cases >= 100, std::string(p.name) + " ran " + std::to_string(r.cases));
        o.check(r.ok(), std::string(p.name) + ": " + r.first_failure);
    }
    if (o.ok) o.detail = std::to_string(all_properties().size()) + " suites, " + std::to_string(total) + " cases";
    return o;
}

Outcome throughput() {
    Outcome o;
    TempDir tmp("accept_speed");
    Rng rng(20240611);
    const auto apis = random_api_names(rng, kThroughputApis, "lib_");
    std::size_t lines = 0;
    std::uint64_t expected_calls = 0;
    for (std::size_t i = 0; lines < kThroughputLines; ++i) {
        const auto src = random_client_source(rng, apis, 200);
        lines += static_cast<std::size_t>(std::count(src.text.begin(), src.text.end(), '\n'));
        for (const auto& [_, n] : src.calls) expected_calls += n;
        write_file(tmp / ("d" + std::to_string(i % 16) + "/f" + std::to_string(i) + ".c"), src.text);
    }
    ClientRecord rec;
    rec.client_id = "bulk";
    rec.root = tmp.path();
    const auto t0 = Clock::now();
    const auto report = scan_client(rec, make_catalog("lib", apis));
    const double elapsed = seconds_since(t0);
    o.check(report.total_uses() == expected_calls, "call count mismatch");
    o.check(elapsed < kThroughputBudgetSeconds, "took " + std::to_string(elapsed) + " s");
    if (o.ok)
        o.detail = std::to_string(lines) + " lines, " + std::to_string(kThroughputApis) + " APIs in " +
                   std::to_string(elapsed) + " s";
    return o;
}

}  // namespace

int main() {
    const std::pair<const char*, Outcome (*)()> criteria[] = {
        {"golden_corpus_exactness", golden_exactness},
        {"unused_table_rows", table_rows},
        {"precision_recall_formula", pr_formula},
        {"coverage_attribution", coverage_attribution},
        {"improvement_report_shape", improvement_shape},
        {"property_suites", property_suites},
        {"throughput_100k_lines", throughput},
    };
    int failed = 0;
    for (const auto& [name, fn] : criteria) {
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o.ok = false;
            o.detail = std::string("exception: ") + e.what();
        }
        std::cout << (o.ok ? "PASS " : "FAIL ") << name << " (" << o.detail << ")" << std::endl;
        failed += o.ok ? 0 : 1;
    }
    return failed == 0 ? 0 : 1;
}
