#include "apiprobe/metrics.hpp"
#include "apiprobe/error.hpp"
#include "apiprobe/io.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace apiprobe {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

bool has_coverage(const ApiCatalog& c) {
    return c.provenance.coverage_source.has_value() ||
           std::any_of(c.apis.begin(), c.apis.end(), [](const auto& kv) { return kv.second.annotated(); });
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

std::string csv_number(double v) {
    std::ostringstream ss;
    ss.precision(17);
    ss << v;
    return ss.str();
}

class Csv {
public:
    explicit Csv(std::initializer_list<std::string> header) { row(std::vector<std::string>(header)); }
    void row(const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) out_ << ',';
            out_ << csv_field(fields[i]);
        }
        out_ << '\n';
    }
    std::string str() const { return out_.str(); }

private:
    std::ostringstream out_;
};

json eval_side(const EvalCounts& c, const PrecisionRecall& pr) {
    return {{"tp", c.tp},
            {"fp", c.fp},
            {"fn", c.fn},
            {"precision", opt(pr.precision)},
            {"recall", opt(pr.recall)},
            {"precision_2dp", pr.precision ? json(round2(*pr.precision)) : json(nullptr)},
            {"recall_2dp", pr.recall ? json(round2(*pr.recall)) : json(nullptr)}};
}

std::string opt_csv(const std::optional<double>& v) { return v ? csv_number(*v) : std::string(); }

}  // namespace

int round_pct(double pct) { return static_cast<int>(std::round(pct)); }

double round2(double x) { return std::round(x * 100.0) / 100.0; }

UnusedRow unused_apis(const CorpusAggregate& agg, const ApiCatalog& catalog) {
    UnusedRow row;
    row.library = catalog.library;
    row.total = catalog.size();
    for (const auto& [name, _] : catalog.apis) {
        const auto it = agg.per_api.find(name);
        if (it == agg.per_api.end() || it->second.client_count == 0)
            row.unused_apis.push_back(name);
        else
            ++row.used;
    }
    row.unused = row.unused_apis.size();
    row.unused_pct = row.total == 0 ? 0 : round_pct(100.0 * static_cast<double>(row.unused) / row.total);
    return row;
}

void sort_unused_rows(std::vector<UnusedRow>& rows) {
    std::stable_sort(rows.begin(), rows.end(), [](const UnusedRow& a, const UnusedRow& b) {
        if (a.unused_pct != b.unused_pct) return a.unused_pct > b.unused_pct;
        return a.library < b.library;
    });
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw Error(ErrorCode::EmptyCorpus, "quantile of an empty sample");
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

FiveNumberSummary five_number_summary(const std::vector<double>& values) {
    return {quantile(values, 0.0), quantile(values, 0.25), quantile(values, 0.5), quantile(values, 0.75),
            quantile(values, 1.0)};
}

UtilisationDistribution client_utilisation_distribution(const CorpusAggregate& agg) {
    if (agg.clients.empty()) throw Error(ErrorCode::EmptyCorpus, "no clients for library " + agg.library);
    UtilisationDistribution d;
    d.library = agg.library;
    std::vector<double> pcts;
    for (const auto& r : agg.clients) {
        d.clients.push_back({r.client_id, r.distinct_count, r.utilisation_pct});
        pcts.push_back(r.utilisation_pct);
    }
    d.summary = five_number_summary(pcts);
    return d;
}

std::vector<UseRow> use_distribution(const CorpusAggregate& agg) {
    std::vector<UseRow> rows;
    for (const auto& [api, s] : agg.per_api)
        if (s.total_uses > 0) rows.push_back({api, s.client_count, s.total_uses});
    std::stable_sort(rows.begin(), rows.end(), [](const UseRow& a, const UseRow& b) {
        if (a.total_uses != b.total_uses) return a.total_uses > b.total_uses;
        if (a.client_count != b.client_count) return a.client_count > b.client_count;
        return a.api < b.api;
    });
    return rows;
}

CoverageBuckets coverage_buckets(const ApiCatalog& catalog) {
    CoverageBuckets b;
    b.library = catalog.library;
    for (const auto& [_, api] : catalog.apis) {
        const auto pct = api.coverage_pct();
        if (!pct)
            ++b.unmeasured;
        else if (*pct < 50.0)
            ++b.under_50;
        else if (*pct < 80.0)
            ++b.from_50_to_80;
        else
            ++b.over_80;
    }
    return b;
}

std::vector<SizeBucketRow> size_buckets(const ApiCatalog& catalog) {
    std::vector<SizeBucketRow> rows(2);
    rows[0].bucket = "eloc<=20";
    rows[1].bucket = "eloc>20";
    for (auto& r : rows) r.library = catalog.library;
    for (const auto& [_, api] : catalog.apis) {
        if (!api.annotated()) continue;
        const std::uint64_t eloc = *api.eloc;
        const std::uint64_t covered = api.covered_lines.value_or(0);
        SizeBucketRow& r = eloc <= kSmallApiEloc ? rows[0] : rows[1];
        ++r.api_count;
        r.eloc_sum += eloc;
        r.covered_sum += covered;
        if (eloc > 0 && covered == eloc) ++r.fully_covered_count;
    }
    for (auto& r : rows)
        if (r.eloc_sum > 0)
            r.combined_coverage_pct = 100.0 * static_cast<double>(r.covered_sum) / static_cast<double>(r.eloc_sum);
    return rows;
}

UsedNotTestedRow used_not_tested(const CorpusAggregate& agg, const ApiCatalog& catalog) {
    UsedNotTestedRow row;
    row.library = catalog.library;
    row.catalog_size = catalog.size();
    for (const auto& [name, api] : catalog.apis) {
        const auto it = agg.per_api.find(name);
        if (it == agg.per_api.end() || it->second.client_count == 0) continue;
        if (!api.annotated()) {
            ++row.used_unmeasured;
        } else if (api.covered_lines.value_or(0) == 0) {
            row.apis.push_back(name);
        }
    }
    row.api_count = row.apis.size();
    row.pct = row.catalog_size == 0 ? 0 : round_pct(100.0 * static_cast<double>(row.api_count) / row.catalog_size);
    return row;
}

PrecisionRecall precision_recall_from(const EvalCounts& c) {
    PrecisionRecall pr;
    if (c.tp + c.fp > 0) pr.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    if (c.tp + c.fn > 0) pr.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    return pr;
}

Evaluation precision_recall(const UseCounts& tool, const UseCounts& oracle) {
    const bool same_keys = tool.size() == oracle.size() &&
                           std::equal(tool.begin(), tool.end(), oracle.begin(),
                                      [](const auto& a, const auto& b) { return a.first == b.first; });
    if (!same_keys) throw Error(ErrorCode::CatalogMismatch, "tool and oracle counts cover different API sets");

    Evaluation e;
    auto o = oracle.begin();
    for (auto t = tool.begin(); t != tool.end(); ++t, ++o) {
        const std::uint64_t tc = t->second;
        const std::uint64_t oc = o->second;
        if (tc > 0 && oc > 0) ++e.distinct_counts.tp;
        if (tc > 0 && oc == 0) ++e.distinct_counts.fp;
        if (tc == 0 && oc > 0) ++e.distinct_counts.fn;
        e.total_counts.tp += std::min(tc, oc);
        e.total_counts.fp += tc > oc ? tc - oc : 0;
        e.total_counts.fn += oc > tc ? oc - tc : 0;
    }
    e.distinct = precision_recall_from(e.distinct_counts);
    e.total = precision_recall_from(e.total_counts);
    return e;
}

UseCounts densify(const UseCounts& counts, const std::set<std::string>& keys) {
    UseCounts out;
    for (const auto& k : keys) {
        const auto it = counts.find(k);
        out[k] = it == counts.end() ? 0 : it->second;
    }
    return out;
}

std::vector<EvalRow> evaluate_clients(const std::map<std::string, UseCounts>& tool,
                                      const std::map<std::string, UseCounts>& oracle, Diagnostics& diag) {
    std::vector<EvalRow> rows;
    for (const auto& [client, counts] : tool) {
        const auto it = oracle.find(client);
        if (it == oracle.end()) {
            diag.warn("ClientSetMismatch", "client has tool results but no oracle results", {{"client", client}});
            continue;
        }
        std::set<std::string> keys;
        for (const auto& [k, _] : counts) keys.insert(k);
        for (const auto& [k, _] : it->second) keys.insert(k);
        rows.push_back({client, precision_recall(densify(counts, keys), densify(it->second, keys))});
    }
    for (const auto& [client, _] : oracle)
        if (!tool.contains(client))
            diag.warn("ClientSetMismatch", "client has oracle results but no tool results", {{"client", client}});
    return rows;
}

json eval_rows_to_json(const std::vector<EvalRow>& rows) {
    json out = json::array();
    for (const auto& r : rows)
        out.push_back({{"client", r.client},
                       {"distinct", eval_side(r.eval.distinct_counts, r.eval.distinct)},
                       {"total", eval_side(r.eval.total_counts, r.eval.total)}});
    return out;
}

std::vector<std::string> emit_reports(const ReportBundle& bundle, const fs::path& out_dir) {
    std::vector<std::string> written;
    auto write = [&](const std::string& stem, const json& doc, const std::string& csv) {
        write_text_file(out_dir / (stem + ".json"), doc.dump(2) + "\n");
        write_text_file(out_dir / (stem + ".csv"), csv);
        written.push_back(stem + ".json");
        written.push_back(stem + ".csv");
    };
    auto doc = [](json rows) { return json{{"schema_version", kSchemaVersion}, {"rows", std::move(rows)}}; };

    std::vector<const LibraryResults*> with_usage, with_coverage, with_both;
    for (const auto& lib : bundle.libraries) {
        if (lib.aggregate) with_usage.push_back(&lib);
        if (has_coverage(lib.catalog)) with_coverage.push_back(&lib);
        if (lib.aggregate && has_coverage(lib.catalog)) with_both.push_back(&lib);
    }
    const bool any_usage = !with_usage.empty();

    if (any_usage) {
        // Unused APIs per library.
        std::vector<UnusedRow> unused;
        for (const auto* lib : with_usage) unused.push_back(unused_apis(*lib->aggregate, lib->catalog));
        sort_unused_rows(unused);
        json rows = json::array();
        Csv csv{"library", "total", "used", "unused", "unused_pct"};
        for (const auto& r : unused) {
            rows.push_back({{"library", r.library},
                            {"total", r.total},
                            {"used", r.used},
                            {"unused", r.unused},
                            {"unused_pct", r.unused_pct},
                            {"unused_apis", r.unused_apis}});
            csv.row({r.library, std::to_string(r.total), std::to_string(r.used), std::to_string(r.unused),
                     std::to_string(r.unused_pct)});
        }
        write("report_unused", doc(rows), csv.str());

        // Per-client utilisation (box-plot data).
        rows = json::array();
        Csv util_csv{"library", "client", "distinct", "utilisation_pct"};
        for (const auto* lib : with_usage) {
            json clients = json::array();
            json summary = nullptr;
            if (!lib->aggregate->clients.empty()) {
                const auto d = client_utilisation_distribution(*lib->aggregate);
                for (const auto& c : d.clients) {
                    clients.push_back(
                        {{"client", c.client}, {"distinct", c.distinct}, {"utilisation_pct", c.utilisation_pct}});
                    util_csv.row({lib->catalog.library, c.client, std::to_string(c.distinct),
                                  csv_number(c.utilisation_pct)});
                }
                summary = {{"min", d.summary.min},
                           {"q1", d.summary.q1},
                           {"median", d.summary.median},
                           {"q3", d.summary.q3},
                           {"max", d.summary.max}};
            }
            rows.push_back({{"library", lib->catalog.library},
                            {"catalog_size", lib->catalog.size()},
                            {"clients", std::move(clients)},
                            {"summary", std::move(summary)},
                            {"no_identified_uses", lib->aggregate->no_identified_uses}});
        }
        write("report_utilisation", doc(rows), util_csv.str());

        // Uses per API.
        rows = json::array();
        Csv use_csv{"library", "api", "clients", "uses"};
        for (const auto* lib : with_usage) {
            for (const auto& u : use_distribution(*lib->aggregate)) {
                rows.push_back(
                    {{"library", lib->catalog.library}, {"api", u.api}, {"clients", u.client_count}, {"uses", u.total_uses}});
                use_csv.row({lib->catalog.library, u.api, std::to_string(u.client_count), std::to_string(u.total_uses)});
            }
        }
        write("report_use_distribution", doc(rows), use_csv.str());
    }

    if (!with_coverage.empty()) {
        json rows = json::array();
        json unmeasured = json::object();
        Csv csv{"library", "bucket", "api_count"};
        for (const auto* lib : with_coverage) {
            const auto b = coverage_buckets(lib->catalog);
            const std::pair<const char*, std::size_t> parts[] = {
                {"under_50", b.under_50}, {"from_50_to_80", b.from_50_to_80}, {"over_80", b.over_80}};
            for (const auto& [name, count] : parts) {
                rows.push_back({{"library", b.library}, {"bucket", name}, {"api_count", count}});
                csv.row({b.library, name, std::to_string(count)});
            }
            unmeasured[b.library] = b.unmeasured;
            csv.row({b.library, "unmeasured", std::to_string(b.unmeasured)});
        }
        json d = doc(rows);
        d["bucket_bounds"] = {{"under_50", "[0,50)"}, {"from_50_to_80", "[50,80)"}, {"over_80", "[80,100]"}};
        d["unmeasured"] = std::move(unmeasured);
        write("report_cov_buckets", d, csv.str());

        rows = json::array();
        Csv size_csv{"library", "bucket", "api_count", "combined_coverage_pct", "fully_covered_count"};
        std::vector<SizeBucketRow> totals(2);
        totals[0].bucket = "eloc<=20";
        totals[1].bucket = "eloc>20";
        for (const auto* lib : with_coverage) {
            const auto tcov = lib->catalog.provenance.total_coverage_pct;
            const auto bucket_rows = size_buckets(lib->catalog);
            for (std::size_t i = 0; i < bucket_rows.size(); ++i) {
                const auto& r = bucket_rows[i];
                rows.push_back({{"library", r.library},
                                {"tcov_pct", opt(tcov)},
                                {"bucket", r.bucket},
                                {"api_count", r.api_count},
                                {"eloc_sum", r.eloc_sum},
                                {"covered_sum", r.covered_sum},
                                {"combined_coverage_pct", opt(r.combined_coverage_pct)},
                                {"fully_covered_count", r.fully_covered_count}});
                size_csv.row({r.library, r.bucket, std::to_string(r.api_count), opt_csv(r.combined_coverage_pct),
                              std::to_string(r.fully_covered_count)});
                totals[i].api_count += r.api_count;
                totals[i].fully_covered_count += r.fully_covered_count;
            }
        }
        json total_rows = json::array();
        for (const auto& t : totals) {
            std::optional<double> pct;
            if (t.api_count > 0) pct = 100.0 * static_cast<double>(t.fully_covered_count) / t.api_count;
            total_rows.push_back({{"bucket", t.bucket},
                                  {"api_count", t.api_count},
                                  {"fully_covered_count", t.fully_covered_count},
                                  {"fully_covered_pct", opt(pct)}});
        }
        d = doc(rows);
        d["fully_covered_totals"] = std::move(total_rows);
        write("report_size_buckets", d, size_csv.str());
    }

    if (!with_both.empty()) {
        std::vector<UsedNotTestedRow> table;
        for (const auto* lib : with_both) table.push_back(used_not_tested(*lib->aggregate, lib->catalog));
        std::stable_sort(table.begin(), table.end(), [](const auto& a, const auto& b) {
            if (a.pct != b.pct) return a.pct > b.pct;
            return a.library < b.library;
        });
        json rows = json::array();
        for (const auto& r : table)
            rows.push_back({{"library", r.library},
                            {"catalog_size", r.catalog_size},
                            {"api_count", r.api_count},
                            {"pct", r.pct},
                            {"apis", r.apis},
                            {"used_unmeasured", r.used_unmeasured}});

        // Per-API coverage against the share of clients using it.
        Csv csv{"library", "api", "coverage_pct", "client_pct", "clients"};
        for (const auto* lib : with_both) {
            struct Point {
                std::string api;
                std::optional<double> cov;
                double client_pct;
                std::uint64_t clients;
            };
            std::vector<Point> points;
            const auto n_clients = lib->aggregate->clients.size();
            for (const auto& [name, api] : lib->catalog.apis) {
                const auto it = lib->aggregate->per_api.find(name);
                const std::uint64_t c = it == lib->aggregate->per_api.end() ? 0 : it->second.client_count;
                points.push_back({name, api.coverage_pct(),
                                  n_clients == 0 ? 0.0 : 100.0 * static_cast<double>(c) / n_clients, c});
            }
            std::stable_sort(points.begin(), points.end(), [](const Point& a, const Point& b) {
                const double ca = a.cov.value_or(-1), cb = b.cov.value_or(-1);
                if (ca != cb) return ca < cb;
                return a.api < b.api;
            });
            for (const auto& p : points)
                csv.row({lib->catalog.library, p.api, opt_csv(p.cov), csv_number(p.client_pct), std::to_string(p.clients)});
        }
        write("report_used_not_tested", doc(rows), csv.str());
    }

    const bool any_improvement = std::any_of(bundle.libraries.begin(), bundle.libraries.end(),
                                             [](const LibraryResults& l) { return l.improvement.has_value(); });
    if (any_improvement) {
        json rows = json::array();
        Csv csv{"library", "extra_total_coverage_pct", "newly_covered", "improved", "new_api_lines_covered"};
        for (const auto& lib : bundle.libraries) {
            if (!lib.improvement) continue;
            json row = improvement_to_json(lib.catalog.library, *lib.improvement);
            row.erase("schema_version");
            rows.push_back(std::move(row));
            csv.row({lib.catalog.library, csv_number(lib.improvement->extra_total_coverage_pct),
                     std::to_string(lib.improvement->newly_covered_apis.size()),
                     std::to_string(lib.improvement->improved_apis.size()),
                     std::to_string(lib.improvement->new_api_lines_covered)});
        }
        write("report_improvement", doc(rows), csv.str());
    }

    if (bundle.eval) {
        Csv csv{"client", "P_D", "R_D", "P_T", "R_T"};
        for (const auto& r : *bundle.eval) {
            auto f = [](const std::optional<double>& v) { return v ? csv_number(round2(*v)) : std::string(); };
            csv.row({r.client, f(r.eval.distinct.precision), f(r.eval.distinct.recall), f(r.eval.total.precision),
                     f(r.eval.total.recall)});
        }
        write("report_eval", doc(eval_rows_to_json(*bundle.eval)), csv.str());
    }

    std::sort(written.begin(), written.end());
    return written;
}

}  // namespace apiprobe
