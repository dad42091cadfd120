#include "apiprobe/commands.hpp"
#include "apiprobe/error.hpp"
#include "apiprobe/io.hpp"

#include <cstdio>
#include <ostream>

namespace apiprobe {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<const LibrarySpec*> select_libraries(const RunConfig& config, const std::string& library) {
    std::vector<const LibrarySpec*> out;
    if (!library.empty()) {
        out.push_back(&config.library(library));
        return out;
    }
    for (const auto& l : config.libraries) out.push_back(&l);
    if (out.empty()) throw Error(ErrorCode::InvalidConfig, "configuration lists no libraries");
    return out;
}

json load_json(const fs::path& path) {
    try {
        return json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::InvalidConfig, path.string() + ": " + e.what());
    }
}

void write_json(const fs::path& path, const json& j) { write_text_file(path, j.dump(2) + "\n"); }

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

// Local checkout for a db entry: the source itself when it is a directory,
// otherwise clients_root/<client>.
std::optional<fs::path> locate_checkout(const RunConfig& config, const DependencyEntry& e) {
    std::error_code ec;
    if (!e.source.empty() && fs::is_directory(e.source, ec)) return fs::path(e.source);
    if (!config.clients_root.empty()) {
        const auto p = config.clients_root / e.client;
        if (fs::is_directory(p, ec)) return p;
    }
    return std::nullopt;
}

UseCounts counts_from_json(const json& j, const std::string& client) {
    if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "use counts for " + client + " must be an object");
    UseCounts out;
    for (const auto& [api, v] : j.items()) {
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
            throw Error(ErrorCode::InvalidConfig, "use count for " + client + "/" + api + " is not a count");
        out[api] = v.get<std::uint64_t>();
    }
    return out;
}

EvalCounts counts_from(const json& j, EvalMode mode) {
    EvalCounts c;
    c.mode = mode;
    c.tp = j.at("tp").get<std::uint64_t>();
    c.fp = j.at("fp").get<std::uint64_t>();
    c.fn = j.at("fn").get<std::uint64_t>();
    return c;
}

}  // namespace

std::string client_file_stem(const std::string& client_id) {
    std::string out;
    for (char c : client_id) {
        if (c == '/' || c == '\\')
            out += "__";
        else if (c == ':')
            out += '_';
        else
            out += c;
    }
    return out;
}

fs::path ArtifactPaths::client_report(const std::string& lib, const std::string& client) const {
    return root / lib / "clients" / (client_file_stem(client) + ".json");
}

fs::path ArtifactPaths::client_prep(const std::string& lib, const std::string& client) const {
    return root / lib / "clients" / (client_file_stem(client) + ".prep.json");
}

std::vector<ApiCatalog> cmd_catalog(const RunConfig& config, const std::string& library, Diagnostics& diag,
                                    std::ostream& out) {
    const ArtifactPaths paths{config.output_dir};
    std::vector<ApiCatalog> catalogs;
    for (const auto* spec : select_libraries(config, library)) {
        ApiCatalog catalog;
        try {
            catalog = build_catalog(*spec, diag);
        } catch (const Error& e) {
            throw Error(e.code(), "library " + spec->name + ": " + e.detail());
        }
        // Keep the old timestamp when nothing changed so reruns are byte-identical.
        if (fs::exists(paths.catalog(spec->name))) {
            try {
                auto previous = load_catalog(paths.catalog(spec->name));
                if (previous.apis == catalog.apis && previous.provenance == catalog.provenance)
                    catalog.created_at = previous.created_at;
            } catch (const Error& e) {
                diag.warn("stale_catalog", e.detail(), {{"library", spec->name}});
            }
        }
        save_catalog(catalog, paths.catalog(spec->name));
        out << spec->name << ": " << catalog.size() << " APIs -> " << paths.catalog(spec->name).string() << "\n";
        catalogs.push_back(std::move(catalog));
    }
    return catalogs;
}

std::vector<CorpusAggregate> cmd_scan(const RunConfig& config, const std::string& library, Diagnostics& diag,
                                      std::ostream& out) {
    const ArtifactPaths paths{config.output_dir};
    const auto libs = select_libraries(config, library);
    if (config.dependency_db.empty()) throw Error(ErrorCode::InvalidConfig, "no dependency_db configured");
    const auto db = load_dependency_db(config.dependency_db);

    std::vector<CorpusAggregate> aggregates;
    for (const auto* spec : libs) {
        const auto catalog = load_catalog(paths.catalog(spec->name));
        const auto inventory = build_library_inventory(spec->source_roots, diag);

        std::vector<UsageReport> reports;
        std::vector<std::string> skipped;
        for (const auto& entry : db) {
            if (entry.library != spec->name) continue;
            const auto checkout = locate_checkout(config, entry);
            if (!checkout) {
                diag.warn("client_skipped", "no local checkout",
                          {{"client", entry.client}, {"library", spec->name}, {"source", entry.source}});
                skipped.push_back(entry.client);
                continue;
            }
            const auto rec = prepare_client(entry.client, *checkout, *spec, inventory, config.overlap, diag);
            write_json(paths.client_prep(spec->name, entry.client), client_record_to_json(rec));
            auto report = scan_client(rec, catalog, config.scan_options(), diag);
            write_json(paths.client_report(spec->name, entry.client), usage_report_to_json(report));
            reports.push_back(std::move(report));
        }

        auto agg = aggregate_reports(std::move(reports), catalog);
        std::sort(skipped.begin(), skipped.end());
        agg.skipped_clients = std::move(skipped);
        write_json(paths.aggregate(spec->name), aggregate_to_json(agg));
        out << spec->name << ": " << agg.clients.size() << " clients scanned, " << agg.skipped_clients.size()
            << " skipped, " << agg.no_identified_uses.size() << " with no identified uses\n";
        aggregates.push_back(std::move(agg));
    }
    return aggregates;
}

CoverageResult cmd_coverage(const RunConfig& config, const CoverageArgs& args, Diagnostics& diag,
                            std::ostream& out) {
    const ArtifactPaths paths{config.output_dir};
    if (args.library.empty()) throw Error(ErrorCode::InvalidConfig, "coverage needs a library");
    config.library(args.library);
    if (args.baseline.has_value() != args.augmented.has_value())
        throw Error(ErrorCode::InvalidConfig, "--baseline and --augmented must be given together");
    if (args.tracefiles.empty() && !args.baseline)
        throw Error(ErrorCode::MissingInputs, "coverage needs at least one tracefile");

    const auto catalog = load_catalog(paths.catalog(args.library));
    CoverageResult result;

    // The library's own suite: explicit tracefiles, else the baseline.
    std::vector<Tracefile> runs;
    std::vector<fs::path> sources = args.tracefiles.empty() ? std::vector<fs::path>{*args.baseline} : args.tracefiles;
    for (const auto& p : sources) runs.push_back(load_tracefile(p, diag));

    Tracefile chosen;
    std::string source_desc;
    if (args.median) {
        const auto idx = median_run_index(runs);
        result.median_index = idx;
        chosen = runs[idx];
        source_desc = sources[idx].string();
        out << args.library << ": median run " << idx << " of " << runs.size() << " (" << source_desc << ", "
            << fixed(overall_coverage_pct(chosen, config.coverage_excludes), 1) << "% lines)\n";
    } else if (runs.size() == 1) {
        chosen = std::move(runs.front());
        source_desc = sources.front().string();
    } else {
        chosen = merge_tracefiles(runs);
        for (std::size_t i = 0; i < sources.size(); ++i) source_desc += (i ? "," : "") + sources[i].string();
    }

    result.annotated = annotate_catalog_coverage(catalog, chosen, diag);
    result.annotated.provenance.coverage_source = source_desc;
    result.annotated.provenance.total_coverage_pct = overall_coverage_pct(chosen, config.coverage_excludes);
    save_catalog(result.annotated, paths.annotated_catalog(args.library));

    std::size_t measured = 0;
    for (const auto& [_, api] : result.annotated.apis) measured += api.annotated() ? 1 : 0;
    out << args.library << ": " << measured << " of " << result.annotated.size() << " APIs measured, TCov "
        << fixed(*result.annotated.provenance.total_coverage_pct, 1) << "%\n";

    if (args.baseline) {
        const auto base = load_tracefile(*args.baseline, diag);
        const auto aug = load_tracefile(*args.augmented, diag);
        result.improvement = coverage_delta(base, aug, catalog, config.coverage_excludes);
        write_json(paths.improvement(args.library), improvement_to_json(args.library, *result.improvement));
        out << args.library << ": +" << fixed(result.improvement->extra_total_coverage_pct, 1) << "% TCov, "
            << result.improvement->newly_covered_apis.size() << " newly covered, "
            << result.improvement->improved_apis.size() << " improved\n";
    }
    return result;
}

std::vector<std::string> cmd_report(const RunConfig& config, const std::string& library, Diagnostics& diag,
                                    std::ostream& out) {
    const ArtifactPaths paths{config.output_dir};
    ReportBundle bundle;
    for (const auto* spec : select_libraries(config, library)) {
        const auto& name = spec->name;
        if (!fs::exists(paths.annotated_catalog(name)))
            throw Error(ErrorCode::MissingInputs, "library " + name + ": coverage stage output missing (" +
                                                      paths.annotated_catalog(name).string() + ")");
        if (!fs::exists(paths.aggregate(name)))
            throw Error(ErrorCode::MissingInputs,
                        "library " + name + ": scan stage output missing (" + paths.aggregate(name).string() + ")");

        LibraryResults lib;
        lib.catalog = load_catalog(paths.annotated_catalog(name));
        const auto agg_json = load_json(paths.aggregate(name));
        lib.aggregate = aggregate_from_json(agg_json);
        if (fs::exists(paths.improvement(name))) {
            const auto j = load_json(paths.improvement(name));
            check_schema_version(j, "improvement report");
            ImprovementReport r;
            r.extra_total_coverage_pct = j.at("extra_total_coverage_pct").get<double>();
            r.newly_covered_apis = j.at("newly_covered_apis").get<std::vector<std::string>>();
            r.improved_apis = j.at("improved_apis").get<std::vector<std::string>>();
            r.new_api_lines_covered = j.value("new_api_lines_covered", std::uint64_t{0});
            r.baseline_total_pct = j.value("baseline_total_pct", 0.0);
            r.augmented_total_pct = j.value("augmented_total_pct", 0.0);
            r.baseline_api_line_pct = j.value("baseline_api_line_pct", 0.0);
            r.augmented_api_line_pct = j.value("augmented_api_line_pct", 0.0);
            lib.improvement = std::move(r);
        }
        bundle.libraries.push_back(std::move(lib));
    }
    if (fs::exists(paths.eval())) bundle.eval = eval_rows_from_json(load_json(paths.eval()));

    const auto files = emit_reports(bundle, paths.reports());
    diag.info("reports_written", "report bundle written",
              {{"dir", paths.reports().string()}, {"files", std::to_string(files.size())}});
    out << files.size() << " report files -> " << paths.reports().string() << "\n";
    return files;
}

std::map<std::string, UseCounts> load_use_counts(const fs::path& path) {
    if (!fs::exists(path)) throw Error(ErrorCode::MissingInputs, "no use counts at " + path.string());
    const auto j = load_json(path);
    std::map<std::string, UseCounts> out;
    if (j.is_object() && j.contains("schema_version") && j.contains("clients")) {
        for (const auto& r : aggregate_from_json(j).clients) out[r.client_id] = r.uses;
        return out;
    }
    if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, path.string() + ": expected {client: {api: count}}");
    for (const auto& [client, counts] : j.items()) out[client] = counts_from_json(counts, client);
    return out;
}

std::vector<EvalRow> eval_rows_from_json(const json& j) {
    check_schema_version(j, "evaluation");
    std::vector<EvalRow> rows;
    try {
        for (const auto& r : j.at("rows")) {
            EvalRow row;
            row.client = r.at("client").get<std::string>();
            row.eval.distinct_counts = counts_from(r.at("distinct"), EvalMode::Distinct);
            row.eval.total_counts = counts_from(r.at("total"), EvalMode::Total);
            row.eval.distinct = precision_recall_from(row.eval.distinct_counts);
            row.eval.total = precision_recall_from(row.eval.total_counts);
            rows.push_back(std::move(row));
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, std::string("malformed evaluation: ") + e.what());
    }
    return rows;
}

std::vector<EvalRow> cmd_eval(const RunConfig& config, const fs::path& tool, const fs::path& oracle,
                              Diagnostics& diag, std::ostream& out) {
    const ArtifactPaths paths{config.output_dir};
    const auto rows = evaluate_clients(load_use_counts(tool), load_use_counts(oracle), diag);
    write_json(paths.eval(), {{"schema_version", kSchemaVersion}, {"rows", eval_rows_to_json(rows)}});

    auto cell = [](const std::optional<double>& v) { return v ? fixed(round2(*v), 2) : std::string("-"); };
    out << "client\tP_D\tR_D\tP_T\tR_T\n";
    for (const auto& r : rows)
        out << r.client << "\t" << cell(r.eval.distinct.precision) << "\t" << cell(r.eval.distinct.recall) << "\t"
            << cell(r.eval.total.precision) << "\t" << cell(r.eval.total.recall) << "\n";
    return rows;
}

}  // namespace apiprobe
