// apiprobe: library API catalog, client usage and test-coverage analysis.

#include "apiprobe/commands.hpp"
#include "apiprobe/error.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <memory>

namespace fs = std::filesystem;
using namespace apiprobe;

namespace {

struct GlobalOptions {
    std::string config;
    std::string output;
    std::size_t jobs = 0;
    bool paper_faithful = false;
    bool loose_call_match = false;
    std::optional<double> overlap;
    std::optional<std::size_t> min_lib_files;
    std::string log;
};

RunConfig resolve_config(const GlobalOptions& g, bool config_required) {
    RunConfig cfg;
    if (!g.config.empty())
        cfg = load_config(g.config);
    else if (config_required)
        throw Error(ErrorCode::InvalidConfig, "--config is required for this command");

    if (!g.output.empty()) cfg.output_dir = fs::absolute(g.output);
    if (g.jobs > 0) cfg.jobs = g.jobs;
    if (g.paper_faithful) cfg.paper_faithful = true;
    if (g.loose_call_match) cfg.loose_call_match = true;
    if (g.overlap) cfg.overlap.threshold = *g.overlap;
    if (g.min_lib_files) cfg.overlap.min_lib_files = *g.min_lib_files;
    validate_config(cfg);
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Measure which library APIs clients use and how well the library tests cover them"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOptions g;
    app.add_option("--config", g.config, "Run configuration (JSON)");
    app.add_option("--output", g.output, "Output directory (overrides the configuration)");
    app.add_option("--jobs", g.jobs, "Worker threads for scanning")->check(CLI::PositiveNumber);
    app.add_flag("--paper-faithful", g.paper_faithful, "Line-based comment and string filtering");
    app.add_flag("--loose-call-match", g.loose_call_match, "Allow any whitespace between a name and '('");
    app.add_option("--overlap-threshold", g.overlap, "Vendored-directory name overlap ratio")
        ->check(CLI::Range(0.0, 1.0));
    app.add_option("--min-lib-files", g.min_lib_files, "Minimum files in a library directory for overlap matching")
        ->check(CLI::PositiveNumber);
    app.add_option("--log", g.log, "Write diagnostics as JSON lines to this file ('-' for stderr)");

    std::string library;
    auto* catalog_cmd = app.add_subcommand("catalog", "Build the API catalog of each library");
    catalog_cmd->add_option("--library", library, "Only this library");

    auto* scan_cmd = app.add_subcommand("scan", "Prepare and scan client checkouts");
    scan_cmd->add_option("--library", library, "Only this library");

    CoverageArgs cov;
    std::string baseline, augmented;
    auto* coverage_cmd = app.add_subcommand("coverage", "Attach LCOV coverage to a catalog");
    coverage_cmd->add_option("--library", cov.library, "Library to annotate")->required();
    coverage_cmd->add_option("tracefiles", cov.tracefiles, "LCOV tracefiles");
    coverage_cmd->add_flag("--median", cov.median, "Use the run with median overall line coverage");
    coverage_cmd->add_option("--baseline", baseline, "Tracefile of the library's own test suite");
    coverage_cmd->add_option("--augmented", augmented, "Tracefile of library plus client test suites");

    auto* report_cmd = app.add_subcommand("report", "Write the report bundle");
    report_cmd->add_option("--library", library, "Only this library");

    std::string tool, oracle;
    auto* eval_cmd = app.add_subcommand("eval", "Precision and recall against an oracle");
    eval_cmd->add_option("--tool", tool, "Tool counts {client: {api: count}} or aggregate.json")->required();
    eval_cmd->add_option("--oracle", oracle, "Oracle counts {client: {api: count}}")->required();

    CLI11_PARSE(app, argc, argv);

    std::unique_ptr<std::ofstream> log_file;
    std::unique_ptr<Diagnostics> diag;
    if (g.log == "-") {
        diag = std::make_unique<Diagnostics>(std::cerr);
    } else if (!g.log.empty()) {
        log_file = std::make_unique<std::ofstream>(g.log, std::ios::app);
        if (!*log_file) {
            std::cerr << "error: cannot open log file " << g.log << "\n";
            return 1;
        }
        diag = std::make_unique<Diagnostics>(*log_file);
    } else {
        diag = std::make_unique<Diagnostics>();
    }

    try {
        if (catalog_cmd->parsed()) {
            cmd_catalog(resolve_config(g, true), library, *diag, std::cout);
        } else if (scan_cmd->parsed()) {
            cmd_scan(resolve_config(g, true), library, *diag, std::cout);
        } else if (coverage_cmd->parsed()) {
            if (!baseline.empty()) cov.baseline = baseline;
            if (!augmented.empty()) cov.augmented = augmented;
            cmd_coverage(resolve_config(g, true), cov, *diag, std::cout);
        } else if (report_cmd->parsed()) {
            cmd_report(resolve_config(g, true), library, *diag, std::cout);
        } else if (eval_cmd->parsed()) {
            if (g.config.empty() && g.output.empty())
                throw Error(ErrorCode::InvalidConfig, "eval needs --config or --output");
            cmd_eval(resolve_config(g, false), tool, oracle, *diag, std::cout);
        }
    } catch (const Error& e) {
        diag->error(std::string(to_string(e.code())), e.detail());
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        diag->error("Internal", e.what());
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    if (g.log.empty()) {
        std::size_t warnings = 0;
        for (const auto& d : diag->events()) warnings += d.severity == Severity::Warning ? 1 : 0;
        if (warnings > 0) std::cerr << warnings << " warning(s); rerun with --log for details\n";
    }
    return 0;
}
