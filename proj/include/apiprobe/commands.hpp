#pragma once

#include "apiprobe/config.hpp"
#include "apiprobe/coverage.hpp"
#include "apiprobe/diagnostics.hpp"
#include "apiprobe/metrics.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace apiprobe {

// Artifact layout under RunConfig::output_dir.
struct ArtifactPaths {
    std::filesystem::path root;

    std::filesystem::path library_dir(const std::string& lib) const { return root / lib; }
    std::filesystem::path catalog(const std::string& lib) const { return root / lib / "catalog.json"; }
    std::filesystem::path annotated_catalog(const std::string& lib) const {
        return root / lib / "catalog_annotated.json";
    }
    std::filesystem::path client_report(const std::string& lib, const std::string& client) const;
    std::filesystem::path client_prep(const std::string& lib, const std::string& client) const;
    std::filesystem::path aggregate(const std::string& lib) const { return root / lib / "aggregate.json"; }
    std::filesystem::path improvement(const std::string& lib) const { return root / lib / "improvement.json"; }
    std::filesystem::path eval() const { return root / "eval.json"; }
    std::filesystem::path reports() const { return root / "reports"; }
};

// Client ids such as "owner/repo" become "owner__repo" in file names.
std::string client_file_stem(const std::string& client_id);

// Each command throws apiprobe::Error on a fatal problem; warnings and skips
// go to diag only. An empty `library` selects every configured library.

std::vector<ApiCatalog> cmd_catalog(const RunConfig& config, const std::string& library, Diagnostics& diag,
                                    std::ostream& out);

std::vector<CorpusAggregate> cmd_scan(const RunConfig& config, const std::string& library, Diagnostics& diag,
                                      std::ostream& out);

struct CoverageArgs {
    std::string library;
    std::vector<std::filesystem::path> tracefiles;
    bool median = false;
    std::optional<std::filesystem::path> baseline;
    std::optional<std::filesystem::path> augmented;
};

struct CoverageResult {
    ApiCatalog annotated;
    std::optional<std::size_t> median_index;
    std::optional<ImprovementReport> improvement;
};

CoverageResult cmd_coverage(const RunConfig& config, const CoverageArgs& args, Diagnostics& diag,
                            std::ostream& out);

// Writes the report bundle into output_dir/reports and returns the file names.
std::vector<std::string> cmd_report(const RunConfig& config, const std::string& library, Diagnostics& diag,
                                    std::ostream& out);

// `tool` is either {client: {api: count}} or a scan aggregate; `oracle` is
// {client: {api: count}}.
std::vector<EvalRow> cmd_eval(const RunConfig& config, const std::filesystem::path& tool,
                              const std::filesystem::path& oracle, Diagnostics& diag, std::ostream& out);

std::map<std::string, UseCounts> load_use_counts(const std::filesystem::path& path);
std::vector<EvalRow> eval_rows_from_json(const nlohmann::json& j);

}  // namespace apiprobe
