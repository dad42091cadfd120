#pragma once

#include "apiprobe/catalog.hpp"
#include "apiprobe/diagnostics.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace apiprobe {

struct FunctionRecord {
    std::string name;
    std::uint32_t start = 0;
    std::optional<std::uint32_t> end;  // present only when the tracefile states it

    bool operator==(const FunctionRecord&) const = default;
};

struct FileCoverage {
    std::string path;
    std::vector<FunctionRecord> functions;  // sorted by start line
    std::map<std::uint32_t, std::uint64_t> line_counts;

    bool operator==(const FileCoverage&) const = default;
};

// Parsed LCOV data keyed by source path.
struct Tracefile {
    std::map<std::string, FileCoverage> files;

    std::uint64_t total_lines() const;
    std::uint64_t covered_lines() const;
    bool empty() const { return files.empty(); }

    bool operator==(const Tracefile&) const = default;
};

struct Extent {
    std::uint32_t start = 0;
    std::uint32_t end = 0;

    bool contains(std::uint32_t line) const { return line >= start && line <= end; }
    bool operator==(const Extent&) const = default;
};

// Parses LCOV tracefile text. Throws Error{MalformedDirective} naming the
// offending line; unknown directives are skipped with a diagnostic.
Tracefile parse_tracefile(std::string_view content, Diagnostics& diag = Diagnostics::discard());
Tracefile load_tracefile(const std::filesystem::path& path, Diagnostics& diag = Diagnostics::discard());

std::map<std::string, Extent> function_extents(const FileCoverage& file);
std::map<std::string, std::map<std::string, Extent>> function_extents(const Tracefile& tf);

// Entry function of `name` within a tracefile. When several files define the
// function, the one with the most instrumented lines wins (ties: smaller path).
struct EntryLocation {
    std::string file;
    Extent extent;
    std::uint64_t eloc = 0;
    std::uint64_t covered = 0;
    std::size_t candidates = 0;
};
std::optional<EntryLocation> locate_entry_function(const Tracefile& tf, const std::string& name);

// Copy of the catalog with every API found in the tracefile annotated.
ApiCatalog annotate_catalog_coverage(const ApiCatalog& catalog, const Tracefile& tf,
                                     Diagnostics& diag = Diagnostics::discard());

// Sums counts per line; functions unioned by name, stated extents preferred.
Tracefile merge_tracefiles(std::span<const Tracefile> runs);

// Overall line coverage in percent over all files not under an excluded
// prefix. 0 when there are no instrumented lines.
double overall_coverage_pct(const Tracefile& tf, const std::vector<std::string>& exclude_prefixes = {});

// Index of the run with median overall coverage (lower median for even n).
std::size_t median_run_index(std::span<const Tracefile> runs);
Tracefile select_median_run(std::span<const Tracefile> runs);

struct ImprovementReport {
    double extra_total_coverage_pct = 0.0;
    std::vector<std::string> newly_covered_apis;
    std::vector<std::string> improved_apis;
    std::uint64_t new_api_lines_covered = 0;

    double baseline_total_pct = 0.0;
    double augmented_total_pct = 0.0;
    double baseline_api_line_pct = 0.0;
    double augmented_api_line_pct = 0.0;
};

// Throws Error{FileSetMismatch} when both tracefiles are non-empty and share
// no source file.
ImprovementReport coverage_delta(const Tracefile& baseline, const Tracefile& augmented, const ApiCatalog& catalog,
                                 const std::vector<std::string>& exclude_prefixes = {});

nlohmann::json improvement_to_json(const std::string& library, const ImprovementReport& r);

}  // namespace apiprobe
