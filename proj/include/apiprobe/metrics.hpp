#pragma once

#include "apiprobe/catalog.hpp"
#include "apiprobe/coverage.hpp"
#include "apiprobe/diagnostics.hpp"
#include "apiprobe/usage_scan.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace apiprobe {

// Integer percentage, halves rounded away from zero.
int round_pct(double pct);
// Two-decimal rounding used for precision/recall tables.
double round2(double x);

struct UnusedRow {
    std::string library;
    std::size_t total = 0;
    std::size_t used = 0;
    std::size_t unused = 0;
    int unused_pct = 0;
    std::vector<std::string> unused_apis;
};

UnusedRow unused_apis(const CorpusAggregate& agg, const ApiCatalog& catalog);
// Descending unused_pct, ties by library name.
void sort_unused_rows(std::vector<UnusedRow>& rows);

struct FiveNumberSummary {
    double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
};

// Quantile with linear interpolation between order statistics.
double quantile(std::vector<double> values, double q);
FiveNumberSummary five_number_summary(const std::vector<double>& values);

struct ClientUtilisation {
    std::string client;
    std::size_t distinct = 0;
    double utilisation_pct = 0;
};

struct UtilisationDistribution {
    std::string library;
    std::vector<ClientUtilisation> clients;
    FiveNumberSummary summary;
};

// Throws Error{EmptyCorpus} when the aggregate has no clients.
UtilisationDistribution client_utilisation_distribution(const CorpusAggregate& agg);

struct UseRow {
    std::string api;
    std::uint64_t client_count = 0;
    std::uint64_t total_uses = 0;
};

// Used APIs only, most used first (ties: more clients, then name).
std::vector<UseRow> use_distribution(const CorpusAggregate& agg);

struct CoverageBuckets {
    std::string library;
    std::size_t under_50 = 0;       // [0, 50)
    std::size_t from_50_to_80 = 0;  // [50, 80)
    std::size_t over_80 = 0;        // [80, 100]
    std::size_t unmeasured = 0;     // no instrumented lines in the entry function
};

CoverageBuckets coverage_buckets(const ApiCatalog& catalog);

struct SizeBucketRow {
    std::string library;
    std::string bucket;  // "eloc<=20" or "eloc>20"
    std::size_t api_count = 0;
    std::uint64_t eloc_sum = 0;
    std::uint64_t covered_sum = 0;
    std::optional<double> combined_coverage_pct;
    std::size_t fully_covered_count = 0;
};

inline constexpr std::uint64_t kSmallApiEloc = 20;

// Two rows (small, large) over annotated APIs.
std::vector<SizeBucketRow> size_buckets(const ApiCatalog& catalog);

struct UsedNotTestedRow {
    std::string library;
    std::size_t catalog_size = 0;
    std::size_t api_count = 0;  // used by >= 1 client, measured, zero lines covered
    int pct = 0;
    std::vector<std::string> apis;
    std::size_t used_unmeasured = 0;  // used but absent from coverage data
};

UsedNotTestedRow used_not_tested(const CorpusAggregate& agg, const ApiCatalog& catalog);

enum class EvalMode { Distinct, Total };

struct EvalCounts {
    EvalMode mode = EvalMode::Distinct;
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
};

struct PrecisionRecall {
    std::optional<double> precision;
    std::optional<double> recall;
};

PrecisionRecall precision_recall_from(const EvalCounts& c);

struct Evaluation {
    EvalCounts distinct_counts{EvalMode::Distinct};
    PrecisionRecall distinct;
    EvalCounts total_counts{EvalMode::Total};
    PrecisionRecall total;
};

using UseCounts = std::map<std::string, std::uint64_t>;

// Both maps must be keyed on the same API set; throws Error{CatalogMismatch}.
Evaluation precision_recall(const UseCounts& tool, const UseCounts& oracle);

// Fills absent keys with zero so both maps share a key set.
UseCounts densify(const UseCounts& counts, const std::set<std::string>& keys);

struct EvalRow {
    std::string client;
    Evaluation eval;
};

// Per-client evaluation over the clients present in both inputs; clients in
// only one input produce a "ClientSetMismatch" warning.
std::vector<EvalRow> evaluate_clients(const std::map<std::string, UseCounts>& tool,
                                      const std::map<std::string, UseCounts>& oracle,
                                      Diagnostics& diag = Diagnostics::discard());

// Everything one library contributes to a report bundle.
struct LibraryResults {
    ApiCatalog catalog;  // annotated when coverage was ingested
    std::optional<CorpusAggregate> aggregate;
    std::optional<ImprovementReport> improvement;
};

struct ReportBundle {
    std::vector<LibraryResults> libraries;
    std::optional<std::vector<EvalRow>> eval;
};

// Writes report_*.json and report_*.csv into out_dir and returns the file
// names written, sorted. Reports whose inputs are absent are not written.
std::vector<std::string> emit_reports(const ReportBundle& bundle, const std::filesystem::path& out_dir);

nlohmann::json eval_rows_to_json(const std::vector<EvalRow>& rows);

}  // namespace apiprobe
