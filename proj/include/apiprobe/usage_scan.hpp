#pragma once

#include "apiprobe/catalog.hpp"
#include "apiprobe/client_prep.hpp"
#include "apiprobe/diagnostics.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace apiprobe {

struct ScanOptions {
    // Line-discarding comment filter and line-level string exclusion, as in
    // the original grep pipeline. Counts at most one use per API per line.
    bool paper_faithful = false;
    // Allow any run of whitespace (newlines included) between name and '('.
    bool loose_call_match = false;
    std::uint64_t file_cap_bytes = 16ull * 1024 * 1024;
    std::size_t jobs = 1;
    bool collect_sites = false;
};

struct UseSite {
    std::string file;
    std::uint32_t line = 0;
    std::string api;

    auto operator<=>(const UseSite&) const = default;
};

struct UsageReport {
    std::string client_id;
    std::string library;
    std::map<std::string, std::uint64_t> uses;  // only APIs with a positive count
    std::size_t distinct_count = 0;
    double utilisation_pct = 0.0;
    std::size_t files_scanned = 0;
    std::vector<UseSite> sites;  // filled when ScanOptions::collect_sites

    std::uint64_t total_uses() const;
};

struct ApiCorpusStats {
    std::uint64_t client_count = 0;
    std::uint64_t total_uses = 0;

    bool operator==(const ApiCorpusStats&) const = default;
};

struct CorpusAggregate {
    std::string library;
    std::size_t catalog_size = 0;
    std::map<std::string, ApiCorpusStats> per_api;  // every catalog API
    std::vector<UsageReport> clients;               // sorted by client id
    std::vector<std::string> no_identified_uses;
    std::vector<std::string> skipped_clients;
};

// Blanks // and /* */ comments, keeping newlines and the byte columns of all
// other text. Comment markers inside literals are left alone.
std::string strip_comments(std::string_view source, Diagnostics& diag = Diagnostics::discard());

// Lines removed by the grep-style comment filter are replaced by empty lines.
std::string strip_comment_lines_paper(std::string_view source);

// Multi-pattern call-site matcher over a fixed API set.
class ApiMatcher {
public:
    explicit ApiMatcher(const std::vector<std::string>& apis);
    explicit ApiMatcher(const ApiCatalog& catalog);
    // The index holds views into names_.
    ApiMatcher(const ApiMatcher&) = delete;
    ApiMatcher& operator=(const ApiMatcher&) = delete;

    struct Hit {
        std::uint32_t line;
        std::size_t api;  // index into names()
    };

    // `code` must already have comments and literal contents blanked.
    std::vector<Hit> find_calls(std::string_view code, bool loose) const;
    // Grep-pipeline matching over text whose comment lines were dropped.
    std::vector<Hit> find_calls_paper(std::string_view text, bool loose) const;

    const std::vector<std::string>& names() const { return names_; }

private:
    std::vector<std::string> names_;
    std::unordered_map<std::string_view, std::size_t> index_;
};

// Line numbers of call-shaped uses of `api` in comment-stripped source,
// excluding occurrences inside string and character literals.
std::vector<std::uint32_t> find_api_uses(std::string_view source, std::string_view api, bool loose = false);

struct FileUses {
    std::map<std::string, std::uint64_t> counts;
    std::vector<UseSite> sites;
};

// Full per-file pipeline on raw source text.
FileUses scan_source(std::string_view source, const std::string& file, const ApiMatcher& matcher,
                     const ScanOptions& options, Diagnostics& diag = Diagnostics::discard());

UsageReport scan_client(const ClientRecord& rec, const ApiCatalog& catalog, const ScanOptions& options = {},
                        Diagnostics& diag = Diagnostics::discard());

// Aggregates already computed client reports.
CorpusAggregate aggregate_reports(std::vector<UsageReport> reports, const ApiCatalog& catalog);

CorpusAggregate corpus_scan(const std::vector<ClientRecord>& clients, const ApiCatalog& catalog,
                            const ScanOptions& options = {}, Diagnostics& diag = Diagnostics::discard());

nlohmann::json usage_report_to_json(const UsageReport& r);
UsageReport usage_report_from_json(const nlohmann::json& j);
nlohmann::json aggregate_to_json(const CorpusAggregate& agg);
CorpusAggregate aggregate_from_json(const nlohmann::json& j);
std::string format_sites(const std::vector<UseSite>& sites);

}  // namespace apiprobe
