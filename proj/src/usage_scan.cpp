#include "apiprobe/usage_scan.hpp"
#include "apiprobe/error.hpp"
#include "apiprobe/io.hpp"
#include "apiprobe/lexer.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <sstream>
#include <thread>

namespace apiprobe {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

bool is_inline_space(char c) { return c == ' ' || c == '\t' || c == '\v' || c == '\f' || c == '\r'; }
bool is_any_space(char c) { return is_inline_space(c) || c == '\n'; }

// Position after the identifier at `end` if it is followed by a call paren.
bool call_follows(std::string_view text, std::size_t end, bool loose) {
    std::size_t j = end;
    if (loose) {
        while (j < text.size() && is_any_space(text[j])) ++j;
    } else if (j < text.size() && is_inline_space(text[j])) {
        ++j;
    }
    return j < text.size() && text[j] == '(';
}

// Walks identifier tokens with their line numbers.
template <typename Fn>
void walk_identifiers(std::string_view text, Fn&& fn) {
    std::uint32_t line = 1;
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        const char c = text[i];
        if (c == '\n') {
            ++line;
            ++i;
        } else if (is_digit(c) || (c == '.' && i + 1 < n && is_digit(text[i + 1]))) {
            // Numeric literal: consume the whole pp-number.
            ++i;
            while (i < n) {
                const char d = text[i];
                if (is_ident_char(d) || d == '.') {
                    ++i;
                } else if ((d == '+' || d == '-') && (text[i - 1] == 'e' || text[i - 1] == 'E' ||
                                                      text[i - 1] == 'p' || text[i - 1] == 'P')) {
                    ++i;
                } else {
                    break;
                }
            }
        } else if (is_ident_start(c)) {
            std::size_t j = i + 1;
            while (j < n && is_ident_char(text[j])) ++j;
            fn(text.substr(i, j - i), j, line);
            i = j;
        } else {
            ++i;
        }
    }
}

bool looks_binary(std::string_view s) { return s.substr(0, 8192).find('\0') != std::string_view::npos; }

void merge_into(FileUses& into, FileUses&& from) {
    for (const auto& [api, c] : from.counts) into.counts[api] += c;
    into.sites.insert(into.sites.end(), std::make_move_iterator(from.sites.begin()),
                      std::make_move_iterator(from.sites.end()));
}

}  // namespace

std::uint64_t UsageReport::total_uses() const {
    std::uint64_t n = 0;
    for (const auto& [_, c] : uses) n += c;
    return n;
}

std::string strip_comments(std::string_view source, Diagnostics& diag) {
    auto r = blank_source(source, {.blank_comments = true, .blank_literals = false});
    if (r.unterminated_block_comment) diag.warn("unterminated_comment", "block comment runs to end of file");
    return std::move(r.text);
}

std::string strip_comment_lines_paper(std::string_view source) {
    std::string out;
    out.reserve(source.size());
    std::size_t pos = 0;
    while (pos <= source.size()) {
        auto eol = source.find('\n', pos);
        const bool last = eol == std::string_view::npos;
        if (last) eol = source.size();
        const auto line = source.substr(pos, eol - pos);
        const bool drop = line.find("//") != std::string_view::npos || line.find("/*") != std::string_view::npos ||
                          (line.size() >= 2 && is_any_space(line[0]) && line[1] == '*');
        if (!drop) out.append(line);
        if (last) break;
        out.push_back('\n');
        pos = eol + 1;
    }
    return out;
}

ApiMatcher::ApiMatcher(const std::vector<std::string>& apis) : names_(apis) {
    std::sort(names_.begin(), names_.end());
    names_.erase(std::unique(names_.begin(), names_.end()), names_.end());
    index_.reserve(names_.size());
    for (std::size_t i = 0; i < names_.size(); ++i) index_.emplace(names_[i], i);
}

ApiMatcher::ApiMatcher(const ApiCatalog& catalog) {
    names_.reserve(catalog.size());
    for (const auto& [name, _] : catalog.apis) names_.push_back(name);
    index_.reserve(names_.size());
    for (std::size_t i = 0; i < names_.size(); ++i) index_.emplace(names_[i], i);
}

std::vector<ApiMatcher::Hit> ApiMatcher::find_calls(std::string_view code, bool loose) const {
    std::vector<Hit> hits;
    walk_identifiers(code, [&](std::string_view tok, std::size_t end, std::uint32_t line) {
        const auto it = index_.find(tok);
        if (it != index_.end() && call_follows(code, end, loose)) hits.push_back({line, it->second});
    });
    return hits;
}

std::vector<ApiMatcher::Hit> ApiMatcher::find_calls_paper(std::string_view text, bool loose) const {
    std::vector<Hit> hits;
    std::size_t pos = 0;
    std::uint32_t line_no = 0;
    std::vector<std::size_t> on_line;
    while (pos <= text.size()) {
        auto eol = text.find('\n', pos);
        const bool last = eol == std::string_view::npos;
        if (last) eol = text.size();
        const auto line = text.substr(pos, eol - pos);
        ++line_no;

        // grep reports a matching line once, whatever the number of matches.
        on_line.clear();
        walk_identifiers(line, [&](std::string_view tok, std::size_t end, std::uint32_t) {
            const auto it = index_.find(tok);
            if (it == index_.end()) return;
            bool call = false;
            if (loose) {
                std::size_t j = end;
                while (j < line.size() && is_inline_space(line[j])) ++j;
                call = j < line.size() && line[j] == '(';
            } else {
                call = call_follows(line, end, false);
            }
            if (call && std::find(on_line.begin(), on_line.end(), it->second) == on_line.end())
                on_line.push_back(it->second);
        });
        for (auto api : on_line) {
            // grep -Ev '".*<api>.*"': drop lines where the name sits between quotes.
            const std::string& name = names_[api];
            const auto first_quote = line.find('"');
            const auto last_quote = line.rfind('"');
            bool quoted = false;
            if (first_quote != std::string_view::npos && last_quote > first_quote) {
                const auto p = line.find(name, first_quote + 1);
                quoted = p != std::string_view::npos && p + name.size() <= last_quote;
            }
            if (!quoted) hits.push_back({line_no, api});
        }
        if (last) break;
        pos = eol + 1;
    }
    return hits;
}

std::vector<std::uint32_t> find_api_uses(std::string_view source, std::string_view api, bool loose) {
    const ApiMatcher matcher(std::vector<std::string>{std::string(api)});
    const auto code = blank_source(source, {.blank_comments = false, .blank_literals = true}).text;
    std::vector<std::uint32_t> lines;
    for (const auto& h : matcher.find_calls(code, loose)) lines.push_back(h.line);
    return lines;
}

FileUses scan_source(std::string_view source, const std::string& file, const ApiMatcher& matcher,
                     const ScanOptions& options, Diagnostics& diag) {
    FileUses out;
    std::vector<ApiMatcher::Hit> hits;
    if (options.paper_faithful) {
        hits = matcher.find_calls_paper(strip_comment_lines_paper(source), options.loose_call_match);
    } else {
        const auto lexed = blank_source(source, {.blank_comments = true, .blank_literals = true});
        if (lexed.unterminated_block_comment)
            diag.warn("unterminated_comment", "block comment runs to end of file", {{"file", file}});
        hits = matcher.find_calls(lexed.text, options.loose_call_match);
    }
    for (const auto& h : hits) {
        const auto& name = matcher.names()[h.api];
        ++out.counts[name];
        if (options.collect_sites) out.sites.push_back({file, h.line, name});
    }
    return out;
}

UsageReport scan_client(const ClientRecord& rec, const ApiCatalog& catalog, const ScanOptions& options,
                        Diagnostics& diag) {
    UsageReport report;
    report.client_id = rec.client_id;
    report.library = catalog.library;

    std::error_code ec;
    std::vector<std::string> files;
    const bool root_excluded = rec.excluded_dirs.contains(".");
    if (root_excluded) {
        diag.info("client_excluded", "client root matches the library tree", {{"client", rec.client_id}});
    } else if (fs::is_directory(rec.root, ec)) {
        fs::recursive_directory_iterator it(rec.root, fs::directory_options::skip_permission_denied, ec), end;
        for (; !ec && it != end; it.increment(ec)) {
            std::error_code sec;
            const std::string rel = relative_inside(it->path(), rec.root);
            if (it->is_directory(sec)) {
                if (it->path().filename() == ".git" || rec.excluded_dirs.contains(rel)) it.disable_recursion_pending();
                continue;
            }
            if (!it->is_regular_file(sec) || !is_c_family_source(it->path())) continue;
            if (is_excluded(rec, rel)) continue;
            files.push_back(rel);
        }
        if (ec) diag.warn("walk_error", ec.message(), {{"client", rec.client_id}});
    } else {
        diag.warn("missing_client_root", "client root is not a directory", {{"client", rec.client_id}});
    }
    std::sort(files.begin(), files.end());

    const ApiMatcher matcher(catalog);
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> scanned{0};
    std::mutex mu;
    FileUses total;

    auto worker = [&] {
        FileUses local;
        for (std::size_t i = next++; i < files.size(); i = next++) {
            const auto& rel = files[i];
            const fs::path path = rec.root / rel;
            std::error_code sec;
            const auto size = fs::file_size(path, sec);
            if (sec) {
                diag.warn("skip_file", sec.message(), {{"client", rec.client_id}, {"file", rel}});
                continue;
            }
            if (size > options.file_cap_bytes) {
                diag.warn("file_too_large", "skipped", {{"client", rec.client_id}, {"file", rel},
                                                        {"bytes", std::to_string(size)}});
                continue;
            }
            std::string text;
            try {
                text = read_text_file(path);
            } catch (const Error& e) {
                diag.warn("skip_file", e.detail(), {{"client", rec.client_id}, {"file", rel}});
                continue;
            }
            if (looks_binary(text)) {
                diag.info("binary_file", "skipped", {{"client", rec.client_id}, {"file", rel}});
                continue;
            }
            merge_into(local, scan_source(text, rel, matcher, options, diag));
            ++scanned;
        }
        std::lock_guard lock(mu);
        merge_into(total, std::move(local));
    };

    const std::size_t jobs = std::clamp<std::size_t>(options.jobs, 1, std::max<std::size_t>(files.size(), 1));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(worker);
    }

    report.uses = std::move(total.counts);
    report.sites = std::move(total.sites);
    std::sort(report.sites.begin(), report.sites.end());
    report.files_scanned = scanned.load();
    report.distinct_count = report.uses.size();
    report.utilisation_pct =
        catalog.size() == 0 ? 0.0 : 100.0 * static_cast<double>(report.distinct_count) / catalog.size();
    return report;
}

CorpusAggregate aggregate_reports(std::vector<UsageReport> reports, const ApiCatalog& catalog) {
    CorpusAggregate agg;
    agg.library = catalog.library;
    agg.catalog_size = catalog.size();
    for (const auto& [name, _] : catalog.apis) agg.per_api.emplace(name, ApiCorpusStats{});

    std::sort(reports.begin(), reports.end(),
              [](const UsageReport& a, const UsageReport& b) { return a.client_id < b.client_id; });
    for (const auto& r : reports) {
        for (const auto& [api, count] : r.uses) {
            if (count == 0) continue;
            auto& s = agg.per_api[api];
            ++s.client_count;
            s.total_uses += count;
        }
        if (r.distinct_count == 0) agg.no_identified_uses.push_back(r.client_id);
    }
    agg.clients = std::move(reports);
    return agg;
}

CorpusAggregate corpus_scan(const std::vector<ClientRecord>& clients, const ApiCatalog& catalog,
                            const ScanOptions& options, Diagnostics& diag) {
    std::vector<UsageReport> reports;
    reports.reserve(clients.size());
    for (const auto& c : clients) reports.push_back(scan_client(c, catalog, options, diag));
    return aggregate_reports(std::move(reports), catalog);
}

json usage_report_to_json(const UsageReport& r) {
    return {{"schema_version", kSchemaVersion},
            {"client", r.client_id},
            {"library", r.library},
            {"uses", r.uses},
            {"distinct", r.distinct_count},
            {"utilisation_pct", r.utilisation_pct},
            {"files_scanned", r.files_scanned}};
}

UsageReport usage_report_from_json(const json& j) {
    check_schema_version(j, "usage report");
    UsageReport r;
    try {
        r.client_id = j.at("client").get<std::string>();
        r.library = j.at("library").get<std::string>();
        r.uses = j.at("uses").get<std::map<std::string, std::uint64_t>>();
        r.distinct_count = j.at("distinct").get<std::size_t>();
        r.utilisation_pct = j.at("utilisation_pct").get<double>();
        r.files_scanned = j.value("files_scanned", std::size_t{0});
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, std::string("malformed usage report: ") + e.what());
    }
    return r;
}

json aggregate_to_json(const CorpusAggregate& agg) {
    json per_api = json::object();
    for (const auto& [api, s] : agg.per_api) per_api[api] = {{"clients", s.client_count}, {"uses", s.total_uses}};
    json clients = json::array();
    for (const auto& r : agg.clients) clients.push_back(usage_report_to_json(r));
    return {{"schema_version", kSchemaVersion},
            {"library", agg.library},
            {"catalog_size", agg.catalog_size},
            {"per_api", std::move(per_api)},
            {"clients", std::move(clients)},
            {"no_identified_uses", agg.no_identified_uses},
            {"skipped_clients", agg.skipped_clients}};
}

CorpusAggregate aggregate_from_json(const json& j) {
    check_schema_version(j, "corpus aggregate");
    CorpusAggregate agg;
    try {
        agg.library = j.at("library").get<std::string>();
        agg.catalog_size = j.at("catalog_size").get<std::size_t>();
        for (const auto& [api, s] : j.at("per_api").items())
            agg.per_api[api] = {s.at("clients").get<std::uint64_t>(), s.at("uses").get<std::uint64_t>()};
        for (const auto& c : j.at("clients")) agg.clients.push_back(usage_report_from_json(c));
        agg.no_identified_uses = j.value("no_identified_uses", std::vector<std::string>{});
        agg.skipped_clients = j.value("skipped_clients", std::vector<std::string>{});
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, std::string("malformed aggregate: ") + e.what());
    }
    return agg;
}

std::string format_sites(const std::vector<UseSite>& sites) {
    std::ostringstream out;
    for (const auto& s : sites) out << s.file << ':' << s.line << ':' << s.api << '\n';
    return out.str();
}

}  // namespace apiprobe
