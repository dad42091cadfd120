#include "apiprobe/coverage.hpp"
#include "apiprobe/error.hpp"
#include "apiprobe/io.hpp"

#include <algorithm>
#include <charconv>
#include <limits>
#include <numeric>

namespace apiprobe {

namespace {

constexpr std::uint64_t kMaxCount = std::numeric_limits<std::uint64_t>::max();

std::uint64_t saturating_add(std::uint64_t a, std::uint64_t b) { return a > kMaxCount - b ? kMaxCount : a + b; }

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    return s;
}

bool all_digits(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

// Unsigned integer; values beyond 64 bits saturate.
std::optional<std::uint64_t> parse_count(std::string_view s) {
    if (!all_digits(s)) return std::nullopt;
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec == std::errc::result_out_of_range) return kMaxCount;
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

std::optional<std::uint32_t> parse_line_number(std::string_view s) {
    if (!all_digits(s)) return std::nullopt;
    std::uint32_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || v == 0) return std::nullopt;
    return v;
}

std::vector<std::string_view> split(std::string_view s, char sep, std::size_t max_parts) {
    std::vector<std::string_view> parts;
    while (parts.size() + 1 < max_parts) {
        const auto pos = s.find(sep);
        if (pos == std::string_view::npos) break;
        parts.push_back(s.substr(0, pos));
        s.remove_prefix(pos + 1);
    }
    parts.push_back(s);
    return parts;
}

// Adds a function to a file, keeping start lines and names unique.
void add_function(FileCoverage& file, FunctionRecord fn, Diagnostics& diag) {
    for (auto& existing : file.functions) {
        if (existing.name == fn.name) {
            if (!existing.end && fn.end) existing = fn;
            return;
        }
    }
    for (const auto& existing : file.functions) {
        if (existing.start == fn.start) {
            diag.warn("duplicate_function_start", "function shares a start line with " + existing.name,
                      {{"file", file.path}, {"function", fn.name}, {"line", std::to_string(fn.start)}});
            return;
        }
    }
    file.functions.push_back(std::move(fn));
}

void sort_functions(FileCoverage& file) {
    std::sort(file.functions.begin(), file.functions.end(), [](const FunctionRecord& a, const FunctionRecord& b) {
        return std::tie(a.start, a.name) < std::tie(b.start, b.name);
    });
}

// Total order used to pick between two records of the same function when
// merging: stated extents first, then the earlier start, then the earlier end.
bool preferred(const FunctionRecord& a, const FunctionRecord& b) {
    if (a.end.has_value() != b.end.has_value()) return a.end.has_value();
    if (a.start != b.start) return a.start < b.start;
    return a.end.value_or(0) < b.end.value_or(0);
}

bool excluded(const std::string& path, const std::vector<std::string>& prefixes) {
    return std::any_of(prefixes.begin(), prefixes.end(), [&](const std::string& p) { return path.starts_with(p); });
}

}  // namespace

std::uint64_t Tracefile::total_lines() const {
    std::uint64_t n = 0;
    for (const auto& [_, f] : files) n += f.line_counts.size();
    return n;
}

std::uint64_t Tracefile::covered_lines() const {
    std::uint64_t n = 0;
    for (const auto& [_, f] : files)
        for (const auto& [line, count] : f.line_counts) n += count > 0 ? 1 : 0;
    return n;
}

Tracefile parse_tracefile(std::string_view content, Diagnostics& diag) {
    Tracefile tf;
    std::optional<FileCoverage> current;
    // FNL/FNA (lcov 2.x) pair an index with an extent and a name.
    std::map<std::string, FunctionRecord> pending_fnl;
    std::size_t line_no = 0;

    auto malformed = [&](std::string_view line, const std::string& why) -> Error {
        return Error(ErrorCode::MalformedDirective,
                     "line " + std::to_string(line_no) + ": " + why + ": '" + std::string(line) + "'");
    };
    auto close_record = [&] {
        if (!current) return;
        sort_functions(*current);
        auto [it, inserted] = tf.files.try_emplace(current->path, std::move(*current));
        if (!inserted) {
            // Same SF twice within one tracefile: fold into the first block.
            FileCoverage& into = it->second;
            for (const auto& [l, c] : current->line_counts) {
                auto& slot = into.line_counts[l];
                slot = saturating_add(slot, c);
            }
            for (auto& fn : current->functions) add_function(into, fn, diag);
            sort_functions(into);
        }
        current.reset();
        pending_fnl.clear();
    };

    std::size_t pos = 0;
    while (pos <= content.size()) {
        auto eol = content.find('\n', pos);
        if (eol == std::string_view::npos) eol = content.size();
        const std::string_view line = trim(content.substr(pos, eol - pos));
        pos = eol + 1;
        ++line_no;
        if (line.empty()) {
            if (eol == content.size()) break;
            continue;
        }

        if (line == "end_of_record") {
            if (!current) throw malformed(line, "end_of_record outside a source file block");
            close_record();
            continue;
        }

        const auto colon = line.find(':');
        if (colon == std::string_view::npos) throw malformed(line, "not a directive");
        const std::string_view key = line.substr(0, colon);
        const std::string_view value = line.substr(colon + 1);
        if (key.empty() || !std::all_of(key.begin(), key.end(), [](char c) { return c >= 'A' && c <= 'Z'; }))
            throw malformed(line, "not a directive");

        if (key == "TN" || key == "VER") continue;
        if (key == "SF") {
            if (current) {
                diag.warn("missing_end_of_record", "source file block not terminated",
                          {{"line", std::to_string(line_no)}, {"file", current->path}});
                close_record();
            }
            if (value.empty()) throw malformed(line, "empty source path");
            current.emplace();
            current->path = std::string(value);
            continue;
        }

        // The remaining known directives are only valid inside an SF block.
        static const std::set<std::string_view> known{"FN",  "FNDA", "FNF", "FNH", "FNL", "FNA", "DA",
                                                      "LF",  "LH",   "BRDA", "BRF", "BRH"};
        if (!known.contains(key)) {
            diag.warn("unknown_directive", "skipped", {{"line", std::to_string(line_no)}, {"key", std::string(key)}});
            continue;
        }
        if (!current) throw malformed(line, std::string(key) + " outside a source file block");

        if (key == "FN") {
            // FN:<start>,<name> or FN:<start>,<end>,<name>
            const auto parts = split(value, ',', 3);
            if (parts.size() < 2) throw malformed(line, "FN needs a line and a name");
            const auto start = parse_line_number(parts[0]);
            if (!start) throw malformed(line, "bad FN start line");
            FunctionRecord fn;
            fn.start = *start;
            if (parts.size() == 3 && all_digits(parts[1])) {
                const auto end = parse_line_number(parts[1]);
                if (!end) throw malformed(line, "bad FN end line");
                fn.end = *end;
                fn.name = std::string(parts[2]);
            } else {
                fn.name = std::string(value.substr(parts[0].size() + 1));
            }
            if (fn.name.empty()) throw malformed(line, "empty function name");
            add_function(*current, std::move(fn), diag);
        } else if (key == "FNL") {
            // FNL:<index>,<start>[,<end>]
            const auto parts = split(value, ',', 3);
            if (parts.size() < 2) throw malformed(line, "FNL needs an index and a line");
            const auto start = parse_line_number(parts[1]);
            if (!start || !all_digits(parts[0])) throw malformed(line, "bad FNL record");
            FunctionRecord fn;
            fn.start = *start;
            if (parts.size() == 3) {
                const auto end = parse_line_number(parts[2]);
                if (!end) throw malformed(line, "bad FNL end line");
                fn.end = *end;
            }
            pending_fnl[std::string(parts[0])] = fn;
        } else if (key == "FNA") {
            // FNA:<index>,<count>,<name>
            const auto parts = split(value, ',', 3);
            if (parts.size() != 3 || !parse_count(parts[1])) throw malformed(line, "bad FNA record");
            const auto it = pending_fnl.find(std::string(parts[0]));
            if (it == pending_fnl.end()) throw malformed(line, "FNA without preceding FNL");
            FunctionRecord fn = it->second;
            fn.name = std::string(parts[2]);
            if (fn.name.empty()) throw malformed(line, "empty function name");
            add_function(*current, std::move(fn), diag);
        } else if (key == "FNDA") {
            const auto parts = split(value, ',', 2);
            if (parts.size() != 2 || !parse_count(parts[0]) || parts[1].empty())
                throw malformed(line, "bad FNDA record");
        } else if (key == "DA") {
            // DA:<line>,<count>[,<checksum>]
            const auto parts = split(value, ',', 3);
            if (parts.size() < 2) throw malformed(line, "DA needs a line and a count");
            const auto ln = parse_line_number(parts[0]);
            const auto count = parse_count(parts[1]);
            if (!ln) throw malformed(line, "bad DA line number");
            if (!count) throw malformed(line, "bad DA execution count");
            auto& slot = current->line_counts[*ln];
            slot = saturating_add(slot, *count);
        } else if (key == "FNF" || key == "FNH" || key == "LF" || key == "LH") {
            if (!parse_count(value)) throw malformed(line, "bad summary count");
        }
        // BRDA/BRF/BRH: branch data is not used.
    }
    if (current) {
        diag.warn("missing_end_of_record", "tracefile ends inside a source file block", {{"file", current->path}});
        close_record();
    }
    return tf;
}

Tracefile load_tracefile(const std::filesystem::path& path, Diagnostics& diag) {
    const auto text = read_text_file(path);
    try {
        return parse_tracefile(text, diag);
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.detail());
    }
}

std::map<std::string, Extent> function_extents(const FileCoverage& file) {
    std::map<std::string, Extent> out;
    const std::uint32_t max_line = file.line_counts.empty() ? 0 : file.line_counts.rbegin()->first;

    std::vector<const FunctionRecord*> order;
    for (const auto& f : file.functions) order.push_back(&f);
    std::sort(order.begin(), order.end(), [](auto* a, auto* b) { return a->start < b->start; });

    for (std::size_t i = 0; i < order.size(); ++i) {
        const FunctionRecord& f = *order[i];
        Extent e{f.start, f.start};
        if (f.end) {
            e.end = *f.end;
        } else {
            // Next distinct start line, else the file's last instrumented line.
            std::size_t j = i + 1;
            while (j < order.size() && order[j]->start == f.start) ++j;
            if (j < order.size())
                e.end = order[j]->start - 1;
            else
                e.end = std::max(max_line, f.start);
        }
        out.emplace(f.name, e);
    }
    return out;
}

std::map<std::string, std::map<std::string, Extent>> function_extents(const Tracefile& tf) {
    std::map<std::string, std::map<std::string, Extent>> out;
    for (const auto& [path, file] : tf.files) out.emplace(path, function_extents(file));
    return out;
}

namespace {

EntryLocation measure_entry(const std::string& path, const FileCoverage& file, const Extent& e) {
    EntryLocation loc{path, e, 0, 0, 0};
    for (auto it = file.line_counts.lower_bound(e.start); it != file.line_counts.end() && it->first <= e.end; ++it) {
        ++loc.eloc;
        if (it->second > 0) ++loc.covered;
    }
    return loc;
}

// Best definition among the candidate files, which must be in path order so
// that strict > keeps the smaller path on ties.
std::optional<EntryLocation> best_entry(const Tracefile& tf, const std::string& name,
                                        const std::vector<std::string>& paths) {
    std::optional<EntryLocation> best;
    for (const auto& path : paths) {
        const FileCoverage& file = tf.files.at(path);
        const auto extents = function_extents(file);
        const auto it = extents.find(name);
        if (it == extents.end()) continue;
        auto loc = measure_entry(path, file, it->second);
        if (!best || loc.eloc > best->eloc) best = std::move(loc);
    }
    if (best) best->candidates = paths.size();
    return best;
}

}  // namespace

std::optional<EntryLocation> locate_entry_function(const Tracefile& tf, const std::string& name) {
    std::vector<std::string> paths;
    for (const auto& [path, file] : tf.files) {
        if (std::any_of(file.functions.begin(), file.functions.end(),
                        [&](const FunctionRecord& f) { return f.name == name; }))
            paths.push_back(path);
    }
    return best_entry(tf, name, paths);
}

ApiCatalog annotate_catalog_coverage(const ApiCatalog& catalog, const Tracefile& tf, Diagnostics& diag) {
    // Index function names once so the per-API lookup only touches defining files.
    std::map<std::string, std::vector<std::string>> defined_in;
    for (const auto& [path, file] : tf.files)
        for (const auto& f : file.functions) defined_in[f.name].push_back(path);

    ApiCatalog out = catalog;
    for (auto& [name, api] : out.apis) {
        api.defining_file.reset();
        api.entry_start.reset();
        api.entry_end.reset();
        api.eloc.reset();
        api.covered_lines.reset();
        const auto paths = defined_in.find(name);
        if (paths == defined_in.end()) continue;

        const auto loc = best_entry(tf, name, paths->second);
        if (!loc) continue;
        if (loc->candidates > 1) {
            diag.warn("AmbiguousFunction", "API defined in several files; using the largest definition",
                      {{"api", name}, {"chosen", loc->file}, {"candidates", std::to_string(loc->candidates)}});
        }
        api.defining_file = loc->file;
        api.entry_start = loc->extent.start;
        api.entry_end = loc->extent.end;
        api.eloc = loc->eloc;
        api.covered_lines = loc->covered;
    }
    return out;
}

Tracefile merge_tracefiles(std::span<const Tracefile> runs) {
    Tracefile out;
    for (const auto& tf : runs) {
        for (const auto& [path, file] : tf.files) {
            auto [it, inserted] = out.files.try_emplace(path);
            FileCoverage& into = it->second;
            if (inserted) into.path = path;
            for (const auto& [line, count] : file.line_counts) {
                auto& slot = into.line_counts[line];
                slot = saturating_add(slot, count);
            }
            for (const auto& fn : file.functions) {
                auto same = std::find_if(into.functions.begin(), into.functions.end(),
                                         [&](const FunctionRecord& f) { return f.name == fn.name; });
                if (same == into.functions.end())
                    into.functions.push_back(fn);
                else if (preferred(fn, *same))
                    *same = fn;
            }
            sort_functions(into);
        }
    }
    return out;
}

double overall_coverage_pct(const Tracefile& tf, const std::vector<std::string>& exclude_prefixes) {
    std::uint64_t total = 0;
    std::uint64_t covered = 0;
    for (const auto& [path, file] : tf.files) {
        if (excluded(path, exclude_prefixes)) continue;
        total += file.line_counts.size();
        for (const auto& [_, c] : file.line_counts) covered += c > 0 ? 1 : 0;
    }
    return total == 0 ? 0.0 : 100.0 * static_cast<double>(covered) / static_cast<double>(total);
}

std::size_t median_run_index(std::span<const Tracefile> runs) {
    if (runs.empty()) throw Error(ErrorCode::MissingInputs, "median of zero coverage runs");
    std::vector<std::pair<double, std::size_t>> ranked;
    for (std::size_t i = 0; i < runs.size(); ++i) ranked.emplace_back(overall_coverage_pct(runs[i]), i);
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    return ranked[(ranked.size() - 1) / 2].second;
}

Tracefile select_median_run(std::span<const Tracefile> runs) { return runs[median_run_index(runs)]; }

ImprovementReport coverage_delta(const Tracefile& baseline, const Tracefile& augmented, const ApiCatalog& catalog,
                                 const std::vector<std::string>& exclude_prefixes) {
    if (!baseline.empty() && !augmented.empty()) {
        const bool shared = std::any_of(augmented.files.begin(), augmented.files.end(),
                                        [&](const auto& kv) { return baseline.files.contains(kv.first); });
        if (!shared) throw Error(ErrorCode::FileSetMismatch, "augmented coverage shares no source file with baseline");
    }

    ImprovementReport r;
    r.baseline_total_pct = overall_coverage_pct(baseline, exclude_prefixes);
    r.augmented_total_pct = overall_coverage_pct(augmented, exclude_prefixes);
    r.extra_total_coverage_pct = r.augmented_total_pct - r.baseline_total_pct;

    std::uint64_t api_lines = 0, base_api_covered = 0, aug_api_covered = 0;
    for (const auto& [name, _] : catalog.apis) {
        auto loc = locate_entry_function(augmented, name);
        const Tracefile* extent_source = &augmented;
        if (!loc) {
            loc = locate_entry_function(baseline, name);
            extent_source = &baseline;
        }
        if (!loc) continue;

        const auto counts_in = [&](const Tracefile& tf) -> const std::map<std::uint32_t, std::uint64_t>* {
            const auto it = tf.files.find(loc->file);
            return it == tf.files.end() ? nullptr : &it->second.line_counts;
        };
        const auto* base_counts = counts_in(baseline);
        const auto* aug_counts = counts_in(augmented);
        const auto* eloc_counts = counts_in(*extent_source);

        const auto count_at = [](const std::map<std::uint32_t, std::uint64_t>* m, std::uint32_t line) {
            if (m == nullptr) return std::uint64_t{0};
            const auto it = m->find(line);
            return it == m->end() ? std::uint64_t{0} : it->second;
        };

        std::uint64_t base_cov = 0, aug_cov = 0;
        for (auto it = eloc_counts->lower_bound(loc->extent.start);
             it != eloc_counts->end() && it->first <= loc->extent.end; ++it) {
            const bool in_base = count_at(base_counts, it->first) > 0;
            const bool in_aug = count_at(aug_counts, it->first) > 0;
            ++api_lines;
            base_cov += in_base;
            aug_cov += in_aug;
            if (in_aug && !in_base) ++r.new_api_lines_covered;
        }
        base_api_covered += base_cov;
        aug_api_covered += aug_cov;

        if (base_cov == 0 && aug_cov > 0)
            r.newly_covered_apis.push_back(name);
        else if (base_cov > 0 && aug_cov > base_cov)
            r.improved_apis.push_back(name);
    }
    if (api_lines > 0) {
        r.baseline_api_line_pct = 100.0 * static_cast<double>(base_api_covered) / static_cast<double>(api_lines);
        r.augmented_api_line_pct = 100.0 * static_cast<double>(aug_api_covered) / static_cast<double>(api_lines);
    }
    return r;
}

nlohmann::json improvement_to_json(const std::string& library, const ImprovementReport& r) {
    return {{"schema_version", kSchemaVersion},
            {"library", library},
            {"extra_total_coverage_pct", r.extra_total_coverage_pct},
            {"baseline_total_pct", r.baseline_total_pct},
            {"augmented_total_pct", r.augmented_total_pct},
            {"baseline_api_line_pct", r.baseline_api_line_pct},
            {"augmented_api_line_pct", r.augmented_api_line_pct},
            {"newly_covered_apis", r.newly_covered_apis},
            {"improved_apis", r.improved_apis},
            {"newly_covered", r.newly_covered_apis.size()},
            {"improved", r.improved_apis.size()},
            {"new_api_lines_covered", r.new_api_lines_covered}};
}

}  // namespace apiprobe
