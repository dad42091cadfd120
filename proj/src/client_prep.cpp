#include "apiprobe/client_prep.hpp"
#include "apiprobe/error.hpp"
#include "apiprobe/io.hpp"

#include <algorithm>
#include <functional>
#include <memory>

namespace apiprobe {

namespace fs = std::filesystem;

namespace {

struct DirNode {
    std::string rel;  // "." for the walk root
    std::vector<std::unique_ptr<DirNode>> children;
    std::vector<std::string> own_files;  // relative paths of regular files directly inside
    std::set<std::string> names;         // base names, recursive
    bool has_source = false;             // recursive
};

std::string join_rel(const std::string& parent, const std::string& name) {
    return parent == "." ? name : parent + "/" + name;
}

// Sorted recursive walk. Symlinked directories and .git are not entered.
std::unique_ptr<DirNode> walk(const fs::path& root, const std::string& rel, Diagnostics& diag) {
    auto node = std::make_unique<DirNode>();
    node->rel = rel;
    const fs::path here = rel == "." ? root : root / rel;

    std::vector<fs::directory_entry> entries;
    std::error_code ec;
    for (fs::directory_iterator it(here, fs::directory_options::skip_permission_denied, ec), end; !ec && it != end;
         it.increment(ec))
        entries.push_back(*it);
    if (ec) diag.warn("walk_error", ec.message(), {{"dir", here.string()}});
    std::sort(entries.begin(), entries.end(),
              [](const auto& a, const auto& b) { return a.path().filename() < b.path().filename(); });

    for (const auto& e : entries) {
        const std::string name = e.path().filename().string();
        std::error_code sec;
        if (e.is_symlink(sec)) {
            if (e.is_regular_file(sec)) {
                node->own_files.push_back(join_rel(rel, name));
                node->names.insert(name);
                node->has_source |= is_c_family_source(e.path());
            }
            continue;
        }
        if (e.is_directory(sec)) {
            if (name == ".git") continue;
            auto child = walk(root, join_rel(rel, name), diag);
            node->names.insert(child->names.begin(), child->names.end());
            node->has_source |= child->has_source;
            node->children.push_back(std::move(child));
        } else if (e.is_regular_file(sec)) {
            node->own_files.push_back(join_rel(rel, name));
            node->names.insert(name);
            node->has_source |= is_c_family_source(e.path());
        }
    }
    return node;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    return s;
}

// Library directories eligible for matching, with an inverted name index.
struct OverlapIndex {
    std::vector<const std::set<std::string>*> libs;
    std::map<std::string, std::vector<std::size_t>> by_name;

    OverlapIndex(const LibraryInventory& inv, std::size_t min_lib_files) {
        for (const auto& [dir, names] : inv.dirs) {
            if (names.size() < min_lib_files) continue;
            const std::size_t id = libs.size();
            libs.push_back(&names);
            for (const auto& n : names) by_name[n].push_back(id);
        }
    }

    bool qualifies(const std::set<std::string>& client_names, double threshold) const {
        if (client_names.empty() || libs.empty()) return false;
        std::vector<std::size_t> hits(libs.size(), 0);
        for (const auto& n : client_names) {
            const auto it = by_name.find(n);
            if (it == by_name.end()) continue;
            for (auto id : it->second) ++hits[id];
        }
        const double total = static_cast<double>(client_names.size());
        constexpr double eps = 1e-12;
        return std::any_of(hits.begin(), hits.end(),
                           [&](std::size_t h) { return static_cast<double>(h) / total >= threshold - eps; });
    }
};

}  // namespace

std::string_view to_string(ExclusionRule rule) {
    switch (rule) {
        case ExclusionRule::Submodule: return "submodule";
        case ExclusionRule::Overlap: return "overlap";
        case ExclusionRule::Explicit: return "explicit";
    }
    return "explicit";
}

bool is_c_family_source(const fs::path& p) {
    const auto ext = p.extension().string();
    return ext == ".c" || ext == ".cc" || ext == ".cpp" || ext == ".cxx" || ext == ".h" || ext == ".hh" ||
           ext == ".hpp" || ext == ".hxx";
}

std::vector<std::string> parse_submodule_manifest(std::string_view content, Diagnostics& diag) {
    std::vector<std::string> paths;
    bool in_submodule = false;
    bool section_has_path = false;
    std::string section_name;
    std::size_t line_no = 0;

    auto end_section = [&] {
        if (in_submodule && !section_has_path)
            diag.warn("submodule_without_path", "submodule section has no path key", {{"section", section_name}});
        in_submodule = false;
        section_has_path = false;
    };

    std::size_t pos = 0;
    while (pos < content.size()) {
        auto eol = content.find('\n', pos);
        if (eol == std::string_view::npos) eol = content.size();
        const auto line = trim(content.substr(pos, eol - pos));
        pos = eol + 1;
        ++line_no;
        if (line.empty() || line.front() == '#' || line.front() == ';') continue;

        if (line.front() == '[') {
            end_section();
            if (line.back() != ']') {
                diag.warn("malformed_section", "unterminated section header", {{"line", std::to_string(line_no)}});
                continue;
            }
            const auto inner = trim(line.substr(1, line.size() - 2));
            section_name = std::string(inner);
            in_submodule = inner.starts_with("submodule") &&
                           (inner.size() == 9 || std::isspace(static_cast<unsigned char>(inner[9])));
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            diag.warn("malformed_entry", "line is neither a section nor a key", {{"line", std::to_string(line_no)}});
            continue;
        }
        if (!in_submodule) continue;
        const auto key = trim(line.substr(0, eq));
        auto value = trim(line.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
        if (key == "path" && !section_has_path) {
            if (value.empty()) {
                diag.warn("submodule_without_path", "empty path value", {{"line", std::to_string(line_no)}});
                continue;
            }
            paths.emplace_back(value);
            section_has_path = true;
        }
    }
    end_section();
    return paths;
}

LibraryInventory build_library_inventory(const std::vector<fs::path>& source_roots, Diagnostics& diag) {
    LibraryInventory inv;
    for (const auto& root : source_roots) {
        std::error_code ec;
        if (!fs::is_directory(root, ec)) {
            diag.warn("missing_source_root", "library source root is not a directory", {{"path", root.string()}});
            continue;
        }
        const auto tree = walk(root, ".", diag);
        std::function<void(const DirNode&)> visit = [&](const DirNode& n) {
            if (!n.has_source) return;
            const fs::path abs = n.rel == "." ? root : root / n.rel;
            auto& slot = inv.dirs[abs.lexically_normal().generic_string()];
            slot.insert(n.names.begin(), n.names.end());
            for (const auto& c : n.children) visit(*c);
        };
        visit(*tree);
    }
    return inv;
}

std::set<std::string> detect_vendored_dirs(const fs::path& client_root, const LibraryInventory& inv,
                                           OverlapOptions options, const std::set<std::string>& skip) {
    if (!fs::is_directory(client_root)) throw Error(ErrorCode::MissingRoot, client_root.string());
    const OverlapIndex index(inv, options.min_lib_files);
    const auto tree = walk(client_root, ".", Diagnostics::discard());

    std::set<std::string> out;
    std::function<void(const DirNode&)> visit = [&](const DirNode& n) {
        if (skip.contains(n.rel)) return;
        if (index.qualifies(n.names, options.threshold)) {
            out.insert(n.rel);
            return;
        }
        for (const auto& c : n.children) visit(*c);
    };
    visit(*tree);
    return out;
}

ClientRecord prepare_client(const std::string& client_id, const fs::path& root, const LibrarySpec& spec,
                            const LibraryInventory& inv, OverlapOptions options, Diagnostics& diag) {
    std::error_code ec;
    if (!fs::is_directory(root, ec)) throw Error(ErrorCode::MissingRoot, "client " + client_id + ": " + root.string());

    ClientRecord rec;
    rec.client_id = client_id;
    rec.root = root;

    const fs::path manifest = root / ".gitmodules";
    if (fs::is_regular_file(manifest, ec)) {
        for (const auto& raw : parse_submodule_manifest(read_text_file(manifest), diag)) {
            const fs::path p = fs::path(raw).lexically_normal();
            std::string rel = p.generic_string();
            while (rel.size() > 1 && rel.back() == '/') rel.pop_back();
            if (p.is_absolute() || rel.empty() || rel == "." || rel.starts_with("..")) {
                diag.warn("submodule_outside_root", "ignoring submodule path", {{"client", client_id}, {"path", raw}});
                continue;
            }
            rec.excluded_dirs.insert(rel);
            rec.rules.emplace(rel, ExclusionRule::Submodule);
        }
    }

    for (const auto& dir : detect_vendored_dirs(root, inv, options, rec.excluded_dirs)) {
        rec.excluded_dirs.insert(dir);
        rec.rules.emplace(dir, ExclusionRule::Overlap);
        diag.info("vendored_dir", "excluding library copy", {{"client", client_id}, {"dir", dir}});
    }

    if (!spec.explicit_file_excludes.empty()) {
        const std::set<std::string> names(spec.explicit_file_excludes.begin(), spec.explicit_file_excludes.end());
        const auto tree = walk(root, ".", diag);
        std::function<void(const DirNode&)> visit = [&](const DirNode& n) {
            if (rec.excluded_dirs.contains(n.rel) || rec.excluded_dirs.contains(".")) return;
            for (const auto& f : n.own_files) {
                if (names.contains(fs::path(f).filename().string())) {
                    rec.excluded_files.insert(f);
                    rec.rules.emplace(f, ExclusionRule::Explicit);
                }
            }
            for (const auto& c : n.children) visit(*c);
        };
        visit(*tree);
    }
    return rec;
}

bool is_excluded(const ClientRecord& rec, std::string_view rel) {
    if (rec.excluded_dirs.contains(".")) return true;
    if (rec.excluded_files.contains(std::string(rel))) return true;
    for (std::size_t pos = rel.find('/'); pos != std::string_view::npos; pos = rel.find('/', pos + 1)) {
        if (rec.excluded_dirs.contains(std::string(rel.substr(0, pos)))) return true;
    }
    return false;
}

nlohmann::json client_record_to_json(const ClientRecord& rec) {
    nlohmann::json rules = nlohmann::json::object();
    for (const auto& [path, rule] : rec.rules) rules[path] = to_string(rule);
    return {{"schema_version", kSchemaVersion},
            {"client", rec.client_id},
            {"root", rec.root.generic_string()},
            {"excluded_dirs", rec.excluded_dirs},
            {"excluded_files", rec.excluded_files},
            {"rule", rules}};
}

}  // namespace apiprobe
