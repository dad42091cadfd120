#include "apiprobe/config.hpp"
#include "apiprobe/error.hpp"
#include "apiprobe/io.hpp"

#include <set>
#include <utility>

namespace apiprobe {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
    if (p.empty()) return {};
    const fs::path path(p);
    return (path.is_absolute() ? path : base / path).lexically_normal();
}

json parse_file(const fs::path& path, const char* what) {
    if (!fs::exists(path)) throw Error(ErrorCode::InvalidConfig, std::string(what) + " not found: " + path.string());
    try {
        return json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::InvalidConfig, path.string() + ": " + e.what());
    }
}

}  // namespace

const LibrarySpec& RunConfig::library(const std::string& name) const {
    for (const auto& l : libraries)
        if (l.name == name) return l;
    throw Error(ErrorCode::InvalidConfig, "library not in configuration: " + name);
}

ScanOptions RunConfig::scan_options() const {
    ScanOptions o;
    o.paper_faithful = paper_faithful;
    o.loose_call_match = loose_call_match;
    o.file_cap_bytes = file_cap_bytes;
    o.jobs = jobs;
    return o;
}

RunConfig config_from_json(const json& j, const fs::path& base_dir) {
    RunConfig c;
    try {
        for (const auto& l : j.at("libraries")) {
            LibrarySpec spec;
            spec.name = l.at("name").get<std::string>();
            for (const auto& so : l.value("shared_objects", std::vector<std::string>{}))
                spec.shared_objects.push_back(resolve(base_dir, so));
            spec.header_root = resolve(base_dir, l.value("header_root", ""));
            for (const auto& r : l.value("source_roots", std::vector<std::string>{}))
                spec.source_roots.push_back(resolve(base_dir, r));
            spec.explicit_file_excludes = l.value("explicit_file_excludes", std::vector<std::string>{});
            c.libraries.push_back(std::move(spec));
        }
        c.dependency_db = resolve(base_dir, j.value("dependency_db", ""));
        c.clients_root = resolve(base_dir, j.value("clients_root", ""));
        c.output_dir = resolve(base_dir, j.value("output_dir", "out"));
        if (j.contains("thresholds")) {
            const auto& t = j.at("thresholds");
            c.overlap.threshold = t.value("overlap", c.overlap.threshold);
            c.overlap.min_lib_files = t.value("min_lib_files", c.overlap.min_lib_files);
            c.file_cap_bytes = t.value("file_cap_bytes", c.file_cap_bytes);
        }
        if (j.contains("flags")) {
            const auto& f = j.at("flags");
            c.paper_faithful = f.value("paper_faithful", false);
            c.loose_call_match = f.value("loose_call_match", false);
        }
        c.coverage_excludes = j.value("coverage_excludes", std::vector<std::string>{});
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, std::string("malformed configuration: ") + e.what());
    }
    validate_config(c);
    return c;
}

RunConfig load_config(const fs::path& path) {
    const auto abs = fs::absolute(path);
    return config_from_json(parse_file(abs, "configuration"), abs.parent_path());
}

void validate_config(const RunConfig& c) {
    if (!(c.overlap.threshold > 0.0 && c.overlap.threshold <= 1.0))
        throw Error(ErrorCode::InvalidConfig, "overlap threshold must be in (0, 1]");
    if (c.overlap.min_lib_files < 1) throw Error(ErrorCode::InvalidConfig, "min_lib_files must be at least 1");
    if (c.file_cap_bytes == 0) throw Error(ErrorCode::InvalidConfig, "file_cap_bytes must be positive");
    if (c.jobs == 0) throw Error(ErrorCode::InvalidConfig, "jobs must be positive");
    std::set<std::string> names;
    for (const auto& l : c.libraries) {
        if (l.name.find_first_of("/\\") != std::string::npos || l.name == "." || l.name == "..")
            throw Error(ErrorCode::InvalidConfig, "library name cannot contain path separators: " + l.name);
        if (l.name.empty() || !names.insert(l.name).second)
            throw Error(ErrorCode::InvalidConfig, "duplicate or empty library name: " + l.name);
    }
}

std::vector<DependencyEntry> dependency_db_from_json(const json& j) {
    if (!j.is_array()) throw Error(ErrorCode::InvalidConfig, "dependency database must be a JSON array");
    std::vector<DependencyEntry> out;
    std::set<std::pair<std::string, std::string>> seen;
    try {
        for (const auto& e : j) {
            DependencyEntry d{e.at("client").get<std::string>(), e.value("source", ""),
                              e.at("library").get<std::string>()};
            if (d.client.empty() || d.client.find("..") != std::string::npos)
                throw Error(ErrorCode::InvalidConfig, "invalid client id: '" + d.client + "'");
            if (!seen.emplace(d.client, d.library).second)
                throw Error(ErrorCode::InvalidConfig, "duplicate entry for client " + d.client + " and library " + d.library);
            out.push_back(std::move(d));
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, std::string("malformed dependency database: ") + e.what());
    }
    return out;
}

std::vector<DependencyEntry> load_dependency_db(const fs::path& path) {
    auto entries = dependency_db_from_json(parse_file(path, "dependency database"));
    // Relative local sources are taken relative to the database file.
    for (auto& e : entries) {
        if (e.source.empty() || e.source.find("://") != std::string::npos) continue;
        e.source = resolve(fs::absolute(path).parent_path(), e.source).string();
    }
    return entries;
}

}  // namespace apiprobe
