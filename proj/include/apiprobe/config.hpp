#pragma once

#include "apiprobe/catalog.hpp"
#include "apiprobe/client_prep.hpp"
#include "apiprobe/usage_scan.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace apiprobe {

struct RunConfig {
    std::vector<LibrarySpec> libraries;
    std::filesystem::path dependency_db;
    std::filesystem::path clients_root;
    std::filesystem::path output_dir;
    OverlapOptions overlap;
    std::uint64_t file_cap_bytes = 16ull * 1024 * 1024;
    bool paper_faithful = false;
    bool loose_call_match = false;
    std::size_t jobs = 1;
    // Path prefixes (relative to the tracefile's SF paths) left out of TCov.
    std::vector<std::string> coverage_excludes;

    const LibrarySpec& library(const std::string& name) const;
    ScanOptions scan_options() const;
};

// Relative paths in the document are resolved against base_dir.
RunConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
RunConfig load_config(const std::filesystem::path& path);
// Throws Error{InvalidConfig} on out-of-range thresholds or duplicate names.
void validate_config(const RunConfig& config);

struct DependencyEntry {
    std::string client;
    std::string source;  // local path or repository URL
    std::string library;
};

// A JSON array of {client, source, library}. (client, library) pairs must be unique.
std::vector<DependencyEntry> dependency_db_from_json(const nlohmann::json& j);
std::vector<DependencyEntry> load_dependency_db(const std::filesystem::path& path);

}  // namespace apiprobe
