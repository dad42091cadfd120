#pragma once

#include "apiprobe/diagnostics.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace apiprobe {

inline constexpr const char* kSchemaVersion = "1.0";

struct LibrarySpec {
    std::string name;
    std::vector<std::filesystem::path> shared_objects;
    std::filesystem::path header_root;
    std::vector<std::filesystem::path> source_roots;
    std::vector<std::string> explicit_file_excludes;
};

// A public API and, once coverage is attached, the size and coverage of its
// entry function. Unannotated APIs have every optional empty.
struct ApiSymbol {
    std::string name;
    std::optional<std::string> defining_file;
    std::optional<std::uint32_t> entry_start;
    std::optional<std::uint32_t> entry_end;
    std::optional<std::uint64_t> eloc;
    std::optional<std::uint64_t> covered_lines;

    bool annotated() const { return eloc.has_value(); }
    // Absent when unannotated or eloc == 0.
    std::optional<double> coverage_pct() const;

    bool operator==(const ApiSymbol&) const = default;
};

struct CatalogProvenance {
    std::vector<std::string> shared_objects;
    std::string header_root;
    std::optional<std::string> coverage_source;
    std::optional<double> total_coverage_pct;  // overall line coverage of the annotating tracefile

    bool operator==(const CatalogProvenance&) const = default;
};

struct ApiCatalog {
    std::string library;
    std::map<std::string, ApiSymbol> apis;
    std::string created_at;
    CatalogProvenance provenance;

    std::size_t size() const { return apis.size(); }
    bool contains(const std::string& name) const { return apis.contains(name); }
    std::set<std::string> names() const;
};

bool is_c_identifier(std::string_view s);

// All identifier tokens in header files (.h/.hh/.hpp/.hxx) below header_root.
// Comments and preprocessor structure are not interpreted. Throws
// Error{EmptyHeaderSet} when no header file exists.
std::set<std::string> harvest_header_identifiers(const std::filesystem::path& header_root,
                                                 Diagnostics& diag = Diagnostics::discard());

// Exported text symbols of every shared object, intersected with the header
// identifiers. Throws Error{EmptyCatalog} if nothing survives.
ApiCatalog build_catalog(const LibrarySpec& spec, Diagnostics& diag = Diagnostics::discard());

// Catalog built from an explicit name list, used for synthetic corpora.
ApiCatalog make_catalog(std::string library, const std::vector<std::string>& names);

nlohmann::json catalog_to_json(const ApiCatalog& catalog);
ApiCatalog catalog_from_json(const nlohmann::json& j);
void save_catalog(const ApiCatalog& catalog, const std::filesystem::path& path);
ApiCatalog load_catalog(const std::filesystem::path& path);

// Rejects artifacts whose schema major version differs from ours.
void check_schema_version(const nlohmann::json& j, const std::string& what);

std::string utc_timestamp();

}  // namespace apiprobe
