#pragma once

#include "apiprobe/catalog.hpp"
#include "apiprobe/diagnostics.hpp"

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace apiprobe {

enum class ExclusionRule { Submodule, Overlap, Explicit };
std::string_view to_string(ExclusionRule rule);

// A client checkout ready for scanning. Excluded paths are relative to root,
// with forward slashes.
struct ClientRecord {
    std::string client_id;
    std::filesystem::path root;
    std::set<std::string> excluded_dirs;
    std::set<std::string> excluded_files;
    std::map<std::string, ExclusionRule> rules;  // path -> why it was excluded

    bool operator==(const ClientRecord&) const = default;
};

// Library source directory -> base names of every file below it.
struct LibraryInventory {
    std::map<std::string, std::set<std::string>> dirs;
};

struct OverlapOptions {
    double threshold = 0.8;
    std::size_t min_lib_files = 3;
};

bool is_c_family_source(const std::filesystem::path& p);

// Values of "path =" keys inside [submodule "..."] sections, in file order.
std::vector<std::string> parse_submodule_manifest(std::string_view content,
                                                  Diagnostics& diag = Diagnostics::discard());

LibraryInventory build_library_inventory(const std::vector<std::filesystem::path>& source_roots,
                                         Diagnostics& diag = Diagnostics::discard());

// Topmost client directories whose recursive file-name set overlaps some
// library directory by at least `threshold` (measured on the client side).
// `skip` lists relative directories that are not descended into.
std::set<std::string> detect_vendored_dirs(const std::filesystem::path& client_root, const LibraryInventory& inv,
                                           OverlapOptions options = {}, const std::set<std::string>& skip = {});

ClientRecord prepare_client(const std::string& client_id, const std::filesystem::path& root, const LibrarySpec& spec,
                            const LibraryInventory& inv, OverlapOptions options = {},
                            Diagnostics& diag = Diagnostics::discard());

// True when rel (a relative path) is an excluded file or lies under an
// excluded directory.
bool is_excluded(const ClientRecord& rec, std::string_view rel);

nlohmann::json client_record_to_json(const ClientRecord& rec);

}  // namespace apiprobe
