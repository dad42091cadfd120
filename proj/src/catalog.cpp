#include "apiprobe/catalog.hpp"
#include "apiprobe/elf_symbols.hpp"
#include "apiprobe/error.hpp"
#include "apiprobe/io.hpp"
#include "apiprobe/lexer.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>

namespace apiprobe {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

bool is_header_file(const fs::path& p) {
    const auto ext = p.extension().string();
    return ext == ".h" || ext == ".hh" || ext == ".hpp" || ext == ".hxx";
}

template <typename T>
json optional_to_json(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

template <typename T>
std::optional<T> optional_from_json(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<T>();
}

ApiSymbol make_symbol(const std::string& name) {
    ApiSymbol s;
    s.name = name;
    return s;
}

}  // namespace

std::optional<double> ApiSymbol::coverage_pct() const {
    if (!eloc || *eloc == 0 || !covered_lines) return std::nullopt;
    return 100.0 * static_cast<double>(*covered_lines) / static_cast<double>(*eloc);
}

std::set<std::string> ApiCatalog::names() const {
    std::set<std::string> out;
    for (const auto& [name, _] : apis) out.insert(name);
    return out;
}

bool is_c_identifier(std::string_view s) {
    if (s.empty() || !is_ident_start(s.front())) return false;
    return std::all_of(s.begin(), s.end(), is_ident_char);
}

std::set<std::string> harvest_header_identifiers(const fs::path& header_root, Diagnostics& diag) {
    std::error_code ec;
    if (!fs::is_directory(header_root, ec))
        throw Error(ErrorCode::EmptyHeaderSet, "header root is not a directory: " + header_root.string());

    std::vector<fs::path> headers;
    for (auto it = fs::recursive_directory_iterator(header_root, fs::directory_options::skip_permission_denied, ec);
         !ec && it != fs::recursive_directory_iterator(); it.increment(ec)) {
        if (it->is_regular_file(ec) && is_header_file(it->path())) headers.push_back(it->path());
    }
    if (ec) diag.warn("header_walk", ec.message(), {{"root", header_root.string()}});
    if (headers.empty()) throw Error(ErrorCode::EmptyHeaderSet, "no header files under " + header_root.string());

    std::sort(headers.begin(), headers.end());
    std::set<std::string> idents;
    for (const auto& h : headers) {
        std::string text;
        try {
            text = read_text_file(h);
        } catch (const Error& e) {
            diag.warn("skip_header", e.detail(), {{"path", h.string()}});
            continue;
        }
        for_each_identifier(text, [&](std::string_view tok, std::size_t) { idents.emplace(tok); });
    }
    return idents;
}

ApiCatalog build_catalog(const LibrarySpec& spec, Diagnostics& diag) {
    if (spec.shared_objects.empty())
        throw Error(ErrorCode::InvalidConfig, "library " + spec.name + " lists no shared objects");

    std::set<std::string> exported;
    for (const auto& so : spec.shared_objects) {
        const auto names = extract_exported_symbols(so);
        diag.info("shared_object", "extracted exported symbols",
                  {{"path", so.string()}, {"count", std::to_string(names.size())}});
        exported.insert(names.begin(), names.end());
    }
    const auto header_idents = harvest_header_identifiers(spec.header_root, diag);

    ApiCatalog catalog;
    catalog.library = spec.name;
    catalog.created_at = utc_timestamp();
    for (const auto& so : spec.shared_objects) catalog.provenance.shared_objects.push_back(so.string());
    catalog.provenance.header_root = spec.header_root.string();

    for (const auto& name : exported) {
        if (header_idents.contains(name)) catalog.apis.emplace(name, make_symbol(name));
    }
    if (catalog.apis.empty())
        throw Error(ErrorCode::EmptyCatalog,
                    "no exported symbol of " + spec.name + " occurs in headers under " + spec.header_root.string());
    return catalog;
}

ApiCatalog make_catalog(std::string library, const std::vector<std::string>& names) {
    ApiCatalog catalog;
    catalog.library = std::move(library);
    for (const auto& n : names) catalog.apis.emplace(n, make_symbol(n));
    return catalog;
}

json catalog_to_json(const ApiCatalog& catalog) {
    json apis = json::array();
    for (const auto& [name, api] : catalog.apis) {
        apis.push_back({{"name", name},
                        {"defining_file", optional_to_json(api.defining_file)},
                        {"entry_start", optional_to_json(api.entry_start)},
                        {"entry_end", optional_to_json(api.entry_end)},
                        {"eloc", optional_to_json(api.eloc)},
                        {"covered_lines", optional_to_json(api.covered_lines)}});
    }
    json prov = {{"shared_objects", catalog.provenance.shared_objects},
                 {"header_root", catalog.provenance.header_root}};
    if (catalog.provenance.coverage_source) prov["coverage_source"] = *catalog.provenance.coverage_source;
    if (catalog.provenance.total_coverage_pct) prov["total_coverage_pct"] = *catalog.provenance.total_coverage_pct;
    return {{"schema_version", kSchemaVersion},
            {"library", catalog.library},
            {"created_at", catalog.created_at},
            {"apis", std::move(apis)},
            {"provenance", std::move(prov)}};
}

ApiCatalog catalog_from_json(const json& j) {
    check_schema_version(j, "catalog");
    ApiCatalog catalog;
    try {
        catalog.library = j.at("library").get<std::string>();
        catalog.created_at = j.value("created_at", "");
        for (const auto& a : j.at("apis")) {
            ApiSymbol api;
            api.name = a.at("name").get<std::string>();
            api.defining_file = optional_from_json<std::string>(a, "defining_file");
            api.entry_start = optional_from_json<std::uint32_t>(a, "entry_start");
            api.entry_end = optional_from_json<std::uint32_t>(a, "entry_end");
            api.eloc = optional_from_json<std::uint64_t>(a, "eloc");
            api.covered_lines = optional_from_json<std::uint64_t>(a, "covered_lines");
            if (!is_c_identifier(api.name))
                throw Error(ErrorCode::InvalidConfig, "catalog entry is not a C identifier: " + api.name);
            catalog.apis.emplace(api.name, std::move(api));
        }
        if (j.contains("provenance")) {
            const auto& p = j.at("provenance");
            catalog.provenance.shared_objects = p.value("shared_objects", std::vector<std::string>{});
            catalog.provenance.header_root = p.value("header_root", "");
            catalog.provenance.coverage_source = optional_from_json<std::string>(p, "coverage_source");
            catalog.provenance.total_coverage_pct = optional_from_json<double>(p, "total_coverage_pct");
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, std::string("malformed catalog: ") + e.what());
    }
    return catalog;
}

void save_catalog(const ApiCatalog& catalog, const fs::path& path) {
    write_text_file(path, catalog_to_json(catalog).dump(2) + "\n");
}

ApiCatalog load_catalog(const fs::path& path) {
    if (!fs::exists(path)) throw Error(ErrorCode::MissingCatalog, "no catalog at " + path.string());
    json j;
    try {
        j = json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::InvalidConfig, path.string() + ": " + e.what());
    }
    return catalog_from_json(j);
}

void check_schema_version(const json& j, const std::string& what) {
    if (!j.is_object() || !j.contains("schema_version") || !j.at("schema_version").is_string())
        throw Error(ErrorCode::SchemaVersion, what + " has no schema_version");
    const auto v = j.at("schema_version").get<std::string>();
    const std::string ours = kSchemaVersion;
    const auto major = [](const std::string& s) { return s.substr(0, s.find('.')); };
    if (major(v) != major(ours))
        throw Error(ErrorCode::SchemaVersion, what + " schema " + v + " is not compatible with " + ours);
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace apiprobe
