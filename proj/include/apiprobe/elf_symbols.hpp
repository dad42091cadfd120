#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace apiprobe {

// One entry of an ELF dynamic symbol table (.dynsym).
struct DynamicSymbol {
    std::string name;
    std::uint8_t binding = 0;  // STB_*
    std::uint8_t type = 0;     // STT_*
    std::uint16_t section_index = 0;
    bool in_executable_section = false;

    // nm's " T " class: global, defined, and placed in a code section.
    bool is_exported_text() const;
};

// Parses the dynamic symbol table out of an in-memory ELF image. Handles both
// ELF classes and byte orders. Throws Error{NotElf} or Error{NoDynamicSymbols}.
std::vector<DynamicSymbol> read_dynamic_symbols(std::span<const std::uint8_t> image);
std::vector<DynamicSymbol> read_dynamic_symbols(const std::filesystem::path& shared_object);

// Strips a symbol version suffix ("foo@@V1" -> "foo").
std::string strip_symbol_version(std::string_view name);

// Names of exported text symbols, version suffixes removed. Mangled names are
// kept verbatim.
std::set<std::string> extract_exported_symbols(const std::filesystem::path& shared_object);

}  // namespace apiprobe
