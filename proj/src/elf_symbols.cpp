#include "apiprobe/elf_symbols.hpp"
#include "apiprobe/error.hpp"
#include "apiprobe/io.hpp"

#include <elf.h>

#include <bit>
#include <cstddef>
#include <cstring>

namespace apiprobe {

namespace {

// Bounds-checked, byte-order aware view over an ELF image.
class ElfView {
public:
    explicit ElfView(std::span<const std::uint8_t> image) : image_(image) {
        if (image_.size() < EI_NIDENT || std::memcmp(image_.data(), ELFMAG, SELFMAG) != 0)
            throw Error(ErrorCode::NotElf, "missing ELF magic");
        const auto cls = image_[EI_CLASS];
        const auto data = image_[EI_DATA];
        if (cls != ELFCLASS32 && cls != ELFCLASS64) throw Error(ErrorCode::NotElf, "unknown ELF class");
        if (data != ELFDATA2LSB && data != ELFDATA2MSB) throw Error(ErrorCode::NotElf, "unknown ELF data encoding");
        is64_ = cls == ELFCLASS64;
        const bool little = data == ELFDATA2LSB;
        swap_ = little != (std::endian::native == std::endian::little);
        if (image_.size() < (is64_ ? sizeof(Elf64_Ehdr) : sizeof(Elf32_Ehdr)))
            throw Error(ErrorCode::NotElf, "truncated ELF header");
    }

    bool is64() const { return is64_; }

    template <typename T>
    T read(std::size_t off) const {
        if (off > image_.size() || image_.size() - off < sizeof(T))
            throw Error(ErrorCode::NotElf, "read past end of image at offset " + std::to_string(off));
        T v;
        std::memcpy(&v, image_.data() + off, sizeof(T));
        if (swap_) v = byteswap(v);
        return v;
    }

    std::string read_cstring(std::size_t off, std::size_t limit) const {
        if (off >= image_.size() || off >= limit) return {};
        const std::size_t end = std::min(limit, image_.size());
        const auto* begin = reinterpret_cast<const char*>(image_.data() + off);
        const std::size_t max = end - off;
        return std::string(begin, strnlen(begin, max));
    }

    std::size_t size() const { return image_.size(); }

private:
    template <typename T>
    static T byteswap(T v) {
        auto* p = reinterpret_cast<std::uint8_t*>(&v);
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(p[i], p[sizeof(T) - 1 - i]);
        return v;
    }

    std::span<const std::uint8_t> image_;
    bool is64_ = false;
    bool swap_ = false;
};

struct SectionHeader {
    std::uint32_t type = 0;
    std::uint64_t flags = 0;
    std::uint64_t offset = 0;
    std::uint64_t size = 0;
    std::uint32_t link = 0;
    std::uint64_t entsize = 0;
};

std::vector<SectionHeader> read_sections(const ElfView& elf) {
    std::uint64_t shoff;
    std::uint16_t shentsize, shnum;
    if (elf.is64()) {
        shoff = elf.read<std::uint64_t>(offsetof(Elf64_Ehdr, e_shoff));
        shentsize = elf.read<std::uint16_t>(offsetof(Elf64_Ehdr, e_shentsize));
        shnum = elf.read<std::uint16_t>(offsetof(Elf64_Ehdr, e_shnum));
    } else {
        shoff = elf.read<std::uint32_t>(offsetof(Elf32_Ehdr, e_shoff));
        shentsize = elf.read<std::uint16_t>(offsetof(Elf32_Ehdr, e_shentsize));
        shnum = elf.read<std::uint16_t>(offsetof(Elf32_Ehdr, e_shnum));
    }

    std::vector<SectionHeader> out;
    if (shoff == 0) return out;

    std::uint64_t count = shnum;
    if (count == 0) {
        // Extended numbering: the real count lives in section 0's sh_size.
        count = elf.is64() ? elf.read<std::uint64_t>(shoff + offsetof(Elf64_Shdr, sh_size))
                           : elf.read<std::uint32_t>(shoff + offsetof(Elf32_Shdr, sh_size));
    }
    const std::size_t min_entsize = elf.is64() ? sizeof(Elf64_Shdr) : sizeof(Elf32_Shdr);
    if (count > 0 && shentsize < min_entsize) throw Error(ErrorCode::NotElf, "bad section header size");
    if (count > elf.size() / std::max<std::size_t>(shentsize, 1))
        throw Error(ErrorCode::NotElf, "section header count exceeds image size");

    out.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        const std::size_t base = shoff + i * shentsize;
        SectionHeader sh;
        if (elf.is64()) {
            sh.type = elf.read<std::uint32_t>(base + offsetof(Elf64_Shdr, sh_type));
            sh.flags = elf.read<std::uint64_t>(base + offsetof(Elf64_Shdr, sh_flags));
            sh.offset = elf.read<std::uint64_t>(base + offsetof(Elf64_Shdr, sh_offset));
            sh.size = elf.read<std::uint64_t>(base + offsetof(Elf64_Shdr, sh_size));
            sh.link = elf.read<std::uint32_t>(base + offsetof(Elf64_Shdr, sh_link));
            sh.entsize = elf.read<std::uint64_t>(base + offsetof(Elf64_Shdr, sh_entsize));
        } else {
            sh.type = elf.read<std::uint32_t>(base + offsetof(Elf32_Shdr, sh_type));
            sh.flags = elf.read<std::uint32_t>(base + offsetof(Elf32_Shdr, sh_flags));
            sh.offset = elf.read<std::uint32_t>(base + offsetof(Elf32_Shdr, sh_offset));
            sh.size = elf.read<std::uint32_t>(base + offsetof(Elf32_Shdr, sh_size));
            sh.link = elf.read<std::uint32_t>(base + offsetof(Elf32_Shdr, sh_link));
            sh.entsize = elf.read<std::uint32_t>(base + offsetof(Elf32_Shdr, sh_entsize));
        }
        out.push_back(sh);
    }
    return out;
}

}  // namespace

bool DynamicSymbol::is_exported_text() const {
    return binding == STB_GLOBAL && type != STT_GNU_IFUNC && section_index != SHN_UNDEF &&
           section_index < SHN_LORESERVE && in_executable_section;
}

std::vector<DynamicSymbol> read_dynamic_symbols(std::span<const std::uint8_t> image) {
    const ElfView elf(image);
    const auto sections = read_sections(elf);

    const SectionHeader* dynsym = nullptr;
    for (const auto& sh : sections) {
        if (sh.type == SHT_DYNSYM) {
            dynsym = &sh;
            break;
        }
    }
    if (dynsym == nullptr) throw Error(ErrorCode::NoDynamicSymbols, "no .dynsym section");
    if (dynsym->link >= sections.size()) throw Error(ErrorCode::NotElf, ".dynsym has no string table");
    const SectionHeader& strtab = sections[dynsym->link];

    const std::size_t symsize = elf.is64() ? sizeof(Elf64_Sym) : sizeof(Elf32_Sym);
    const std::size_t entsize = dynsym->entsize != 0 ? dynsym->entsize : symsize;
    if (entsize < symsize) throw Error(ErrorCode::NotElf, "bad dynamic symbol entry size");
    const std::uint64_t count = dynsym->size / entsize;
    if (dynsym->offset > elf.size() || count > (elf.size() - dynsym->offset) / entsize)
        throw Error(ErrorCode::NotElf, ".dynsym extends past end of image");

    const std::size_t str_end = strtab.offset + strtab.size;
    std::vector<DynamicSymbol> out;
    out.reserve(count);
    // Entry 0 is the reserved null symbol.
    for (std::uint64_t i = 1; i < count; ++i) {
        const std::size_t base = dynsym->offset + i * entsize;
        std::uint32_t name_off;
        std::uint8_t info;
        std::uint16_t shndx;
        if (elf.is64()) {
            name_off = elf.read<std::uint32_t>(base + offsetof(Elf64_Sym, st_name));
            info = elf.read<std::uint8_t>(base + offsetof(Elf64_Sym, st_info));
            shndx = elf.read<std::uint16_t>(base + offsetof(Elf64_Sym, st_shndx));
        } else {
            name_off = elf.read<std::uint32_t>(base + offsetof(Elf32_Sym, st_name));
            info = elf.read<std::uint8_t>(base + offsetof(Elf32_Sym, st_info));
            shndx = elf.read<std::uint16_t>(base + offsetof(Elf32_Sym, st_shndx));
        }

        DynamicSymbol sym;
        sym.name = elf.read_cstring(strtab.offset + name_off, str_end);
        sym.binding = static_cast<std::uint8_t>(info >> 4);
        sym.type = static_cast<std::uint8_t>(info & 0xf);
        sym.section_index = shndx;
        sym.in_executable_section =
            shndx != SHN_UNDEF && shndx < sections.size() && (sections[shndx].flags & SHF_EXECINSTR) != 0;
        if (!sym.name.empty()) out.push_back(std::move(sym));
    }
    return out;
}

std::vector<DynamicSymbol> read_dynamic_symbols(const std::filesystem::path& shared_object) {
    if (!std::filesystem::is_regular_file(shared_object))
        throw Error(ErrorCode::NotElf, "not a regular file: " + shared_object.string());
    const auto bytes = read_binary_file(shared_object);
    try {
        return read_dynamic_symbols(std::span<const std::uint8_t>(bytes));
    } catch (const Error& e) {
        throw Error(e.code(), shared_object.string() + ": " + e.detail());
    }
}

std::string strip_symbol_version(std::string_view name) {
    const auto at = name.find('@');
    return std::string(at == std::string_view::npos ? name : name.substr(0, at));
}

std::set<std::string> extract_exported_symbols(const std::filesystem::path& shared_object) {
    std::set<std::string> names;
    for (const auto& sym : read_dynamic_symbols(shared_object))
        if (sym.is_exported_text()) names.insert(strip_symbol_version(sym.name));
    return names;
}

}  // namespace apiprobe
