#include "apiprobe/io.hpp"
#include "apiprobe/error.hpp"

#include <fstream>
#include <iterator>
#include <sstream>

namespace apiprobe {

namespace fs = std::filesystem;

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw Error(ErrorCode::IoFailure, "read failed: " + path.string());
    return std::move(ss).str();
}

std::vector<std::uint8_t> read_binary_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text_file(const fs::path& path, const std::string& content) {
    std::error_code ec;
    if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
    if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + path.parent_path().string());

    // Write to a sibling temp file first so readers never see a torn artifact.
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + tmp.string());
        out << content;
        if (!out.flush()) throw Error(ErrorCode::IoFailure, "write failed: " + tmp.string());
    }
    fs::rename(tmp, path, ec);
    if (ec) throw Error(ErrorCode::IoFailure, "cannot rename onto " + path.string());
}

std::string relative_inside(const fs::path& path, const fs::path& root) {
    const fs::path rel = path.lexically_normal().lexically_relative(root.lexically_normal());
    if (rel.empty()) return {};
    const std::string s = rel.generic_string();
    if (s == ".") return s;
    if (s.starts_with("..")) return {};
    return s;
}

}  // namespace apiprobe
