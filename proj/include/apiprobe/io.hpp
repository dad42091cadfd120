#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace apiprobe {

// Whole-file helpers. Failures raise Error{IoFailure} naming the path.
std::string read_text_file(const std::filesystem::path& path);
std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

// Forward-slash relative path of `path` under `root`; empty when not inside.
std::string relative_inside(const std::filesystem::path& path, const std::filesystem::path& root);

}  // namespace apiprobe
