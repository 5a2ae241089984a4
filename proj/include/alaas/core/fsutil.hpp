#pragma once

#include <filesystem>
#include <optional>
#include <string>

namespace alaas::core {

// Write-temp-then-rename; readers never observe a partial file.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

std::optional<std::string> read_file(const std::filesystem::path& path);

}  // namespace alaas::core
