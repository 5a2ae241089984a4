#pragma once

#include <string>

namespace alaas::data {

// SHA-256 of the bytes as 64 lowercase hex chars.
std::string sha256_hex(const std::string& bytes);

}  // namespace alaas::data
