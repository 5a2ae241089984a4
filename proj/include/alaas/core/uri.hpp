#pragma once

#include <string>

namespace alaas::core {

// Supported dataset URI schemes: file, http, https, s3, ftp.
bool is_supported_scheme(const std::string& scheme);

struct Uri {
  std::string scheme;
  std::string rest;  // everything after "scheme://"
  std::string raw;
};

// Splits "scheme://rest". Throws Error(UnsupportedScheme) for unknown schemes
// and Error(InvalidArgument) for strings that are not URIs at all.
Uri parse_uri(const std::string& uri);

// Validation used by manifest checks: non-throwing.
bool is_valid_uri(const std::string& uri);

// file:///path/to/x -> /path/to/x. Requires scheme "file".
std::string file_uri_path(const Uri& uri);

// path -> file:// URI (path made absolute first).
std::string path_to_file_uri(const std::string& path);

// s3://bucket/key split. Requires scheme "s3".
void s3_parts(const Uri& uri, std::string& bucket, std::string& key);

}  // namespace alaas::core
