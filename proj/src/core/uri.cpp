#include "alaas/core/uri.hpp"

#include <filesystem>

#include "alaas/core/error.hpp"

namespace alaas::core {

bool is_supported_scheme(const std::string& scheme) {
  return scheme == "file" || scheme == "http" || scheme == "https" || scheme == "s3" ||
         scheme == "ftp";
}

Uri parse_uri(const std::string& uri) {
  auto sep = uri.find("://");
  if (sep == std::string::npos || sep == 0) {
    throw Error(ErrorCode::InvalidArgument, "not a URI: " + uri);
  }
  Uri out;
  out.scheme = uri.substr(0, sep);
  out.rest = uri.substr(sep + 3);
  out.raw = uri;
  if (!is_supported_scheme(out.scheme)) {
    throw Error(ErrorCode::UnsupportedScheme, "unsupported URI scheme: " + out.scheme);
  }
  if (out.rest.empty()) {
    throw Error(ErrorCode::InvalidArgument, "empty URI body: " + uri);
  }
  return out;
}

bool is_valid_uri(const std::string& uri) {
  try {
    parse_uri(uri);
    return true;
  } catch (const Error&) {
    return false;
  }
}

std::string file_uri_path(const Uri& uri) {
  if (uri.scheme != "file") {
    throw Error(ErrorCode::InvalidArgument, "not a file URI: " + uri.raw);
  }
  // file:///abs/path parses to rest="/abs/path"; file://rel/path is taken as
  // a relative path "rel/path".
  return uri.rest;
}

std::string path_to_file_uri(const std::string& path) {
  auto abs = std::filesystem::absolute(std::filesystem::path(path)).lexically_normal();
  return "file://" + abs.string();
}

void s3_parts(const Uri& uri, std::string& bucket, std::string& key) {
  if (uri.scheme != "s3") {
    throw Error(ErrorCode::InvalidArgument, "not an s3 URI: " + uri.raw);
  }
  auto slash = uri.rest.find('/');
  if (slash == std::string::npos || slash == 0 || slash + 1 >= uri.rest.size()) {
    throw Error(ErrorCode::InvalidArgument, "s3 URI needs bucket/key: " + uri.raw);
  }
  bucket = uri.rest.substr(0, slash);
  key = uri.rest.substr(slash + 1);
}

}  // namespace alaas::core
