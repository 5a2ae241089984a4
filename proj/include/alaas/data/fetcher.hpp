#pragma once

#include <string>

namespace alaas::data {

// One origin read of a URI: file reads directly, http/https/ftp via libcurl.
// s3 URIs must be translated to a gateway URL before reaching this function.
// Throws FetchFailed with the underlying cause; no retries here.
std::string fetch_once(const std::string& uri, int timeout_ms);

}  // namespace alaas::data
