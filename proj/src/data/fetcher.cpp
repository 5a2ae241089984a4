#include "alaas/data/fetcher.hpp"

#include <curl/curl.h>

#include <mutex>

#include "alaas/core/error.hpp"
#include "alaas/core/fsutil.hpp"
#include "alaas/core/uri.hpp"

namespace alaas::data {

using core::Error;
using core::ErrorCode;

namespace {

std::size_t append_cb(char* ptr, std::size_t size, std::size_t nmemb, void* user) {
  auto* buf = static_cast<std::string*>(user);
  buf->append(ptr, size * nmemb);
  return size * nmemb;
}

void ensure_curl_init() {
  static std::once_flag once;
  std::call_once(once, [] { curl_global_init(CURL_GLOBAL_DEFAULT); });
}

std::string curl_fetch(const std::string& url, int timeout_ms) {
  ensure_curl_init();
  CURL* h = curl_easy_init();
  if (!h) throw Error(ErrorCode::FetchFailed, "curl init failed for " + url);
  std::string buf;
  curl_easy_setopt(h, CURLOPT_URL, url.c_str());
  curl_easy_setopt(h, CURLOPT_WRITEFUNCTION, append_cb);
  curl_easy_setopt(h, CURLOPT_WRITEDATA, &buf);
  curl_easy_setopt(h, CURLOPT_TIMEOUT_MS, static_cast<long>(timeout_ms));
  curl_easy_setopt(h, CURLOPT_CONNECTTIMEOUT_MS, static_cast<long>(timeout_ms));
  curl_easy_setopt(h, CURLOPT_FOLLOWLOCATION, 1L);
  curl_easy_setopt(h, CURLOPT_NOSIGNAL, 1L);  // libcurl + threads
  CURLcode rc = curl_easy_perform(h);
  long status = 0;
  curl_easy_getinfo(h, CURLINFO_RESPONSE_CODE, &status);
  curl_easy_cleanup(h);
  if (rc != CURLE_OK) {
    throw Error(ErrorCode::FetchFailed,
                url + ": " + curl_easy_strerror(rc));
  }
  if (status >= 400) {
    throw Error(ErrorCode::FetchFailed, url + ": HTTP " + std::to_string(status));
  }
  return buf;
}

}  // namespace

std::string fetch_once(const std::string& uri, int timeout_ms) {
  core::Uri parsed = core::parse_uri(uri);
  if (parsed.scheme == "file") {
    auto bytes = core::read_file(core::file_uri_path(parsed));
    if (!bytes) {
      throw Error(ErrorCode::FetchFailed, uri + ": cannot read file");
    }
    return *bytes;
  }
  if (parsed.scheme == "s3") {
    throw Error(ErrorCode::FetchFailed,
                uri + ": s3 requires a configured gateway template");
  }
  return curl_fetch(uri, timeout_ms);
}

}  // namespace alaas::data
