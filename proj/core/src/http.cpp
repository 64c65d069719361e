#include "refind/http.hpp"

#include <httplib.h>

#include <fmt/format.h>

#include "refind/error.hpp"

namespace refind::http {

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ValidationError(fmt::format("endpoint '{}' is not an http URL", url));
  const auto scheme = url.substr(0, scheme_end);
  if (scheme != "http") throw ValidationError(fmt::format("endpoint '{}': only http:// is supported", url));
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

nlohmann::json post_json(const std::string& url, const nlohmann::json& body, int timeout_seconds) {
  const auto target = split_url(url);
  httplib::Client client(target.origin);
  client.set_connection_timeout(timeout_seconds, 0);
  client.set_read_timeout(timeout_seconds, 0);
  client.set_write_timeout(timeout_seconds, 0);
  auto res = client.Post(target.path, body.dump(), "application/json");
  if (!res) throw TransportError(url, httplib::to_string(res.error()));
  if (res->status >= 500) throw TransportError(url, fmt::format("HTTP {}", res->status));
  if (res->status < 200 || res->status >= 300) {
    throw ProtocolError(fmt::format("{} answered HTTP {}", url, res->status));
  }
  try {
    return nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(fmt::format("{} returned malformed JSON: {}", url, e.what()));
  }
}

}  // namespace refind::http
