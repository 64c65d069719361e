#pragma once

#include <string>

#include <nlohmann/json.hpp>

namespace refind::http {

// POSTs `body` as JSON to `url` ("http://host[:port]/path") and parses the
// JSON reply. Connection failures, timeouts and 5xx replies raise
// TransportError; other non-2xx replies and unparsable bodies raise
// ProtocolError.
nlohmann::json post_json(const std::string& url, const nlohmann::json& body, int timeout_seconds);

}  // namespace refind::http
