#include "refind/error.hpp"

#include <nlohmann/json.hpp>

namespace refind {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kValidation: return "validation";
    case ErrorCode::kNotFound: return "not_found";
    case ErrorCode::kDuplicateId: return "duplicate_id";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kData: return "data";
    case ErrorCode::kAlignment: return "alignment";
    case ErrorCode::kTransport: return "transport";
    case ErrorCode::kProtocol: return "protocol";
  }
  return "unknown";
}

std::string Error::to_json() const {
  nlohmann::json j;
  j["code"] = std::string(to_string(code_));
  j["message"] = what();
  j["record_id"] = record_id_.empty() ? nlohmann::json(nullptr) : nlohmann::json(record_id_);
  return j.dump();
}

}  // namespace refind
