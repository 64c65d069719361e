#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace refind {

enum class ErrorCode {
  kValidation,
  kNotFound,
  kDuplicateId,
  kIo,
  kData,
  kAlignment,
  kTransport,
  kProtocol,
};

std::string_view to_string(ErrorCode code);

// Base of every error raised by the library. Carries a machine-readable code
// and, when the failure is tied to one dataset record, that record's id.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string record_id = {})
      : std::runtime_error(message), code_(code), record_id_(std::move(record_id)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& record_id() const noexcept { return record_id_; }

  // One-line JSON object: {"code": ..., "message": ..., "record_id": ...}.
  std::string to_json() const;

 private:
  ErrorCode code_;
  std::string record_id_;
};

struct ValidationError : Error {
  explicit ValidationError(const std::string& msg) : Error(ErrorCode::kValidation, msg) {}
};

struct NotFoundError : Error {
  explicit NotFoundError(const std::string& msg) : Error(ErrorCode::kNotFound, msg) {}
};

struct DuplicateIdError : Error {
  explicit DuplicateIdError(const std::string& id)
      : Error(ErrorCode::kDuplicateId, "duplicate id: " + id, id) {}
};

struct IoError : Error {
  explicit IoError(const std::string& msg) : Error(ErrorCode::kIo, msg) {}
};

struct DataError : Error {
  explicit DataError(const std::string& msg, std::string record_id = {})
      : Error(ErrorCode::kData, msg, std::move(record_id)) {}
};

// Series lengths disagree with the token count. Fatal for the record only.
struct AlignmentError : Error {
  explicit AlignmentError(const std::string& msg, std::string record_id = {})
      : Error(ErrorCode::kAlignment, msg, std::move(record_id)) {}
};

// Remote endpoint unreachable or timed out. Retriable.
struct TransportError : Error {
  TransportError(const std::string& endpoint, const std::string& detail)
      : Error(ErrorCode::kTransport, "transport failure talking to " + endpoint + ": " + detail),
        endpoint_(endpoint) {}
  const std::string& endpoint() const noexcept { return endpoint_; }

 private:
  std::string endpoint_;
};

struct ProtocolError : Error {
  explicit ProtocolError(const std::string& msg) : Error(ErrorCode::kProtocol, msg) {}
};

}  // namespace refind
