#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace alaas::core {

// Machine-readable error codes. These are the exact strings carried in the
// "code" field of wire-protocol error bodies and CLI diagnostics.
enum class ErrorCode {
  DuplicateUri,
  IdPositionMismatch,
  UnsupportedScheme,
  EmptyDataset,
  BudgetExceedsPool,
  DimensionMismatch,
  RowMisalignment,
  MissingInput,
  MalformedMatrix,
  MalformedRow,
  FetchFailed,
  HashMismatch,
  CacheWriteFailed,
  BackendUnavailable,
  MalformedResponse,
  BatchTooLarge,
  EmptyPayload,
  Cancelled,
  UnknownDataset,
  UnknownJob,
  ParseError,
  UnknownKey,
  InvalidValue,
  BindFailed,
  ScenarioMismatch,
  JobFailed,
  PollTimeout,
  ServerUnreachable,
  ServerError,
  InvalidArgument,
};

const char* error_code_name(ErrorCode code);

// Inverse of error_code_name; nullopt for unrecognized names. Lets a client
// rethrow the server's machine-readable code as the original ErrorCode.
std::optional<ErrorCode> error_code_from_name(const std::string& name);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message)
      : std::runtime_error(std::move(message)), code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  const char* code_name() const noexcept { return error_code_name(code_); }

 private:
  ErrorCode code_;
};

}  // namespace alaas::core
