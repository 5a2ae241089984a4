#include "alaas/core/error.hpp"

#include <array>

namespace alaas::core {

namespace {

constexpr std::array kAllCodes = {
    ErrorCode::DuplicateUri,    ErrorCode::IdPositionMismatch,
    ErrorCode::UnsupportedScheme, ErrorCode::EmptyDataset,
    ErrorCode::BudgetExceedsPool, ErrorCode::DimensionMismatch,
    ErrorCode::RowMisalignment, ErrorCode::MissingInput,
    ErrorCode::MalformedMatrix, ErrorCode::MalformedRow,
    ErrorCode::FetchFailed,     ErrorCode::HashMismatch,
    ErrorCode::CacheWriteFailed, ErrorCode::BackendUnavailable,
    ErrorCode::MalformedResponse, ErrorCode::BatchTooLarge,
    ErrorCode::EmptyPayload,    ErrorCode::Cancelled,
    ErrorCode::UnknownDataset,  ErrorCode::UnknownJob,
    ErrorCode::ParseError,      ErrorCode::UnknownKey,
    ErrorCode::InvalidValue,    ErrorCode::BindFailed,
    ErrorCode::ScenarioMismatch, ErrorCode::JobFailed,
    ErrorCode::PollTimeout,     ErrorCode::ServerUnreachable,
    ErrorCode::ServerError,     ErrorCode::InvalidArgument,
};

}  // namespace

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::DuplicateUri: return "DuplicateUri";
    case ErrorCode::IdPositionMismatch: return "IdPositionMismatch";
    case ErrorCode::UnsupportedScheme: return "UnsupportedScheme";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::BudgetExceedsPool: return "BudgetExceedsPool";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::RowMisalignment: return "RowMisalignment";
    case ErrorCode::MissingInput: return "MissingInput";
    case ErrorCode::MalformedMatrix: return "MalformedMatrix";
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::FetchFailed: return "FetchFailed";
    case ErrorCode::HashMismatch: return "HashMismatch";
    case ErrorCode::CacheWriteFailed: return "CacheWriteFailed";
    case ErrorCode::BackendUnavailable: return "BackendUnavailable";
    case ErrorCode::MalformedResponse: return "MalformedResponse";
    case ErrorCode::BatchTooLarge: return "BatchTooLarge";
    case ErrorCode::EmptyPayload: return "EmptyPayload";
    case ErrorCode::Cancelled: return "Cancelled";
    case ErrorCode::UnknownDataset: return "UnknownDataset";
    case ErrorCode::UnknownJob: return "UnknownJob";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::UnknownKey: return "UnknownKey";
    case ErrorCode::InvalidValue: return "InvalidValue";
    case ErrorCode::BindFailed: return "BindFailed";
    case ErrorCode::ScenarioMismatch: return "ScenarioMismatch";
    case ErrorCode::JobFailed: return "JobFailed";
    case ErrorCode::PollTimeout: return "PollTimeout";
    case ErrorCode::ServerUnreachable: return "ServerUnreachable";
    case ErrorCode::ServerError: return "ServerError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

std::optional<ErrorCode> error_code_from_name(const std::string& name) {
  for (ErrorCode code : kAllCodes) {
    if (name == error_code_name(code)) return code;
  }
  return std::nullopt;
}

}  // namespace alaas::core
