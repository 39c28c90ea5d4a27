#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rplan {

// Every failure the library reports. The C API maps these onto rplan_status.
enum class ErrorCode {
    InvalidArgument,
    AppendToTerminal,
    MaxLengthExceeded,
    ParseError,
    InvalidPuzzle,
    OperandMissing,
    DivisionByZero,
    ResultMismatch,
    TerminalPool,
    IoError,
    SchemaError,
    EmptyQuery,
    UnknownProduct,
    NoValidActions,
    MissingAction,
    PolicyError,
    RemoteError,
    TimeoutError,
    DimensionMismatch,
    EmptyDataset,
    DivergenceDetected,
    MissingPrice,
    ScoreParseError,
    ContractError,
    NegativeConstructionFailed,
    ConfigError,
};

std::string_view error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message)
        , code_(code)
    {
    }

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

// HTTP failure after retries; carries the last status (0 when no response) and a body excerpt.
class RemoteError : public Error {
public:
    RemoteError(int status, std::string body_excerpt, const std::string& message)
        : Error(ErrorCode::RemoteError, message)
        , status_(status)
        , body_excerpt_(std::move(body_excerpt))
    {
    }

    int status() const noexcept { return status_; }
    const std::string& body_excerpt() const noexcept { return body_excerpt_; }

private:
    int status_;
    std::string body_excerpt_;
};

} // namespace rplan
