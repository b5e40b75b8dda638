#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gendfir {

enum class ErrorCode {
    // usage
    InvalidArgument,
    InvalidConfig,
    FileNotFound,
    // data
    EmptyInput,
    RaggedRow,
    SplitterCollision,
    EventTooLong,
    TokenBudgetExceeded,
    EmptyText,
    DimensionMismatch,
    ProviderMismatch,
    NonFiniteValue,
    ZeroVector,
    CorruptFile,
    EmptyEvidence,
    EmptyContext,
    EmptyLedger,
    EmptyResults,
    FractionalVerdict,
    OutOfRange,
    MalformedResponse,
    Io,
    // transport
    ProviderUnavailable,
    GeneratorUnavailable,
};

/// Coarse classification used for process exit codes.
enum class ErrorKind { Usage = 1, Data = 2, Transport = 3 };

constexpr std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::FileNotFound: return "FileNotFound";
        case ErrorCode::EmptyInput: return "EmptyInput";
        case ErrorCode::RaggedRow: return "RaggedRow";
        case ErrorCode::SplitterCollision: return "SplitterCollision";
        case ErrorCode::EventTooLong: return "EventTooLong";
        case ErrorCode::TokenBudgetExceeded: return "TokenBudgetExceeded";
        case ErrorCode::EmptyText: return "EmptyText";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::ProviderMismatch: return "ProviderMismatch";
        case ErrorCode::NonFiniteValue: return "NonFiniteValue";
        case ErrorCode::ZeroVector: return "ZeroVector";
        case ErrorCode::CorruptFile: return "CorruptFile";
        case ErrorCode::EmptyEvidence: return "EmptyEvidence";
        case ErrorCode::EmptyContext: return "EmptyContext";
        case ErrorCode::EmptyLedger: return "EmptyLedger";
        case ErrorCode::EmptyResults: return "EmptyResults";
        case ErrorCode::FractionalVerdict: return "FractionalVerdict";
        case ErrorCode::OutOfRange: return "OutOfRange";
        case ErrorCode::MalformedResponse: return "MalformedResponse";
        case ErrorCode::Io: return "Io";
        case ErrorCode::ProviderUnavailable: return "ProviderUnavailable";
        case ErrorCode::GeneratorUnavailable: return "GeneratorUnavailable";
    }
    return "Unknown";
}

constexpr ErrorKind kind_of(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument:
        case ErrorCode::InvalidConfig:
        case ErrorCode::FileNotFound:
            return ErrorKind::Usage;
        case ErrorCode::ProviderUnavailable:
        case ErrorCode::GeneratorUnavailable:
            return ErrorKind::Transport;
        default:
            return ErrorKind::Data;
    }
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }
    ErrorKind kind() const noexcept { return kind_of(code_); }

    /// Same error, message prefixed with the pipeline stage that raised it.
    Error tagged(std::string_view stage) const {
        Error e = *this;
        static_cast<std::runtime_error&>(e) =
            std::runtime_error("[" + std::string(stage) + "] " + what());
        return e;
    }

private:
    ErrorCode code_;
};

}  // namespace gendfir
