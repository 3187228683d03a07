#pragma once

#include <stdexcept>
#include <string>

namespace loopin {

enum class ErrorCode {
    InsufficientBalance,
    ZeroAmount,
    UnauthorizedMint,
    Overflow,
    CertificateAlreadyUsed,
    DurationNotEpochMultiple,
    InsufficientDeposit,
    OutputRoundsToZero,
    PoolDrained,
    WrongMode,
    PositionNotActive,
    NotEpochBoundary,
    DegenerateKey,
    BadParams,
    IndexOutOfRange,
    MalformedChain,
    NoActivePositions,
    BadRate,
    DegenerateRates,
    MalfunctionAfterExpiry,
    ConfigInvalid,
    UnknownParameter,
    LogCorrupt,
};

inline const char* error_name(ErrorCode c) {
    switch (c) {
        case ErrorCode::InsufficientBalance: return "InsufficientBalance";
        case ErrorCode::ZeroAmount: return "ZeroAmount";
        case ErrorCode::UnauthorizedMint: return "UnauthorizedMint";
        case ErrorCode::Overflow: return "Overflow";
        case ErrorCode::CertificateAlreadyUsed: return "CertificateAlreadyUsed";
        case ErrorCode::DurationNotEpochMultiple: return "DurationNotEpochMultiple";
        case ErrorCode::InsufficientDeposit: return "InsufficientDeposit";
        case ErrorCode::OutputRoundsToZero: return "OutputRoundsToZero";
        case ErrorCode::PoolDrained: return "PoolDrained";
        case ErrorCode::WrongMode: return "WrongMode";
        case ErrorCode::PositionNotActive: return "PositionNotActive";
        case ErrorCode::NotEpochBoundary: return "NotEpochBoundary";
        case ErrorCode::DegenerateKey: return "DegenerateKey";
        case ErrorCode::BadParams: return "BadParams";
        case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
        case ErrorCode::MalformedChain: return "MalformedChain";
        case ErrorCode::NoActivePositions: return "NoActivePositions";
        case ErrorCode::BadRate: return "BadRate";
        case ErrorCode::DegenerateRates: return "DegenerateRates";
        case ErrorCode::MalfunctionAfterExpiry: return "MalfunctionAfterExpiry";
        case ErrorCode::ConfigInvalid: return "ConfigInvalid";
        case ErrorCode::UnknownParameter: return "UnknownParameter";
        case ErrorCode::LogCorrupt: return "LogCorrupt";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string detail = {})
        : std::runtime_error(std::string(error_name(code)) +
                             (detail.empty() ? "" : ": " + detail)),
          code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

} // namespace loopin
