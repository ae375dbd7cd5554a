#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mse {

enum class ErrorCode {
    ParseError,
    DuplicateCell,
    IllegalCell,
    InvalidSubset,
    DegenerateCell,
    OutsideDomain,
    MleMayNotExist,
    InvalidPi0,
    NotBracketed,
    Infeasible,
    UnboundedEvidence,
    MalformedDraw,
    NoAcceptedDraws,
    SizeGuard,
    InvalidConstruction,
    InvalidArgument,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every failure raised by the library carries one of the codes above; the
// CLI maps them onto exit codes.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

// Raised when an assumption is evaluated outside its domain; margin is the
// (non-positive) domain margin that was found.
class OutsideDomainError : public Error {
public:
    OutsideDomainError(double margin, const std::string& message)
        : Error(ErrorCode::OutsideDomain, message), margin_(margin) {}

    double margin() const noexcept { return margin_; }

private:
    double margin_;
};

}  // namespace mse
