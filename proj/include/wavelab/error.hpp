#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace wavelab {

/// Failure categories raised by the numerical modules.
enum class ErrorKind {
    Config,
    Overflow,
    NotConverged,
    NewtonDiverged,
    NegativeSolution,
    BracketInvalid,
    MaximizationFailure,
    LinearSolveFailure,
    IterationFailure,
    NoBoundState,
    PreconditionUnverifiable,
    DemoFailed,
};

constexpr std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::Config: return "ConfigError";
    case ErrorKind::Overflow: return "Overflow";
    case ErrorKind::NotConverged: return "NotConverged";
    case ErrorKind::NewtonDiverged: return "NewtonDiverged";
    case ErrorKind::NegativeSolution: return "NegativeSolution";
    case ErrorKind::BracketInvalid: return "BracketInvalid";
    case ErrorKind::MaximizationFailure: return "MaximizationFailure";
    case ErrorKind::LinearSolveFailure: return "LinearSolveFailure";
    case ErrorKind::IterationFailure: return "IterationFailure";
    case ErrorKind::NoBoundState: return "NoBoundState";
    case ErrorKind::PreconditionUnverifiable: return "PreconditionUnverifiable";
    case ErrorKind::DemoFailed: return "DemoFailed";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

    /// CLI exit code: 2 config, 4 demo assertion, 3 any other numerical failure.
    int exit_code() const noexcept {
        switch (kind_) {
        case ErrorKind::Config: return 2;
        case ErrorKind::DemoFailed: return 4;
        default: return 3;
        }
    }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace wavelab
