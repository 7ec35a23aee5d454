#pragma once

#include <stdexcept>
#include <string>

namespace snell {

// Failure taxonomy. Every throw site picks the code naming the broken
// precondition; tests and the CLI match on codes, not message text.
enum class ErrorCode {
    MalformedTree,
    HorizonTooLarge,
    NonCanonicalRule,
    TreeMismatch,
    ArityMismatch,
    NonBinomialNode,
    TimeOrderViolation,
    MissingValues,
    MalformedKernel,
    EnvelopeOverflow,
    NegativeReward,
    LambdaOutOfRange,
    OrderViolation,
    CoordinateOutOfRange,
    NodeNotInSubtree,
    IncomparableNodes,
    BudgetExceeded,
    LengthMismatch,
    InexactArithmetic,
    SpecError,
};

inline const char* error_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::MalformedTree: return "MalformedTree";
        case ErrorCode::HorizonTooLarge: return "HorizonTooLarge";
        case ErrorCode::NonCanonicalRule: return "NonCanonicalRule";
        case ErrorCode::TreeMismatch: return "TreeMismatch";
        case ErrorCode::ArityMismatch: return "ArityMismatch";
        case ErrorCode::NonBinomialNode: return "NonBinomialNode";
        case ErrorCode::TimeOrderViolation: return "TimeOrderViolation";
        case ErrorCode::MissingValues: return "MissingValues";
        case ErrorCode::MalformedKernel: return "MalformedKernel";
        case ErrorCode::EnvelopeOverflow: return "EnvelopeOverflow";
        case ErrorCode::NegativeReward: return "NegativeReward";
        case ErrorCode::LambdaOutOfRange: return "LambdaOutOfRange";
        case ErrorCode::OrderViolation: return "OrderViolation";
        case ErrorCode::CoordinateOutOfRange: return "CoordinateOutOfRange";
        case ErrorCode::NodeNotInSubtree: return "NodeNotInSubtree";
        case ErrorCode::IncomparableNodes: return "IncomparableNodes";
        case ErrorCode::BudgetExceeded: return "BudgetExceeded";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::InexactArithmetic: return "InexactArithmetic";
        case ErrorCode::SpecError: return "SpecError";
    }
    return "UnknownError";
}

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(error_name(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

  private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const std::string& what) {
    if (!cond) fail(code, what);
}

} // namespace snell
