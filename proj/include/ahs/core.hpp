#pragma once

#include <Eigen/Core>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace ahs {

using Vec = Eigen::ArrayXd;

inline constexpr double pi = std::numbers::pi;

enum class ErrorCode {
    SurfaceMismatch,
    InvalidArgument,
    UnsupportedGenus,
    NonConstantCoefficient,
    Divergence,
    SingularLinearization,
    NoSolution,
    InvalidBracket,
    BracketUnavailable,
    NotEinstein,
    MixedStructure,
    DomainViolation,
    LeftChart,
    Io,
};

inline const char* to_string(ErrorCode c) {
    switch (c) {
    case ErrorCode::SurfaceMismatch: return "surface-mismatch";
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::UnsupportedGenus: return "unsupported-genus";
    case ErrorCode::NonConstantCoefficient: return "nonconstant-coefficient";
    case ErrorCode::Divergence: return "divergence";
    case ErrorCode::SingularLinearization: return "singular-linearization";
    case ErrorCode::NoSolution: return "no-solution";
    case ErrorCode::InvalidBracket: return "invalid-bracket";
    case ErrorCode::BracketUnavailable: return "bracket-unavailable";
    case ErrorCode::NotEinstein: return "not-einstein";
    case ErrorCode::MixedStructure: return "mixed-structure";
    case ErrorCode::DomainViolation: return "domain-violation";
    case ErrorCode::LeftChart: return "left-chart";
    case ErrorCode::Io: return "io";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

inline double max_abs(const Vec& v) { return v.size() ? v.abs().maxCoeff() : 0.0; }

inline void require(bool ok, ErrorCode c, const std::string& msg) {
    if (!ok) throw Error(c, msg);
}

} // namespace ahs
