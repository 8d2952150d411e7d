#pragma once

#include <stdexcept>
#include <string>

namespace dpdg {

// Base class for every numerical/domain failure raised by the library.
// The CLI maps these to exit code 2 and prints name() on stderr.
class Error : public std::runtime_error {
public:
    Error(std::string name, const std::string& what)
        : std::runtime_error(what), name_(std::move(name)) {}
    const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
};

struct DomainError : Error {
    explicit DomainError(const std::string& what) : Error("DomainError", what) {}
};

struct NotSpdError : Error {
    explicit NotSpdError(const std::string& what) : Error("NotSPD", what) {}
};

struct InvalidTauError : Error {
    explicit InvalidTauError(const std::string& what) : Error("InvalidTau", what) {}
};

// Carries the name of the factor that failed to factorize/invert.
struct SingularMatrixError : Error {
    explicit SingularMatrixError(const std::string& factor)
        : Error("SingularMatrix", "singular or ill-conditioned factor: " + factor) {}
};

struct InvalidConstraintError : Error {
    explicit InvalidConstraintError(const std::string& what)
        : Error("InvalidConstraint", what) {}
};

struct RankDeficientConstraintError : Error {
    explicit RankDeficientConstraintError(const std::string& what)
        : Error("RankDeficientConstraint", what) {}
};

struct NoConvergenceError : Error {
    explicit NoConvergenceError(const std::string& what) : Error("NoConvergence", what) {}
};

struct IoError : Error {
    explicit IoError(const std::string& what) : Error("IoError", what) {}
};

}  // namespace dpdg
