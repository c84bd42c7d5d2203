#pragma once

#include <stdexcept>
#include <string>

namespace confrac {

// Failure categories double as CLI exit codes: malformed problem input (2),
// numerical non-convergence (3), violated mathematical hypotheses (4).
enum class ErrorCategory : int {
    spec = 2,
    numerical = 3,
    hypothesis = 4,
};

class Error : public std::runtime_error {
  public:
    Error(ErrorCategory cat, const std::string& msg) : std::runtime_error(msg), cat_(cat) {}
    ErrorCategory category() const noexcept { return cat_; }

  private:
    ErrorCategory cat_;
};

#define CONFRAC_DEFINE_ERROR(Name, Cat)                                                           \
    struct Name : Error {                                                                          \
        explicit Name(const std::string& msg) : Error(ErrorCategory::Cat, msg) {}                  \
    }

// Argument/domain problems.
CONFRAC_DEFINE_ERROR(DomainError, hypothesis);
CONFRAC_DEFINE_ERROR(DimensionMismatch, hypothesis);
CONFRAC_DEFINE_ERROR(BoundaryMismatch, hypothesis);
CONFRAC_DEFINE_ERROR(MissingDerivative, hypothesis);
CONFRAC_DEFINE_ERROR(HypothesisViolated, hypothesis);
CONFRAC_DEFINE_ERROR(SingularLagrangian, hypothesis);
CONFRAC_DEFINE_ERROR(NotAnExtremal, hypothesis);
CONFRAC_DEFINE_ERROR(NotCertified, hypothesis);
CONFRAC_DEFINE_ERROR(InconsistentMomentum, hypothesis);
CONFRAC_DEFINE_ERROR(ForceEquationViolated, hypothesis);
CONFRAC_DEFINE_ERROR(StationarityUnsolvable, hypothesis);
CONFRAC_DEFINE_ERROR(BoundaryConditionViolated, hypothesis);

// Numerical failures.
CONFRAC_DEFINE_ERROR(NonFinite, numerical);
CONFRAC_DEFINE_ERROR(ToleranceNotMet, numerical);
CONFRAC_DEFINE_ERROR(NoConvergence, numerical);

// Problem-description (spec) failures.
CONFRAC_DEFINE_ERROR(UnknownIdentifier, spec);
CONFRAC_DEFINE_ERROR(MissingField, spec);
CONFRAC_DEFINE_ERROR(InvalidValue, spec);

struct ParseError : Error {
    ParseError(const std::string& msg, int line = 0, int column = 0)
        : Error(ErrorCategory::spec, format_message(msg, line, column)), line(line), column(column) {}
    int line;
    int column;

  private:
    static std::string format_message(const std::string& msg, int line, int column) {
        if (line <= 0) return msg;
        return msg + " (line " + std::to_string(line) + ", column " + std::to_string(column) + ")";
    }
};

#undef CONFRAC_DEFINE_ERROR

}  // namespace confrac
