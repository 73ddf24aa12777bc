#pragma once

#include <stdexcept>
#include <string>

namespace lsep {

enum class ErrorKind {
    NotHyperbolic,
    ResourceLimit,
    NoConvergence,
    SpacingCollapse,
    CountBoundViolated,
    CoverIncomplete,
    NoSafeSegment,
    CalibrationFailed,
    AdmissibilityExceeded,
    Validation,
};

const char* to_string(ErrorKind k);

class Error : public std::runtime_error {
public:
    Error(ErrorKind k, const std::string& msg) : std::runtime_error(std::string(to_string(k)) + ": " + msg), kind_(k) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace lsep
