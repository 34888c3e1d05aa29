#pragma once

#include <stdexcept>
#include <string>

namespace scaleclock {

enum class ErrorKind {
    parameter,     // invalid user-supplied value
    range,         // argument outside the supported domain
    evaluation,    // non-finite function evaluation
    precondition,  // violated precondition (negative integrand, bad ordering)
    class_error,   // object does not belong to the requested class
    numerical,     // numerically inconclusive result
    budget,        // Monte Carlo budget exhausted
    scheme,        // simulation scheme unusable for this input
};

inline const char* to_string(ErrorKind k) {
    switch (k) {
        case ErrorKind::parameter: return "parameter error";
        case ErrorKind::range: return "range error";
        case ErrorKind::evaluation: return "evaluation error";
        case ErrorKind::precondition: return "precondition error";
        case ErrorKind::class_error: return "class error";
        case ErrorKind::numerical: return "numerical error";
        case ErrorKind::budget: return "budget error";
        case ErrorKind::scheme: return "scheme error";
    }
    return "error";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool ok, ErrorKind kind, const std::string& what) {
    if (!ok) fail(kind, what);
}

}  // namespace scaleclock
