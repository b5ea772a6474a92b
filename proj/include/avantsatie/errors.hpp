#pragma once

#include <stdexcept>
#include <string>

namespace avantsatie {

// Caller broke a documented precondition (length mismatch, bad settings, ...).
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// A gaze target that has no direction: zero vector, or a point on top of the
// effector / robot base.
class DegenerateTarget : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// File or document could not be read or failed validation.
class LoadError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NotFound : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace avantsatie
