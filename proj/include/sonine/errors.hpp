#pragma once

#include <stdexcept>
#include <string>

namespace sonine {

// Input fails structural checks (bad sizes, missing fields, malformed config).
class validation_error : public std::runtime_error {
public:
    explicit validation_error(const std::string& msg) : std::runtime_error(msg) {}
};

// A numerical routine cannot reach its accuracy target; message carries diagnostics.
class accuracy_error : public std::runtime_error {
public:
    explicit accuracy_error(const std::string& msg) : std::runtime_error(msg) {}
};

// A user-supplied evaluator produced an inadmissible value (NaN, negative kernel, ...).
class integrity_error : public std::runtime_error {
public:
    explicit integrity_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Input data (as opposed to configuration) is unusable, e.g. nonpositive norms in a log fit.
class data_error : public std::runtime_error {
public:
    explicit data_error(const std::string& msg) : std::runtime_error(msg) {}
};

// A mathematical hypothesis on otherwise well-formed inputs fails (e.g. an
// exponent pair outside the range a decay estimate is proved for).
class domain_error : public std::runtime_error {
public:
    explicit domain_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace sonine
