#pragma once

#include <stdexcept>
#include <string>

namespace scr {

// Error taxonomy shared by all modules. The CLI maps kinds onto exit codes
// (config/usage -> 2, data -> 3, numeric -> 4), so every throw site picks the
// kind deliberately rather than defaulting to a generic runtime_error.
enum class ErrorKind {
    Contract,  // caller broke a documented precondition
    Config,    // bad key, flag, or value in user-facing configuration
    Data,      // unreadable or malformed input files
    Numeric,   // non-finite values, degenerate statistics, failed checks
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

struct ContractError : Error {
    explicit ContractError(const std::string& what) : Error(ErrorKind::Contract, what) {}
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& what) : Error(ErrorKind::Config, what) {}
};

struct DataError : Error {
    explicit DataError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

struct NumericError : Error {
    explicit NumericError(const std::string& what) : Error(ErrorKind::Numeric, what) {}
};

}  // namespace scr
