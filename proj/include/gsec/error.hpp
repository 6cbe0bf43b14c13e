#ifndef GSEC_ERROR_HPP
#define GSEC_ERROR_HPP

#include <stdexcept>
#include <string>

namespace gsec {

// Error taxonomy shared by every module. The CLI maps each class onto a
// distinct exit code (see tools/commands.cpp).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Non-finite values where finite ones are required.
class InvalidInputError : public Error {
public:
    using Error::Error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

// Dimension or length mismatch.
class ShapeError : public Error {
public:
    using Error::Error;
};

// Bad magic, version or structure in a file or message.
class FormatError : public Error {
public:
    using Error::Error;
};

// Truncated or otherwise damaged payload.
class CorruptionError : public FormatError {
public:
    using FormatError::FormatError;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// Transport or protocol failure talking to an external model endpoint.
class ClientError : public Error {
public:
    ClientError(const std::string& what, std::string sample_id = {})
        : Error(sample_id.empty() ? what : what + " (sample " + sample_id + ")"),
          sample_id_(std::move(sample_id)) {}

    const std::string& sample_id() const { return sample_id_; }

private:
    std::string sample_id_;
};

// Training produced a non-finite loss.
class NumericalAbort : public Error {
public:
    using Error::Error;
};

}  // namespace gsec

#endif  // GSEC_ERROR_HPP
