#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace nnquad {

// Root of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

class IndexError : public Error {
public:
    using Error::Error;
};

// Malformed weight-file or config syntax. `where` is a byte offset or JSON pointer.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::string where)
        : Error(what + " (at " + where + ")"), where_(std::move(where)) {}
    const std::string& where() const noexcept { return where_; }

private:
    std::string where_;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class UnsupportedActivation : public Error {
public:
    using Error::Error;
};

class UnsupportedOrder : public Error {
public:
    using Error::Error;
};

// Network shape does not fit the requested integration route.
class StructuralError : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class StiffnessError : public Error {
public:
    using Error::Error;
};

class ToleranceNotMet : public Error {
public:
    ToleranceNotMet(const std::string& what, double best_estimate, double error_estimate)
        : Error(what), best_estimate_(best_estimate), error_estimate_(error_estimate) {}
    double best_estimate() const noexcept { return best_estimate_; }
    double error_estimate() const noexcept { return error_estimate_; }

private:
    double best_estimate_;
    double error_estimate_;
};

class TrainingDiverged : public Error {
public:
    TrainingDiverged(const std::string& what, std::size_t epoch) : Error(what), epoch_(epoch) {}
    std::size_t epoch() const noexcept { return epoch_; }

private:
    std::size_t epoch_;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace nnquad
