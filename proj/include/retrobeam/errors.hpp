#pragma once

#include <stdexcept>
#include <string>

namespace retrobeam {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class GeometryError : public Error {
public:
    using Error::Error;
};

class PassivityError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

class ZeroVectorError : public Error {
public:
    using Error::Error;
};

class RankError : public Error {
public:
    using Error::Error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class OverflowError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

class IndexError : public Error {
public:
    using Error::Error;
};

class InsufficientDataError : public Error {
public:
    using Error::Error;
};

class DegenerateRegressionError : public Error {
public:
    using Error::Error;
};

class UnderdampedError : public Error {
public:
    using Error::Error;
};

class NonOverdampedError : public Error {
public:
    using Error::Error;
};

class NoExtremumError : public Error {
public:
    using Error::Error;
};

class StepSizeError : public Error {
public:
    using Error::Error;
};

class NyquistError : public Error {
public:
    using Error::Error;
};

class BudgetError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// Configuration problems carry the JSON-ish path of the offending field.
class ConfigError : public Error {
public:
    ConfigError(const std::string& field, const std::string& msg)
        : Error(field + ": " + msg), field_(field) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

class FeatureError : public Error {
public:
    using Error::Error;
};

}  // namespace retrobeam
