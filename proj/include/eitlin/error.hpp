#pragma once

#include <stdexcept>
#include <string>

namespace eitlin {

/// Base of all library errors. The category maps onto CLI exit codes.
class Error : public std::runtime_error {
public:
    enum class Category { Config = 1, Numerical = 2, Io = 3, Argument = 4 };

    Error(Category category, const std::string& what)
        : std::runtime_error(what), category_(category) {}

    Category category() const noexcept { return category_; }

private:
    Category category_;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(Category::Config, what) {}
};

class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& what) : Error(Category::Numerical, what) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(Category::Io, what) {}
};

/// Precondition violations on caller-supplied values.
class ArgumentError : public Error {
public:
    explicit ArgumentError(const std::string& what) : Error(Category::Argument, what) {}
};

inline void require(bool condition, const std::string& message) {
    if (!condition) throw ArgumentError(message);
}

} // namespace eitlin
