#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sensorrank {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition or invariant of an input value was violated.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A catalog row or line could not be parsed. The whole load is rejected.
class MalformedRow : public Error {
public:
    MalformedRow(std::size_t line_no, const std::string& why)
        : Error("malformed row at line " + std::to_string(line_no) + ": " + why), line_no_(line_no) {}

    std::size_t line_no() const noexcept { return line_no_; }

private:
    std::size_t line_no_;
};

class DuplicateId : public Error {
public:
    explicit DuplicateId(std::string id) : Error("duplicate sensor id '" + id + "'"), id_(std::move(id)) {}

    const std::string& id() const noexcept { return id_; }

private:
    std::string id_;
};

class UnknownProperty : public Error {
public:
    explicit UnknownProperty(std::string name)
        : Error("unknown property '" + name + "'"), name_(std::move(name)) {}

    const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
};

/// Query text failed to parse. `position` is a byte offset into the text.
class SyntaxError : public Error {
public:
    SyntaxError(std::size_t position, std::string expected)
        : Error("syntax error at " + std::to_string(position) + ": expected " + expected),
          position_(position), expected_(std::move(expected)) {}

    std::size_t position() const noexcept { return position_; }
    const std::string& expected() const noexcept { return expected_; }

private:
    std::size_t position_;
    std::string expected_;
};

class NoCheckedProperties : public Error {
public:
    NoCheckedProperties() : Error("priority profile has no checked property") {}
};

class EmptyCandidates : public Error {
public:
    EmptyCandidates() : Error("cannot normalize an empty candidate set") {}
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class PlanMismatch : public Error {
public:
    using Error::Error;
};

}  // namespace sensorrank
