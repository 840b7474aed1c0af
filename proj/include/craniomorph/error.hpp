#pragma once

#include <stdexcept>
#include <string>

namespace craniomorph {

// Error hierarchy. Each class maps to a distinct CLI exit code so scripted
// callers can tell a missing file from a malformed one from a numerical
// failure. exit_code() values 2..8 are documented in the README.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
    virtual int exit_code() const { return 8; }
    virtual const char* kind() const { return "internal"; }
};

// bad flags, bad subcommand, bad argument combinations
class UsageError : public Error {
public:
    using Error::Error;
    int exit_code() const override { return 2; }
    const char* kind() const override { return "usage"; }
};

// file missing, unreadable, unwritable
class IoError : public Error {
public:
    using Error::Error;
    int exit_code() const override { return 3; }
    const char* kind() const override { return "io"; }
};

// file exists but does not parse as its format
class FormatError : public Error {
public:
    using Error::Error;
    int exit_code() const override { return 4; }
    const char* kind() const override { return "format"; }
};

// coordinate layout / template mismatches
class LayoutError : public Error {
public:
    using Error::Error;
    int exit_code() const override { return 5; }
    const char* kind() const override { return "layout"; }
};

// inputs outside an operation's domain (empty mesh, bad index, ...)
class DomainError : public Error {
public:
    using Error::Error;
    int exit_code() const override { return 6; }
    const char* kind() const override { return "domain"; }
};

// convergence failures, rank exhaustion, descent stagnation
class NumericalError : public Error {
public:
    using Error::Error;
    int exit_code() const override { return 7; }
    const char* kind() const override { return "numerical"; }
};

class InternalError : public Error {
public:
    using Error::Error;
    int exit_code() const override { return 8; }
    const char* kind() const override { return "internal"; }
};

}  // namespace craniomorph
