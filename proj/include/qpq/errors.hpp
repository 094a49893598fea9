#pragma once

#include <stdexcept>
#include <string>

namespace qpq {

// Base of every error raised by the library.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A scalar argument (length, shift, index, probability) is out of range.
class invalid_parameter : public error {
public:
    explicit invalid_parameter(const std::string& what) : error("invalid parameter: " + what) {}
};

// A quantum state or density operator violates its invariants.
class invalid_state : public error {
public:
    explicit invalid_state(const std::string& what) : error("invalid state: " + what) {}
};

// The requested computation exceeds a declared dimension cap.
class resource_limit : public error {
public:
    explicit resource_limit(const std::string& what) : error("resource limit: " + what) {}
};

// Every transmission attempt of a session was lost. Not a protocol failure.
class channel_failure : public error {
public:
    explicit channel_failure(const std::string& what) : error("channel failure: " + what) {}
};

// A report or state file could not be read or written.
class io_error : public error {
public:
    explicit io_error(const std::string& what) : error("i/o error: " + what) {}
};

} // namespace qpq
