#pragma once

#include <stdexcept>
#include <string>

namespace relubound {

/// Malformed input: bad files, dimension mismatches, invalid arguments.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Failure inside a solver or an orchestration step that is not the caller's fault.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File could not be read or written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace relubound
