#ifndef GTNMF_ERROR_HPP
#define GTNMF_ERROR_HPP

#include <stdexcept>
#include <string>

namespace gtnmf {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad arguments, shape mismatches, violated preconditions.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Missing files, unwritable paths, malformed file contents.
class IoError : public Error {
public:
    using Error::Error;
};

// Non-convergent decompositions, non-finite intermediates.
class NumericalError : public Error {
public:
    using Error::Error;
};

} // namespace gtnmf

#endif
