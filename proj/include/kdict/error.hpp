#ifndef KDICT_ERROR_HPP_INCLUDED
#define KDICT_ERROR_HPP_INCLUDED

#include <stdexcept>
#include <string>

namespace kdict {

/// Runtime failure inside a numerical routine or file operation.
class Error : public std::runtime_error {
public:
   using std::runtime_error::runtime_error;
};

/// Invalid user input: bad parameters, malformed files, shape mismatches
/// between a model and the data it is applied to.
class ConfigError : public Error {
public:
   using Error::Error;
};

} // namespace kdict

#endif
