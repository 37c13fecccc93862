#pragma once

#include <stdexcept>
#include <string>

namespace viforecast {

// Exit-code families used by the command-line tool: config = 2, data = 3,
// numeric = 4. Everything thrown by the library derives from Error.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class DataError : public Error {
public:
    using Error::Error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace viforecast
