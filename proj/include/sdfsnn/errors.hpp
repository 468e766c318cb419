#ifndef SDFSNN_ERRORS_HPP
#define SDFSNN_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace sdfsnn {

// Error taxonomy mirrored in CLI exit codes: config 2, numerical 3, io 4.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace sdfsnn

#endif
