#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace decsynth {

// Domain error with a stable machine-readable code ("RowSumError",
// "MissingParameter", ...). The CLI maps these to exit code 1.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(code + ": " + message), code_(std::move(code)) {}

    const std::string& code() const { return code_; }

private:
    std::string code_;
};

[[noreturn]] inline void fail(const std::string& code, const std::string& message) {
    throw Error(code, message);
}

} // namespace decsynth
