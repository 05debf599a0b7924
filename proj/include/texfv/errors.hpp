#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace texfv {

/// Error with a stable machine-readable code alongside the human message.
/// Codes are the identifiers used throughout the toolchain, e.g. "BadLabelId",
/// "DimMismatch", "TooFewDescriptors".
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(code + ": " + message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

[[noreturn]] inline void fail(const std::string& code, const std::string& message) {
    throw Error(code, message);
}

} // namespace texfv
