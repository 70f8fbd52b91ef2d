#pragma once

#include <stdexcept>
#include <string>

namespace brm {

/// Error type thrown by all brm operations. `code` is a short
/// machine-readable tag, `what()` the human-readable message.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const { return code_; }

private:
    std::string code_;
};

}  // namespace brm
