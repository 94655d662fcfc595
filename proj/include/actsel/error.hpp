#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace actsel {

// Every failure carries a short machine-readable code (e.g. "non_positive_feature")
// alongside the human message. The CLI prints the code, the service maps it to a body.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

} // namespace actsel
