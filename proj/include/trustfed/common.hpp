#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace trustfed {

// Runtime failure with a stable machine-readable code ("insufficient-history",
// "no-feasible-solution", ...) next to the human message. Tests match on code().
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(code + ": " + message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

inline double clamp01(double x) {
    if (x < 0.0) return 0.0;
    if (x > 1.0) return 1.0;
    return x;
}

} // namespace trustfed
