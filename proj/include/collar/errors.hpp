#pragma once

#include <stdexcept>
#include <string>

namespace collar {

// Exit-code classes used by the CLI (see tools/collar.cpp).
struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
    static constexpr int exit_code = 2;
};

struct compat_error : std::runtime_error {
    using std::runtime_error::runtime_error;
    static constexpr int exit_code = 3;
};

struct solver_error : std::runtime_error {
    using std::runtime_error::runtime_error;
    static constexpr int exit_code = 4;
};

struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
    static constexpr int exit_code = 5;
};

} // namespace collar
