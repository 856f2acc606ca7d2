#pragma once

#include <stdexcept>
#include <string>

namespace bace {

// User/data errors (bad CSV, contract violations on inputs). The CLI maps
// these to exit code 1; anything else is an internal error (exit 2).
class invalid_input : public std::runtime_error {
public:
    explicit invalid_input(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace bace
