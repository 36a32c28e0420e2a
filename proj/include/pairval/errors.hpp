#pragma once

#include <stdexcept>
#include <string>

namespace pairval {

// Mirrors pv_status in pairval.h; keep the numeric values in sync.
enum class ErrorCode : int {
    invalid_argument = 1,
    io = 2,
    parse = 3,
    dimension_mismatch = 4,
    duplicate_id = 5,
    unsupported_format = 6,
    stale_cache = 7,
    degenerate_data = 8,
    not_fitted = 9,
    numeric = 10,
    conflict = 11,
    not_found = 12,
    state = 13,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const std::string& what) {
    if (!cond) fail(code, what);
}

}  // namespace pairval
