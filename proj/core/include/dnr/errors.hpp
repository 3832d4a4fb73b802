#pragma once

#include <stdexcept>
#include <string>

namespace dnr {

// Base type for every error thrown by this library.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Caller-supplied data violates a documented precondition (bad shape,
// non-finite value, out-of-range index, inconsistent sizes, ...).
struct invalid_input : error {
    using error::error;
};

// A masked/restricted operation received an empty index set.
struct degenerate_group : invalid_input {
    using invalid_input::invalid_input;
};

// KL(p || q) with p_i > 0 where q_i = 0.
struct infinite_divergence : invalid_input {
    using invalid_input::invalid_input;
};

// Binary split whose group is empty or covers every index.
struct invalid_split : invalid_input {
    using invalid_input::invalid_input;
};

// Text or JSON input that does not match the documented grammar.
struct parse_error : error {
    explicit parse_error(const std::string& what, long line = 0)
        : error(line > 0 ? what + " (line " + std::to_string(line) + ")" : what), line(line) {}
    long line = 0;  // 1-based input line when known, 0 otherwise
};

// Conditioning on (or adjusting over) a zero-probability event.
struct conditioning_error : error {
    using error::error;
};

// A hard resource cap was exceeded (path-enumeration node limit,
// exact-inference state-space limit).
struct capacity_error : error {
    using error::error;
};

// Training produced a non-finite loss.
struct training_error : error {
    using error::error;
};

}  // namespace dnr
