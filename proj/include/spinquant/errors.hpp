#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace spinquant {

/// Base class of every error thrown by this library.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Filesystem failure (open/read/write); message carries the path.
struct io_error : error {
    using error::error;
};

/// File exists but is not in the expected format (bad magic, bad header).
struct format_error : error {
    using error::error;
};

/// File ends before the declared payload does.
struct truncated_error : error {
    using error::error;
};

/// Malformed text input; carries the 1-based line number.
struct parse_error : error {
    parse_error(const std::string& msg, std::size_t line_no)
        : error(msg + " (line " + std::to_string(line_no) + ")"), line(line_no) {}
    std::size_t line;
};

/// Violated value invariant (NaN/Inf, negative where forbidden, size mismatch).
struct value_error : error {
    using error::error;
};

/// Input is degenerate for the requested operation (e.g. constant frame).
struct degenerate_error : error {
    using error::error;
};

/// Numerical failure: solver non-convergence, integrator blow-up.
struct numeric_error : error {
    using error::error;
};

/// Least-squares fit cannot be determined from the given points.
struct fit_error : error {
    using error::error;
};

/// Traces have no common time support.
struct alignment_error : error {
    using error::error;
};

/// Wraps an error from one stage of a multi-stage pipeline.
struct stage_error : error {
    stage_error(std::string stage_name, const std::string& msg)
        : error("[" + stage_name + "] " + msg), stage(std::move(stage_name)) {}
    std::string stage;
};

} // namespace spinquant
