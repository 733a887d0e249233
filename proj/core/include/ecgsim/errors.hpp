#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ecgsim {

// Raised when there is not enough input to compute a result (e.g. rhythm
// classification needs at least three RR intervals).
class InsufficientDataError : public std::runtime_error {
public:
    explicit InsufficientDataError(const std::string& what)
        : std::runtime_error(what) {}
};

// Raised by frame reassembly when the sequence numbers are not contiguous.
// Carries the missing sequence values so callers can request retransmission
// or report precisely what was lost.
class SeqGapError : public std::runtime_error {
public:
    SeqGapError(const std::string& what, std::vector<int> missing_seqs)
        : std::runtime_error(what), missing(std::move(missing_seqs)) {}

    std::vector<int> missing;
};

// File-level failures (unwritable sink, bad magic, truncated payload).
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what, bool partial_file = false)
        : std::runtime_error(what), partial(partial_file) {}

    // True when the file ended mid-record, e.g. an interrupted recording.
    bool partial = false;
};

// Malformed or inconsistent CLI/config input.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace ecgsim
