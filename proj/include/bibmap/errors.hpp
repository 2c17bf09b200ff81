#pragma once

#include <cerrno>
#include <cstring>
#include <stdexcept>
#include <string>

namespace bibmap {

/// Base class for every error raised by the toolkit.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// PID token carries a scheme tag that is not part of the supported set.
struct UnknownSchemeError : Error {
    using Error::Error;
};

/// Scheme-specific validation of a PID value failed.
struct MalformedValueError : Error {
    using Error::Error;
};

/// A config-list entry failed validation; carries the 1-based line number.
struct MalformedEntryError : Error {
    MalformedEntryError(const std::string& what, std::size_t line)
        : Error(what + " (line " + std::to_string(line) + ")"), line_no(line) {}
    std::size_t line_no;
};

/// A required CSV header column is absent.
struct MissingColumnError : Error {
    using Error::Error;
};

/// Read or write on a stream or file failed.
struct IoFailureError : Error {
    using Error::Error;
};

/// Write failed with ENOSPC.
struct DiskFullError : IoFailureError {
    using IoFailureError::IoFailureError;
};

/// Key absent from a store that is expected to hold it.
struct NotFoundError : Error {
    using Error::Error;
};

/// An OpenAlex ID referenced by a mapping row has no metadata record.
/// Signals an index/store build inconsistency, never a user error.
struct MetaMissingError : Error {
    using Error::Error;
};

/// A multi-mapped row mixing Work and Source targets reached the classifier.
struct MixedKindRowError : Error {
    using Error::Error;
};

/// A provenance snapshot names a primary source no label is registered for.
struct UnknownSourceUrlError : Error {
    using Error::Error;
};

/// Recounted table totals disagree with cached stats; a pipeline bug.
struct InconsistentOutputsError : Error {
    using Error::Error;
};

/// A phase was invoked before its prerequisite outputs exist.
struct MissingPhaseOutputsError : Error {
    using Error::Error;
};

/// The injected DOI resolver cannot serve requests.
struct ResolverUnavailableError : Error {
    using Error::Error;
};

/// Invalid command-line / run configuration.
struct ConfigError : Error {
    using Error::Error;
};

/// Throw IoFailureError (or DiskFullError for ENOSPC) describing `what` on `path`.
[[noreturn]] inline void throw_io_failure(const std::string& what, const std::string& path) {
    const int err = errno;
    std::string msg = what + ": " + path;
    if (err != 0) {
        msg += " (";
        msg += std::strerror(err);
        msg += ")";
    }
    if (err == ENOSPC) throw DiskFullError(msg);
    throw IoFailureError(msg);
}

}  // namespace bibmap
