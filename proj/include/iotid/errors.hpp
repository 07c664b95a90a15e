#pragma once

#include <stdexcept>
#include <string>

namespace iotid {

// All recoverable failures derive from Error so callers can catch one type
// at the CLI boundary and map it to an exit code.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoFailure : Error {
    using Error::Error;
};

// Capture file header is not a known pcap magic / version / linktype.
struct MalformedHeader : Error {
    using Error::Error;
};

// Record header promises more bytes than the file holds (strict mode only).
struct TruncatedFile : Error {
    using Error::Error;
};

struct LinkTypeUnsupported : Error {
    using Error::Error;
};

// Tensor / layer geometry disagreement.
struct ShapeMismatch : Error {
    using Error::Error;
};

struct UnknownLabel : Error {
    using Error::Error;
};

struct NotTrained : Error {
    using Error::Error;
};

// Dataset splitting: a class has too few samples to keep one on each side.
struct ClassTooSmall : Error {
    using Error::Error;
};

struct EmptyDataset : Error {
    using Error::Error;
};

struct BadConfig : Error {
    using Error::Error;
};

// Checkpoint problems get their own types so callers can distinguish an
// unreadable file from a format we deliberately no longer load.
struct CorruptFile : Error {
    using Error::Error;
};

struct VersionMismatch : Error {
    using Error::Error;
};

}  // namespace iotid
