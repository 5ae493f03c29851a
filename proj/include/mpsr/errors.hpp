#pragma once

#include <stdexcept>
#include <string>

namespace mpsr {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Incompatible tensor/MPS shapes (mismatched extents, bad axis indices).
struct DimensionError : Error {
    using Error::Error;
};

// Input value outside its documented range, e.g. a pixel not in [0,1].
struct DomainError : Error {
    using Error::Error;
};

// Malformed file contents (bad magic, truncation, checksum mismatch).
struct FormatError : Error {
    using Error::Error;
};

// Work or memory guard exceeded; the message names the guard and a way out.
struct CapacityError : Error {
    using Error::Error;
};

// A documented precondition was violated by the caller.
struct ContractViolation : Error {
    using Error::Error;
};

// A numerical routine failed to converge.
struct NumericalError : Error {
    using Error::Error;
};

} // namespace mpsr
