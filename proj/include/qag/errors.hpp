#pragma once

#include <stdexcept>
#include <string>

namespace qag {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Dimension or shape mismatch between operands.
struct ShapeError : Error {
    using Error::Error;
};

// A symbol outside the machine's or grammar's alphabet.
struct AlphabetError : Error {
    using Error::Error;
};

// Operation requires unitary (or generalized) mode and got the other.
struct ModeError : Error {
    using Error::Error;
};

// Brute-force oracle or search bound exceeded.
struct ScaleError : Error {
    using Error::Error;
};

// Unsupported grammar structure (divergent cycles, missing normal form, ...).
struct GrammarError : Error {
    using Error::Error;
};

// Malformed or invariant-violating serialized machine.
struct ParseError : Error {
    using Error::Error;
};

} // namespace qag
