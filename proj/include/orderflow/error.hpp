#pragma once

#include <stdexcept>
#include <string>

namespace orderflow {

// Base class for all library errors so callers can catch one type.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed input file; message names the offending line.
struct ParseError : Error {
    using Error::Error;
};

// An operation produced or received a log with no events.
struct EmptyLogError : Error {
    using Error::Error;
};

// A numeric argument is outside its valid range.
struct RangeError : Error {
    using Error::Error;
};

// Pairwise storage would exceed the configured memory cap.
struct CapacityError : Error {
    using Error::Error;
};

// Requested operation needs price-change flags the log does not carry.
struct MissingDataError : Error {
    using Error::Error;
};

// Broker assignment could not be balanced to the target frequencies.
struct FeasibilityError : Error {
    using Error::Error;
};

// Replicate count too small for the requested significance level.
struct ResolutionError : Error {
    using Error::Error;
};

// Too few usable points for a fit.
struct InsufficientDataError : Error {
    using Error::Error;
};

// Investor not covered by a brokerage map.
struct MappingError : Error {
    using Error::Error;
};

}  // namespace orderflow
