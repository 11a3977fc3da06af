#pragma once

#include <stdexcept>
#include <string>

namespace idsc {

// Error taxonomy shared by the library and the CLI exit-code mapping.
// usage/config -> exit 1, data/format/parse -> exit 2, numeric -> exit 3.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Mismatched or invalid tensor extents.
struct ShapeError : Error {
  using Error::Error;
};

// A caller broke a documented precondition.
struct ContractError : Error {
  using Error::Error;
};

// NaN/Inf surfaced, or a computation left its numeric domain.
struct NumericError : Error {
  using Error::Error;
};

// Bad run configuration (unknown key, invalid value, out-of-range size).
struct ConfigError : Error {
  using Error::Error;
};

// Input data is structurally fine but unusable (e.g. no valid pixels).
struct DataError : Error {
  using Error::Error;
};

// Values outside the mathematical domain of a metric (e.g. depth <= 0).
struct DomainError : Error {
  using Error::Error;
};

// A binary file does not match its expected layout.
struct FormatError : Error {
  using Error::Error;
};

// A text file failed to parse.
struct ParseError : Error {
  using Error::Error;
};

// Bad command line.
struct UsageError : Error {
  using Error::Error;
};

}  // namespace idsc
