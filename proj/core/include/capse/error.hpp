#pragma once

#include <stdexcept>
#include <string>

namespace capse {

// All toolkit errors derive from Error so callers can catch one type.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input file (bad line, wrong field count, bad number).
struct ParseError : Error {
  using Error::Error;
};

// Name not present in a frozen vocabulary, or id out of range.
struct VocabError : Error {
  using Error::Error;
};

// Inconsistent tensor/embedding dimensions.
struct ShapeError : Error {
  using Error::Error;
};

// Non-finite values encountered during training or differentiation.
struct NumericError : Error {
  using Error::Error;
};

// Negative sampling could not find a corruption within the retry bound.
struct SamplingError : Error {
  using Error::Error;
};

// Unknown id at scoring/re-ranking time.
struct LookupError : Error {
  using Error::Error;
};

}  // namespace capse
