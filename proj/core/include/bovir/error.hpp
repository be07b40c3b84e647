#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bovir {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file (embeddings, model, qrels, run, topics).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Precondition violated by the caller (bad k, mixed dimensionality, ...).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Malformed TREC SGML corpus. Carries the byte offset of the offending block.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class BuildError : public Error {
 public:
  using Error::Error;
};

/// Index directory could not be read back (missing file, bad version, checksum).
class LoadError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent configuration, e.g. query vectors and centroids of different dims.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class FeedbackError : public Error {
 public:
  using Error::Error;
};

}  // namespace bovir
