#pragma once

#include <stdexcept>
#include <string>

namespace fusionette {

/// Base of every exception the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor or record shapes that do not fit together.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Invalid arguments or configuration (unknown variant, bad spec, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class UnknownVariantError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// Precondition failures of the training loop (empty splits, bad labels).
class TrainingError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// On-disk format errors. Each failure mode has its own type so callers
// (and the CLI exit codes) can tell them apart.
class FormatError : public Error {
 public:
  using Error::Error;
};

class BadMagicError : public FormatError {
 public:
  using FormatError::FormatError;
};

class VersionError : public FormatError {
 public:
  using FormatError::FormatError;
};

class ChecksumError : public FormatError {
 public:
  using FormatError::FormatError;
};

class TruncationError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// Structurally valid file whose payload violates an invariant
/// (label out of range, NaN embedding, duplicate id, ...).
class InvalidPayloadError : public FormatError {
 public:
  using FormatError::FormatError;
};

}  // namespace fusionette
