#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace lmlt {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Incompatible tensor shapes, misaligned grids, odd sizes where even is required.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Element count does not fit the platform index range.
class SizeError : public Error {
 public:
  using Error::Error;
};

/// Invalid model configuration, or weights that disagree with a configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A function under gradient check returned different values for identical inputs.
class DeterminismError : public Error {
 public:
  using Error::Error;
};

/// Image content or dimensions unsuitable for the requested operation.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// File system or codec failure.
class IoError : public Error {
 public:
  using Error::Error;
};

/// PNG with a bit depth other than 8.
class UnsupportedDepthError : public IoError {
 public:
  using IoError::IoError;
};

/// Corrupt weight file. `kind()` distinguishes the failure.
class WeightFileError : public Error {
 public:
  enum class Kind { BadMagic, VersionMismatch, Truncated, ShapeDisagreement, Malformed };

  WeightFileError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// Training produced a non-finite loss.
class TrainingError : public Error {
 public:
  TrainingError(std::size_t step, const std::string& what) : Error(what), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

/// Analytic and instrumented cost accounting disagree.
class VerificationError : public Error {
 public:
  VerificationError(std::string layer, const std::string& what)
      : Error(what), layer_(std::move(layer)) {}
  const std::string& layer() const noexcept { return layer_; }

 private:
  std::string layer_;
};

}  // namespace lmlt
