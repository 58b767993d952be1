#pragma once

#include <stdexcept>
#include <string>

namespace mpcq {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A matrix that should preserve the coisotropic subspace W (or W^perp) does not.
class NotAdaptedError : public Error {
 public:
  using Error::Error;
};

/// Symplectic Gram-Schmidt hit a pivot below the floor.
class DegenerateFrameError : public Error {
 public:
  DegenerateFrameError(const std::string& what, double pivot)
      : Error(what), pivot_(pivot) {}
  double pivot() const noexcept { return pivot_; }

 private:
  double pivot_;
};

/// Branch tracking saw an argument jump too large to be resolved; resample finer.
class RefineNeeded : public Error {
 public:
  RefineNeeded(const std::string& what, std::size_t index)
      : Error(what), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

class ZeroCrossingError : public Error {
 public:
  using Error::Error;
};

class NonClosedPathError : public Error {
 public:
  using Error::Error;
};

class IntegrationError : public Error {
 public:
  IntegrationError(const std::string& what, double last_valid_time)
      : Error(what), last_valid_time_(last_valid_time) {}
  double last_valid_time() const noexcept { return last_valid_time_; }

 private:
  double last_valid_time_;
};

class StepSizeError : public Error {
 public:
  using Error::Error;
};

class ResolutionError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class LoopNotAcceptedError : public Error {
 public:
  using Error::Error;
};

class LevelSetError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace mpcq
