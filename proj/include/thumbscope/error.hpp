#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace thumbscope {

// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or unsupported encoded image. offset() is the number of input
// bytes the decoder had consumed when it gave up.
class DecodeError : public Error {
 public:
  DecodeError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

// Image too small for the requested operation, or collapsed by cropping.
class ImageSizeError : public Error {
 public:
  using Error::Error;
};

// Signal without usable frequency content (flat image).
class DegenerateSpectrumError : public Error {
 public:
  using Error::Error;
};

// Least-squares fit without enough usable points.
class FitError : public Error {
 public:
  using Error::Error;
};

// Bad filter-bank file.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Clustering input too small or without spread.
class ClusterError : public Error {
 public:
  using Error::Error;
};

// Input violates a documented invariant. line() is 1-based, 0 when unknown.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what, std::size_t line = 0)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// A run finished but too much of its input was unusable.
class DataQualityError : public Error {
 public:
  using Error::Error;
};

// Remote API failures. Each is distinct so callers can react differently.
class AuthError : public Error {
 public:
  using Error::Error;
};

class QuotaError : public Error {
 public:
  using Error::Error;
};

class MalformedResponseError : public Error {
 public:
  using Error::Error;
};

class TransportError : public Error {
 public:
  TransportError(const std::string& what, int status) : Error(what), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

}  // namespace thumbscope
