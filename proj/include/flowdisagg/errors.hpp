// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace flowdisagg {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad user configuration: unknown variables, invalid ranges, missing keys.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Tensor / series dimensions do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Invalid data content (non-finite values, inconsistent series).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Statistics could not be fitted (e.g. a feature with no observations).
class FitError : public Error {
 public:
  using Error::Error;
};

/// Malformed payload or file. `path()` locates the offending element.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::string path)
      : Error(what + " (at " + path + ")"), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// Transport-level failure. status() is the HTTP status or 0 when no
/// response arrived.
class NetworkError : public Error {
 public:
  NetworkError(const std::string& what, int status, bool retriable)
      : Error(what), status_(status), retriable_(retriable) {}
  int status() const noexcept { return status_; }
  bool retriable() const noexcept { return retriable_; }

 private:
  int status_;
  bool retriable_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure during training (non-finite loss or gradient).
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace flowdisagg
