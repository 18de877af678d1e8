#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace solar {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class NonFiniteError : public Error {
 public:
  NonFiniteError(const std::string& what, std::size_t where)
      : Error(what + " (at " + std::to_string(where) + ")"), where_(where) {}
  std::size_t where() const { return where_; }

 private:
  std::size_t where_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class CrcError : public FormatError {
 public:
  using FormatError::FormatError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace solar
