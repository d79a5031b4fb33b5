#pragma once

#include <stdexcept>
#include <string>

namespace scalebench {

// Base of every error the library throws. Callers that only care about
// "something in scalebench failed" catch this.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidParameter : public Error {
 public:
  using Error::Error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class ProtocolError : public Error {
 public:
  ProtocolError(const std::string& what, std::string raw_frame)
      : Error(what), raw_frame_(std::move(raw_frame)) {}
  explicit ProtocolError(const std::string& what) : Error(what) {}

  const std::string& raw_frame() const { return raw_frame_; }

 private:
  std::string raw_frame_;
};

}  // namespace scalebench
