#pragma once

#include <stdexcept>
#include <string>

namespace afro {

// Base for every error raised by the toolchain. Stage-level code catches
// this and attaches stage / utterance context.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class AdapterError : public Error {
 public:
  using Error::Error;
};

class AdapterTimeout : public AdapterError {
 public:
  using AdapterError::AdapterError;
};

}  // namespace afro
