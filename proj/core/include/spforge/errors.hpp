#pragma once

#include <stdexcept>
#include <string>

namespace spforge {

// Base for every error raised by the library. Callers that only need to
// distinguish "bad input" from "backend trouble" can catch the two families
// below.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InputError : public Error {
 public:
  using Error::Error;
};

class BackendError : public Error {
 public:
  using Error::Error;
};

class UnexecutedProgram : public InputError {
 public:
  using InputError::InputError;
};

class InvalidArgument : public InputError {
 public:
  using InputError::InputError;
};

class ContractError : public InputError {
 public:
  using InputError::InputError;
};

class InsufficientLeaves : public InputError {
 public:
  using InputError::InputError;
};

class LengthMismatch : public InputError {
 public:
  using InputError::InputError;
};

class MalformedLine : public InputError {
 public:
  MalformedLine(std::size_t line, const std::string& what)
      : InputError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// A session edit that breaks one of the search's filtering rules; rule() is
// the rule number, 0 when the operands themselves are unusable.
class InadmissibleEdge : public InputError {
 public:
  InadmissibleEdge(int rule, const std::string& what) : InputError(what), rule_(rule) {}
  int rule() const { return rule_; }

 private:
  int rule_;
};

class UnknownSession : public InputError {
 public:
  using InputError::InputError;
};

class BackendUnavailable : public BackendError {
 public:
  using BackendError::BackendError;
};

class EmptyGeneration : public BackendError {
 public:
  using BackendError::BackendError;
};

}  // namespace spforge
