#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mhqg {

// Base of every failure raised by the library. Branch-level failures
// (RejectedGeneration, UnsupportedQuestionForm, UndecidableAnswer,
// ProtocolError) are recoverable inside graph execution; everything else
// propagates to the caller.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller broke an operation's documented precondition.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

class MalformedInput : public Error {
 public:
  MalformedInput(std::size_t record_index, const std::string& what)
      : Error("record " + std::to_string(record_index) + ": " + what), record_index_(record_index) {}

  std::size_t record_index() const { return record_index_; }

 private:
  std::size_t record_index_;
};

class DanglingLink : public Error {
 public:
  explicit DanglingLink(std::string passage_id)
      : Error("cell links to missing passage '" + passage_id + "'"), passage_id_(std::move(passage_id)) {}

  const std::string& passage_id() const { return passage_id_; }

 private:
  std::string passage_id_;
};

class DuplicatePair : public Error {
 public:
  using Error::Error;
};

class IndexOutOfRange : public Error {
 public:
  using Error::Error;
};

class UnsupportedQuestionForm : public Error {
 public:
  using Error::Error;
};

class RejectedGeneration : public Error {
 public:
  using Error::Error;
};

class UndecidableAnswer : public Error {
 public:
  using Error::Error;
};

class BackendUnavailable : public Error {
 public:
  using Error::Error;
};

class ProtocolError : public Error {
 public:
  using Error::Error;
};

class InvalidGraph : public Error {
 public:
  using Error::Error;
};

class ModalityMismatch : public Error {
 public:
  using Error::Error;
};

class UnscoredCandidate : public Error {
 public:
  using Error::Error;
};

class InsufficientStructure : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// A file could not be read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace mhqg
