#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace seqtag {

// Every failure raised by the library derives from Error so callers can
// map categories onto exit codes without string matching.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class ContractError : public Error {
 public:
  using Error::Error;
};

class VocabError : public Error {
 public:
  using Error::Error;
};

class LookupError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), reason_(what), line_(line) {}
  /// Same error located in `file`: "file:line: reason".
  ParseError(const ParseError& e, const std::string& file)
      : Error(file + ":" + std::to_string(e.line_) + ": " + e.reason_), reason_(e.reason_), line_(e.line_) {}
  std::size_t line() const { return line_; }
  const std::string& reason() const { return reason_; }

 private:
  std::string reason_;
  std::size_t line_;
};

class AlignmentError : public Error {
 public:
  AlignmentError(const std::string& what, std::size_t sentence)
      : Error(what), sentence_(sentence) {}
  std::size_t sentence() const { return sentence_; }

 private:
  std::size_t sentence_;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class CorruptionError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace seqtag
