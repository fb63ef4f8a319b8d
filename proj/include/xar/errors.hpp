// Error taxonomy shared by all xar modules. Every error carries a category
// that maps onto the CLI exit codes: input = 2, backend = 3, io = 4.

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace xar {

enum class ErrorCategory {
  Input,    // malformed data, bad flags, violated preconditions
  Backend,  // embedding / caption / LLM backend failures
  Io,       // filesystem and persistence failures
};

inline int exit_code(ErrorCategory cat) {
  switch (cat) {
    case ErrorCategory::Input: return 2;
    case ErrorCategory::Backend: return 3;
    case ErrorCategory::Io: return 4;
  }
  return 1;
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const { return category_; }

 private:
  ErrorCategory category_;
};

// ---- session parsing --------------------------------------------------------

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& message)
      : Error(ErrorCategory::Input, "line " + std::to_string(line) + ": " + message),
        line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class MalformedLine : public ParseError {
 public:
  MalformedLine(std::size_t line, const std::string& reason)
      : ParseError(line, "malformed line: " + reason) {}
};

class NonMonotonicTimestamp : public ParseError {
 public:
  explicit NonMonotonicTimestamp(std::size_t line)
      : ParseError(line, "timestamp decreases") {}
};

class UnknownKind : public ParseError {
 public:
  UnknownKind(std::size_t line, const std::string& kind)
      : ParseError(line, "unknown kind \"" + kind + "\"") {}
};

class InvariantViolation : public Error {
 public:
  InvariantViolation(std::size_t index, const std::string& reason)
      : Error(ErrorCategory::Input,
              "event " + std::to_string(index) + ": " + reason),
        index_(index) {}

  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

// ---- path monitoring --------------------------------------------------------

class OutOfOrderPlan : public Error {
 public:
  OutOfOrderPlan(double plan_t, double last_t)
      : Error(ErrorCategory::Input,
              "plan at t=" + std::to_string(plan_t) +
                  " precedes last seen plan at t=" + std::to_string(last_t)) {}
};

class NoFrameInTolerance : public Error {
 public:
  explicit NoFrameInTolerance(double event_t)
      : Error(ErrorCategory::Input,
              "no camera frame within tolerance of t=" + std::to_string(event_t)),
        event_t_(event_t) {}

  double event_t() const { return event_t_; }

 private:
  double event_t_;
};

// ---- backends ---------------------------------------------------------------

class BackendUnavailable : public Error {
 public:
  BackendUnavailable(const std::string& url, const std::string& cause)
      : Error(ErrorCategory::Backend, "backend " + url + " unavailable: " + cause) {}
};

class BackendTimeout : public Error {
 public:
  explicit BackendTimeout(const std::string& url)
      : Error(ErrorCategory::Backend, "backend " + url + " timed out") {}
};

class MissingCaptionHint : public Error {
 public:
  MissingCaptionHint()
      : Error(ErrorCategory::Backend,
              "fake caption backend requires a caption_hint on the frame") {}
};

class MissingImage : public Error {
 public:
  explicit MissingImage(const std::string& detail)
      : Error(ErrorCategory::Io, "missing or unreadable image: " + detail) {}
};

class EmptyCaption : public Error {
 public:
  EmptyCaption() : Error(ErrorCategory::Backend, "caption backend returned empty text") {}
};

class EmptyAnswer : public Error {
 public:
  EmptyAnswer() : Error(ErrorCategory::Backend, "LLM backend returned empty answer") {}
};

// ---- vector store -----------------------------------------------------------

class DimensionMismatch : public Error {
 public:
  DimensionMismatch(std::size_t expected, std::size_t got)
      : Error(ErrorCategory::Input,
              "embedding dimension mismatch: expected " + std::to_string(expected) +
                  ", got " + std::to_string(got)) {}
};

class EmptyStore : public Error {
 public:
  EmptyStore() : Error(ErrorCategory::Input, "knowledge base is empty") {}
};

class CorruptStoreFile : public Error {
 public:
  explicit CorruptStoreFile(const std::string& reason)
      : Error(ErrorCategory::Io, "corrupt store file: " + reason) {}
};

class VersionMismatch : public Error {
 public:
  explicit VersionMismatch(std::int64_t found)
      : Error(ErrorCategory::Io,
              "unsupported store file version " + std::to_string(found)) {}
};

// ---- prompting & scenarios --------------------------------------------------

class BadTemplate : public Error {
 public:
  explicit BadTemplate(const std::string& reason)
      : Error(ErrorCategory::Input, "bad prompt template: " + reason) {}
};

class InvalidScenario : public Error {
 public:
  explicit InvalidScenario(const std::string& reason)
      : Error(ErrorCategory::Input, "invalid scenario: " + reason) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& reason)
      : Error(ErrorCategory::Input, "config: " + reason) {}
};

}  // namespace xar
