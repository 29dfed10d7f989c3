#pragma once

#include <stdexcept>
#include <string>

namespace stepplan {

/// Input or configuration that violates a documented precondition.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

/// Text that could not be parsed into the expected structure.
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

/// A scorer could not be reached (after retries, for remote bundles).
class ScorerUnavailable : public std::runtime_error {
 public:
  explicit ScorerUnavailable(const std::string& what) : std::runtime_error(what) {}
};

/// A scorer answered, but the answer violates the wire schema.
class ProtocolError : public std::runtime_error {
 public:
  ProtocolError(std::string field, const std::string& what)
      : std::runtime_error(what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// A scorer rejected a well-formed request (for instance an off-tree path).
class ScorerError : public std::runtime_error {
 public:
  explicit ScorerError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace stepplan
