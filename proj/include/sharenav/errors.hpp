#pragma once

#include <stdexcept>
#include <string>

namespace sharenav {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed world, trace, config or wire document.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Document parsed but describes an invalid scenario. `entity()` names the
/// offending item (obstacle id, "start", "goal", ...).
class ValidationError : public Error {
 public:
  ValidationError(std::string entity, const std::string& what)
      : Error(entity + ": " + what), entity_(std::move(entity)) {}
  const std::string& entity() const noexcept { return entity_; }

 private:
  std::string entity_;
};

/// The goal cannot be reached through non-lethal cells.
class NoPathError : public Error {
 public:
  using Error::Error;
};

}  // namespace sharenav
