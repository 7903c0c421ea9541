#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace bilintf {

// Library-wide error with a machine-checkable category tag.  Tags follow a
// fixed vocabulary ("parameter-error", "grid-error", "band-error", ...) so
// callers and tests can match on kind() instead of parsing messages.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(kind + ": " + message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

[[noreturn]] inline void fail(const std::string& kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace bilintf
