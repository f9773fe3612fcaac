#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace twinpot {

// Coded runtime error. Codes are short kebab-case tags (e.g. "duplicate-id",
// "wrong-origin") so the CLI can emit machine-readable error JSON.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(code + ": " + message), code_(std::move(code)) {}

  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

}  // namespace twinpot
