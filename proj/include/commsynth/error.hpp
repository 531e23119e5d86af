#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace commsynth {

/// Every failure raised by the library carries a module-qualified code such
/// as "optimizer.NoFeasibleInteger" so the CLI can report it verbatim.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(code + ": " + message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

}  // namespace commsynth
