#pragma once

#include <stdexcept>
#include <string>

namespace cv4code {

/// Domain failures raised by every module. `kind()` is the stable error name
/// the CLI prints (e.g. "EmptySource", "ShapeMismatch").
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(kind + ": " + message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

}  // namespace cv4code
