#include "choreo/core/error.hpp"

#include <sstream>

namespace choreo {

ShapeError::ShapeError(const std::string& what, const std::vector<std::size_t>& expected,
                       const std::vector<std::size_t>& actual)
    : ValidationError("shape", what + ": expected " + format(expected) + ", got " + format(actual)) {}

std::string ShapeError::format(const std::vector<std::size_t>& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << " x ";
    if (shape[i] == 0) {
      os << '*';
    } else {
      os << shape[i];
    }
  }
  os << ']';
  return os.str();
}

}  // namespace choreo
