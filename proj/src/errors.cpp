#include "physproj/errors.hpp"

namespace physproj {

void require(bool condition, const std::string& message) {
  if (!condition) throw ValidationError(message);
}

void require_shape(bool condition, const std::string& message) {
  if (!condition) throw ShapeError(message);
}

} // namespace physproj
