#pragma once

namespace physproj::spring {

/// Two masses in series on a frictionless line: wall -k1- m1 -k2- m2.
struct SpringParams {
  double m1 = 1.0;  // kg
  double m2 = 1.0;  // kg
  double k1 = 5.0;  // N/m
  double k2 = 2.0;  // N/m
  double L1 = 0.5;  // m
  double L2 = 0.5;  // m

  void validate() const;
};

} // namespace physproj::spring
