#pragma once

#include <stdexcept>
#include <string>

namespace qloc {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Quadrature did not reach the requested tolerance within max_evals.
class NonConvergence : public Error {
 public:
  using Error::Error;
};

// r0 too close to the origin for an azimuthal parameter to exist.
class DegenerateGeometry : public Error {
 public:
  using Error::Error;
};

class SingularMatrix : public Error {
 public:
  using Error::Error;
};

// Eigenvalue sum stays away from 1 even at the largest allowed m_max.
class TruncationInadequate : public Error {
 public:
  using Error::Error;
};

// Gram matrix of PPS wavefunctions is numerically rank deficient.
class IllConditioned : public Error {
 public:
  using Error::Error;
};

}  // namespace qloc
