#pragma once

#include <stdexcept>
#include <string>

namespace ccopf {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed CSV row, missing column, or unparsable number.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// A structurally valid input that violates a model invariant
/// (duplicate bus, dangling reference, non-radial topology, bad limits).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Line with zero series impedance.
class DegenerateLine : public Error {
 public:
  using Error::Error;
};

/// Inconsistent optimization model input.
class ModelError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Solver output that cannot be mapped back to physical quantities.
class ExtractionError : public Error {
 public:
  using Error::Error;
};

/// Power flow requested on a network that is not a tree.
class TopologyError : public Error {
 public:
  using Error::Error;
};

/// Conic solve that did not terminate with an optimal status.
class SolverError : public Error {
 public:
  using Error::Error;
};

}  // namespace ccopf
