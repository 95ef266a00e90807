#pragma once

#include <stdexcept>
#include <string>

namespace layoutgen {

// Value outside the domain an operation was declared over.
struct RangeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Token stream that cannot be decoded. `offset` is the index of the first
// offending token.
struct DecodeError : std::runtime_error {
  std::size_t offset;
  DecodeError(std::string msg, std::size_t off)
      : std::runtime_error(std::move(msg) + " (offset " + std::to_string(off) + ")"),
        offset(off) {}
};

// Sequence longer than the configured maximum.
struct CapacityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Tensor shape mismatch; message names both shapes.
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite value where a finite one is required.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Corpus / dataset file that cannot be parsed. `line` is 1-based.
struct LoadError : std::runtime_error {
  std::size_t line;
  LoadError(std::string msg, std::size_t ln)
      : std::runtime_error(std::move(msg) + " (line " + std::to_string(ln) + ")"),
        line(ln) {}
};

// Generator configuration that cannot be satisfied.
struct GenError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Constraint set that cannot be compiled to a linear program.
struct FormulationError : std::runtime_error {
  enum class Kind { CyclicAdjacency, EmptyConstraintSet };
  Kind kind;
  FormulationError(Kind k, std::string msg)
      : std::runtime_error(std::move(msg)), kind(k) {}
};

// Histograms (or other schema'd values) that cannot be compared.
struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Index outside a model's pointer support.
struct IndexError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace layoutgen
