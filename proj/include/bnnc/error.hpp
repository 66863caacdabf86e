#pragma once

#include <stdexcept>
#include <string>

namespace bnnc {

// Base for every error the library reports. Callers that only care about
// "something about the input was wrong" catch this.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent model file / in-memory model.
class ModelError : public Error {
 public:
  using Error::Error;
};

// Malformed netlist file or invalid builder request.
class NetlistError : public Error {
 public:
  using Error::Error;
};

// Shape or length mismatch between an operand and what an operation expects.
class ShapeError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace bnnc
