#pragma once

#include <stdexcept>
#include <string>

namespace iterclust {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class EmptyInputError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Invalid tree surgery: detaching the root, attaching a node that is
// already in the tree, touching a dead node id.
class StructuralError : public Error {
 public:
  using Error::Error;
};

// A leaf extension that would push observations below the height bound.
class BoundError : public Error {
 public:
  using Error::Error;
};

// A normalized objective whose denominator is zero.
class UndefinedScoreError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace iterclust
