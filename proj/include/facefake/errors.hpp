#pragma once

#include <stdexcept>
#include <string>

namespace facefake {

// Base for everything thrown by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Bad settings: unknown variant names, invalid thresholds, malformed config files.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Bad or missing inputs: unreadable files, schema violations, empty datasets.
class DataError : public Error {
 public:
  using Error::Error;
};

// Non-finite losses or other numeric breakdowns during optimization.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Frame too small to produce any detection pyramid scale.
class EmptyPyramidError : public Error {
 public:
  using Error::Error;
};

// Box regression produced a box with non-positive width or height.
class DegenerateBoxError : public Error {
 public:
  using Error::Error;
};

}  // namespace facefake
