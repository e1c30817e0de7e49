#pragma once

#include <stdexcept>
#include <string>

namespace levydyn {

struct InvalidArgument : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct InvalidState : std::logic_error {
  using std::logic_error::logic_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegenerateData : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UnsupportedPrediction : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UndefinedBin : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace levydyn
