#pragma once

#include <stdexcept>
#include <string>

namespace lstme {

// Malformed or dimension-inconsistent input to a public operation.
class InvalidInput : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

// Non-finite loss or gradient during optimisation.
class NumericError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string &what)
{
  if (!cond) throw InvalidInput(what);
}

} // namespace lstme
