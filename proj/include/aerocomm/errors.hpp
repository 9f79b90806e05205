#pragma once

#include <stdexcept>
#include <string>

namespace aerocomm
{
//! Physically meaningless or non-finite argument.
class InvalidInput : public std::invalid_argument
{
  public:
    using std::invalid_argument::invalid_argument;
};

//! Bad configuration value; carries the dotted field path.
class ConfigError : public std::runtime_error
{
  public:
    ConfigError(std::string path, std::string const& what)
        : std::runtime_error(path.empty() ? what : path + ": " + what)
        , path_(std::move(path))
    {
    }

    std::string const& path() const { return path_; }

  private:
    std::string path_;
};

//! Adaptive step shrank below the underflow guard.
class StiffnessError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

//! Internal bookkeeping identity was violated.
class ConsistencyError : public std::logic_error
{
  public:
    using std::logic_error::logic_error;
};

}  // namespace aerocomm
