#pragma once

#include <stdexcept>
#include <string>

namespace mosanet {

// Runtime failure: I/O, numerical breakdown, external process trouble.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The caller asked for something invalid: bad config, bad input file,
// violated precondition. The CLI maps these to exit code 1.
class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace mosanet
