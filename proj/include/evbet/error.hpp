#pragma once

#include <stdexcept>
#include <string>

namespace evbet {

// Base of every error raised by the library. Callers that only care about
// "something was wrong with the input" can catch this.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// The target mean does not lie between the two support points of a
// requested two-point measure.
class MeanOutsideSpan : public Error {
 public:
  using Error::Error;
};

// A bet fraction outside [1/(mu-1), 1/mu].
class OutOfRange : public Error {
 public:
  using Error::Error;
};

class DegeneratePosterior : public Error {
 public:
  using Error::Error;
};

class DepthTooLarge : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace evbet
