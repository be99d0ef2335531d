#pragma once

#include <stdexcept>
#include <string>

namespace xferlens {

/// Base of every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Problems with the inputs themselves: files, formats, schemas, lookups.
/// The CLI maps these to exit code 2.
class InputError : public Error {
 public:
  using Error::Error;
};

/// The inputs were readable but the requested analysis is not defined on
/// them. The CLI maps these to exit code 3.
class AnalysisError : public Error {
 public:
  using Error::Error;
};

#define XFERLENS_DEFINE_ERROR(Name, Base) \
  class Name : public Base {              \
   public:                                \
    using Base::Base;                     \
  };

XFERLENS_DEFINE_ERROR(FormatError, InputError)
XFERLENS_DEFINE_ERROR(TruncationError, InputError)
XFERLENS_DEFINE_ERROR(IoError, InputError)
XFERLENS_DEFINE_ERROR(SchemaError, InputError)
XFERLENS_DEFINE_ERROR(MissingFileError, InputError)
XFERLENS_DEFINE_ERROR(PairingError, InputError)
XFERLENS_DEFINE_ERROR(KeyError, InputError)
XFERLENS_DEFINE_ERROR(RangeError, InputError)

XFERLENS_DEFINE_ERROR(NumericError, AnalysisError)
XFERLENS_DEFINE_ERROR(DegenerateInputError, AnalysisError)
XFERLENS_DEFINE_ERROR(ShapeError, AnalysisError)

#undef XFERLENS_DEFINE_ERROR

}  // namespace xferlens
