#pragma once

#include <stdexcept>
#include <string>

namespace mantensor {

enum class ErrorCode {
  InvalidArgument,
  DimensionMismatch,
  CutLocus,
  NotConverged,
  CurvatureTooLarge,
  NotPositiveDefinite,
  Diverged,
  NoStableStep,
  Io,
  BadMagic,
  ShapeMismatch,
  InvariantViolation,
  Numeric,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

#define MANTENSOR_DEFINE_ERROR(Name, Code)                    \
  class Name : public Error {                                 \
   public:                                                    \
    explicit Name(const std::string& what)                    \
        : Error(ErrorCode::Code, what) {}                     \
  }

MANTENSOR_DEFINE_ERROR(InvalidArgumentError, InvalidArgument);
MANTENSOR_DEFINE_ERROR(DimensionMismatchError, DimensionMismatch);
MANTENSOR_DEFINE_ERROR(CutLocusError, CutLocus);
MANTENSOR_DEFINE_ERROR(NotConvergedError, NotConverged);
MANTENSOR_DEFINE_ERROR(CurvatureTooLargeError, CurvatureTooLarge);
MANTENSOR_DEFINE_ERROR(NotPositiveDefiniteError, NotPositiveDefinite);
MANTENSOR_DEFINE_ERROR(DivergedError, Diverged);
MANTENSOR_DEFINE_ERROR(NoStableStepError, NoStableStep);
MANTENSOR_DEFINE_ERROR(IoError, Io);
MANTENSOR_DEFINE_ERROR(BadMagicError, BadMagic);
MANTENSOR_DEFINE_ERROR(ShapeMismatchError, ShapeMismatch);
MANTENSOR_DEFINE_ERROR(InvariantViolationError, InvariantViolation);
MANTENSOR_DEFINE_ERROR(NumericError, Numeric);

#undef MANTENSOR_DEFINE_ERROR

}  // namespace mantensor
