#pragma once

#include <stdexcept>
#include <string>

namespace clcalib {

/// Error families map 1:1 onto CLI exit codes.
enum class ErrorFamily : int {
  config = 2,
  io = 3,
  degeneracy = 4,
  solver = 5,
  validation = 6,
};

class CalibError : public std::runtime_error {
 public:
  CalibError(ErrorFamily family, const std::string& what)
      : std::runtime_error(what), family_(family) {}

  ErrorFamily family() const { return family_; }
  int exit_code() const { return static_cast<int>(family_); }

 private:
  ErrorFamily family_;
};

#define CLCALIB_DEFINE_ERROR(NAME, FAMILY)                      \
  class NAME : public CalibError {                              \
   public:                                                      \
    explicit NAME(const std::string& what)                      \
        : CalibError(ErrorFamily::FAMILY, what) {}              \
  }

CLCALIB_DEFINE_ERROR(ConfigError, config);

CLCALIB_DEFINE_ERROR(IoError, io);
CLCALIB_DEFINE_ERROR(ParseError, io);
CLCALIB_DEFINE_ERROR(NonMonotonicError, io);
CLCALIB_DEFINE_ERROR(NotUnitError, io);
CLCALIB_DEFINE_ERROR(MissingKeyError, io);
CLCALIB_DEFINE_ERROR(NonPositiveFocalError, io);

CLCALIB_DEFINE_ERROR(OutOfRangeError, degeneracy);
CLCALIB_DEFINE_ERROR(DegenerateIntervalError, degeneracy);
CLCALIB_DEFINE_ERROR(BehindCameraError, degeneracy);
CLCALIB_DEFINE_ERROR(NoOverlapError, degeneracy);
CLCALIB_DEFINE_ERROR(TooFewPairsError, degeneracy);
CLCALIB_DEFINE_ERROR(FrameMismatchError, degeneracy);
CLCALIB_DEFINE_ERROR(DegenerateRotationsError, degeneracy);
CLCALIB_DEFINE_ERROR(NoCorrespondencesError, degeneracy);
CLCALIB_DEFINE_ERROR(NoVisiblePointsError, degeneracy);
CLCALIB_DEFINE_ERROR(InvalidSpecError, degeneracy);

CLCALIB_DEFINE_ERROR(SingularSystemError, solver);
CLCALIB_DEFINE_ERROR(EvalError, solver);

CLCALIB_DEFINE_ERROR(ValidationError, validation);

#undef CLCALIB_DEFINE_ERROR

}  // namespace clcalib
