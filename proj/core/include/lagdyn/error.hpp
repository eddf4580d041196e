#pragma once

#include <stdexcept>
#include <string>

namespace lagdyn {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define LAGDYN_DEFINE_ERROR(Name)                 \
  class Name : public Error {                     \
   public:                                        \
    using Error::Error;                           \
  }

// kinematics
LAGDYN_DEFINE_ERROR(DegenerateFrame);
LAGDYN_DEFINE_ERROR(ZeroBone);
LAGDYN_DEFINE_ERROR(InvalidTopology);

// net-core / dynamics / signals
LAGDYN_DEFINE_ERROR(ShapeMismatch);
LAGDYN_DEFINE_ERROR(TapeMissing);

// energy
LAGDYN_DEFINE_ERROR(DegenerateLength);

// oracle / training
LAGDYN_DEFINE_ERROR(NumericalBlowup);

// eval
LAGDYN_DEFINE_ERROR(LengthMismatch);
LAGDYN_DEFINE_ERROR(EmptySequence);

// cli / io
LAGDYN_DEFINE_ERROR(ConfigInvalid);
LAGDYN_DEFINE_ERROR(DataUnreadable);

#undef LAGDYN_DEFINE_ERROR

}  // namespace lagdyn
