#pragma once

#include <stdexcept>
#include <string>

namespace focovil {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define FOCOVIL_DEFINE_ERROR(Name)            \
  class Name : public Error {                 \
   public:                                    \
    explicit Name(const std::string& what)    \
        : Error(std::string(#Name ": ") + what) {} \
  }

// skeleton-core
FOCOVIL_DEFINE_ERROR(ZeroExtentSequence);
FOCOVIL_DEFINE_ERROR(SequenceTooShort);
FOCOVIL_DEFINE_ERROR(DegenerateFrame);
FOCOVIL_DEFINE_ERROR(InvalidTopology);

// synth-data, configuration
FOCOVIL_DEFINE_ERROR(InvalidConfig);
FOCOVIL_DEFINE_ERROR(ParseError);
FOCOVIL_DEFINE_ERROR(IoError);

// tensor-autodiff, model
FOCOVIL_DEFINE_ERROR(ShapeMismatch);
FOCOVIL_DEFINE_ERROR(NonFiniteValue);

// losses, training
FOCOVIL_DEFINE_ERROR(BatchTooSmall);
FOCOVIL_DEFINE_ERROR(CorpusTooSmall);

// evaluation
FOCOVIL_DEFINE_ERROR(EmptyTrainSet);
FOCOVIL_DEFINE_ERROR(TooFewRows);
FOCOVIL_DEFINE_ERROR(LengthMismatch);
FOCOVIL_DEFINE_ERROR(LabelOutOfRange);

#undef FOCOVIL_DEFINE_ERROR

}  // namespace focovil
