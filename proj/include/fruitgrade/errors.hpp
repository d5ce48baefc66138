#pragma once

#include <stdexcept>
#include <string>

namespace fruitgrade {

/// Base class for all errors raised by the grading engine.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define FRUITGRADE_DEFINE_ERROR(Name)                   \
    class Name : public Error {                         \
    public:                                             \
        using Error::Error;                             \
        Name() : Error(#Name) {}                        \
    }

// imgcore
FRUITGRADE_DEFINE_ERROR(DegenerateHistogram);
FRUITGRADE_DEFINE_ERROR(NoMarkers);

// segment
FRUITGRADE_DEFINE_ERROR(FrameNotFound);
FRUITGRADE_DEFINE_ERROR(NoForeground);

// features
FRUITGRADE_DEFINE_ERROR(EmptyMask);
FRUITGRADE_DEFINE_ERROR(EmptySamples);
FRUITGRADE_DEFINE_ERROR(DegenerateRegion);
FRUITGRADE_DEFINE_ERROR(NoPairs);

// select
FRUITGRADE_DEFINE_ERROR(TooFewRows);
FRUITGRADE_DEFINE_ERROR(NumericalFailure);

// learn
FRUITGRADE_DEFINE_ERROR(TooFewSamples);
FRUITGRADE_DEFINE_ERROR(DimensionMismatch);
FRUITGRADE_DEFINE_ERROR(ZeroVector);
FRUITGRADE_DEFINE_ERROR(SingularNormalEquations);

// io / config
FRUITGRADE_DEFINE_ERROR(IoError);
FRUITGRADE_DEFINE_ERROR(ConfigError);

#undef FRUITGRADE_DEFINE_ERROR

}  // namespace fruitgrade
