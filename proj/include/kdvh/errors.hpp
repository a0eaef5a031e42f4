#pragma once

#include <stdexcept>
#include <string>

namespace kdvh {

// Base class so callers (the CLI in particular) can map every library
// failure onto a single exit code.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NotExact : Error {
  using Error::Error;
};
struct GradientMismatch : Error {
  using Error::Error;
};
struct RankViolation : Error {
  using Error::Error;
};
struct OddOffset : Error {
  using Error::Error;
};
struct SingularSystem : Error {
  using Error::Error;
};
struct ThresholdViolation : Error {
  using Error::Error;
};
// A resonant residue whose low-order part is not a total derivative, so no
// correction of the usual shape can absorb it.
struct NonExactResonance : Error {
  using Error::Error;
};
struct ConfigError : Error {
  using Error::Error;
};

struct BlowUp : Error {
  BlowUp(const std::string& what, double t) : Error(what), time(t) {}
  double time;
};

}  // namespace kdvh
