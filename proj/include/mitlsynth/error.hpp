#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mitlsynth {

enum class Errc {
  // abstraction
  RegionMisaligned,
  EmptyPartition,
  InvalidGeometry,
  Infeasible,
  VelocityVanishes,
  // mitl
  SyntaxError,
  IntervalError,
  UnsupportedFragment,
  SchemaError,
  DanglingReference,
  // automata
  AlphabetMismatch,
  EmptyProduct,
  // synthesis
  NoAcceptingRun,
  DepthExceeded,
  // simulation
  BoundViolated,
  Escape,
  // cli
  MissingArtifact,
  Io,
};

std::string_view errc_name(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace mitlsynth
