#pragma once

#include <stdexcept>
#include <string>

namespace quasimodo {

struct IntegrationDiverged : std::runtime_error {
  long step;
  explicit IntegrationDiverged(long step_index)
      : std::runtime_error("integration diverged (non-finite state) at step " +
                           std::to_string(step_index)),
        step(step_index) {}
};

struct UnknownSystem : std::runtime_error {
  explicit UnknownSystem(const std::string& name)
      : std::runtime_error("unknown system: " + name) {}
};

struct InvalidParam : std::runtime_error {
  explicit InvalidParam(const std::string& what)
      : std::runtime_error("invalid parameter: " + what) {}
};

struct DimensionTooLarge : std::runtime_error {
  explicit DimensionTooLarge(int n)
      : std::runtime_error("control dimension " + std::to_string(n) +
                           " exceeds the 2^n_u vertex-set guard (n_u <= 16)") {}
};

struct ZeroOutsideBox : std::runtime_error {
  ZeroOutsideBox() : std::runtime_error("star set requires 0 inside the control box") {}
};

struct SequenceTooShort : std::runtime_error {
  explicit SequenceTooShort(const std::string& what) : std::runtime_error(what) {}
};

struct InsufficientData : std::runtime_error {
  int control_index;
  InsufficientData(int j, const std::string& bucket_sizes)
      : std::runtime_error("insufficient data for control index " + std::to_string(j) +
                           " (bucket sizes: " + bucket_sizes + ")"),
        control_index(j) {}
};

struct SpectralRadiusZero : std::runtime_error {
  SpectralRadiusZero()
      : std::runtime_error("sparse reservoir draw has zero spectral radius "
                           "(nilpotent matrix); re-seed or lower sparsity") {}
};

struct ReservoirNotInitialized : std::runtime_error {
  ReservoirNotInitialized()
      : std::runtime_error("reservoir state not initialized; sync with a recent window first") {}
};

struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error("io error: " + what) {}
};

struct SchemaMismatch : std::runtime_error {
  long line;
  SchemaMismatch(const std::string& what, long line_number)
      : std::runtime_error("schema mismatch at line " + std::to_string(line_number) + ": " + what),
        line(line_number) {}
};

struct MissingComponent : std::runtime_error {
  explicit MissingComponent(const std::string& name)
      : std::runtime_error("missing bound component: " + name) {}
};

struct BoundViolated : std::runtime_error {
  long step;
  double gap, bound;
  BoundViolated(long step_index, double realized, double envelope)
      : std::runtime_error("bound violated at step " + std::to_string(step_index) +
                           ": realized gap " + std::to_string(realized) + " > bound " +
                           std::to_string(envelope)),
        step(step_index),
        gap(realized),
        bound(envelope) {}
};

struct ConfigError : std::runtime_error {
  std::string field;
  ConfigError(const std::string& field_path, const std::string& reason)
      : std::runtime_error("config error at " + field_path + ": " + reason), field(field_path) {}
};

}  // namespace quasimodo
