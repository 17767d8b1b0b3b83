// Exception types shared across the library. Each corresponds to one
// documented failure mode of an operation; catch by type, not by message.
#pragma once

#include <stdexcept>
#include <string>

namespace tvkf {

struct SingularMatrix : std::runtime_error {
  explicit SingularMatrix(const std::string& what) : std::runtime_error(what) {}
};

struct NotSymmetric : std::runtime_error {
  explicit NotSymmetric(const std::string& what) : std::runtime_error(what) {}
};

struct DimensionMismatch : std::runtime_error {
  explicit DimensionMismatch(const std::string& what) : std::runtime_error(what) {}
};

struct InvalidParams : std::runtime_error {
  explicit InvalidParams(const std::string& what) : std::runtime_error(what) {}
};

struct CovNotPSD : std::runtime_error {
  explicit CovNotPSD(const std::string& what) : std::runtime_error(what) {}
};

struct StepTooLarge : std::runtime_error {
  explicit StepTooLarge(const std::string& what) : std::runtime_error(what) {}
};

struct EmptyHistory : std::runtime_error {
  explicit EmptyHistory(const std::string& what) : std::runtime_error(what) {}
};

struct SingularInnovation : std::runtime_error {
  explicit SingularInnovation(const std::string& what) : std::runtime_error(what) {}
};

struct GainEvalFailure : std::runtime_error {
  explicit GainEvalFailure(const std::string& what) : std::runtime_error(what) {}
};

struct DivergentConfig : std::runtime_error {
  explicit DivergentConfig(const std::string& what) : std::runtime_error(what) {}
};

struct NoFeasiblePoint : std::runtime_error {
  explicit NoFeasiblePoint(const std::string& what) : std::runtime_error(what) {}
};

struct NoConvergence : std::runtime_error {
  explicit NoConvergence(const std::string& what) : std::runtime_error(what) {}
};

struct ParseError : std::runtime_error {
  std::size_t line;
  ParseError(std::size_t line_no, const std::string& what)
      : std::runtime_error(what), line(line_no) {}
};

struct NonMonotoneTime : std::runtime_error {
  std::size_t line;
  NonMonotoneTime(std::size_t line_no, const std::string& what)
      : std::runtime_error(what), line(line_no) {}
};

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace tvkf
