#pragma once

#include <stdexcept>
#include <string>

#include <json.hpp>

namespace acs {

enum class ErrorCode {
  InvalidSpec,
  NoConvergence,
  QuadratureUnderflow,
  EndsIntersect,
  NotInjective,
  OutsideTube,
  UnbalancedBeta,
  SingularSystem,
  StencilOutOfBounds,
  PointOutsideCharts,
  NoContraction,
  ProbeTooSmall,
  ConfigError,
};

const char* to_string(ErrorCode code);

// Process exit status used by the CLI: 2 for configuration problems, 3 for
// numerical failures.
int exit_status(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, nlohmann::json detail = {})
      : std::runtime_error(message), code_(code), detail_(std::move(detail)) {}

  ErrorCode code() const { return code_; }
  const nlohmann::json& detail() const { return detail_; }
  nlohmann::json to_json() const;

 private:
  ErrorCode code_;
  nlohmann::json detail_;
};

}  // namespace acs
