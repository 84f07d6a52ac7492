#include "acs/errors.hpp"

namespace acs {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::QuadratureUnderflow: return "QuadratureUnderflow";
    case ErrorCode::EndsIntersect: return "EndsIntersect";
    case ErrorCode::NotInjective: return "NotInjective";
    case ErrorCode::OutsideTube: return "OutsideTube";
    case ErrorCode::UnbalancedBeta: return "UnbalancedBeta";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::StencilOutOfBounds: return "StencilOutOfBounds";
    case ErrorCode::PointOutsideCharts: return "PointOutsideCharts";
    case ErrorCode::NoContraction: return "NoContraction";
    case ErrorCode::ProbeTooSmall: return "ProbeTooSmall";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

int exit_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigError:
    case ErrorCode::InvalidSpec:
    case ErrorCode::UnbalancedBeta:
    case ErrorCode::EndsIntersect:
    case ErrorCode::ProbeTooSmall:
      return 2;
    default:
      return 3;
  }
}

nlohmann::json Error::to_json() const {
  return {{"error", to_string(code_)}, {"message", what()}, {"detail", detail_}};
}

}  // namespace acs
