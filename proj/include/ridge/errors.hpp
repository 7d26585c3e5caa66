#pragma once

#include <stdexcept>
#include <string>

namespace ridge {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// model / input validation
struct ShapeError : Error { using Error::Error; };
struct DomainError : Error { using Error::Error; };
struct DataError : Error { using Error::Error; };

// sampler
struct CovarianceNotPD : Error { using Error::Error; };

// estimators
struct SingularSystem : Error { using Error::Error; };
struct TemperatureOutOfRange : Error { using Error::Error; };

struct NoConvergence : Error {
  double last_iterate;
  double defect;
  NoConvergence(const std::string& msg, double last, double def)
      : Error(msg), last_iterate(last), defect(def) {}
};

// quadrature / optimization
struct QuadratureError : Error { using Error::Error; };
struct OptimizerNoBracket : Error { using Error::Error; };
struct IntegrandError : Error { using Error::Error; };

// freenergy
struct EmptySupport : Error { using Error::Error; };
struct SpectrumDomainError : Error { using Error::Error; };

// analytics
struct DegreesOfFreedomError : Error { using Error::Error; };
struct MGFPole : Error { using Error::Error; };
struct DeltaOutOfRange : Error { using Error::Error; };
struct AlphaOutOfRange : Error { using Error::Error; };

// spectra
struct EnsembleTooSmall : Error { using Error::Error; };

// harness / CLI
struct UnsupportedCheck : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

}  // namespace ridge
