#pragma once

#include <stdexcept>
#include <string>

namespace gazenet {

// Base of every error the library raises. `kind()` is a stable short tag the
// CLI prints in its machine-readable error line.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define GAZENET_DEFINE_ERROR(Name, tag)                                  \
  class Name : public Error {                                            \
   public:                                                               \
    explicit Name(const std::string& what) : Error(tag, what) {}         \
  }

GAZENET_DEFINE_ERROR(LoadError, "load");
GAZENET_DEFINE_ERROR(ValidationError, "validation");
GAZENET_DEFINE_ERROR(FormatError, "format");
GAZENET_DEFINE_ERROR(TypeError, "type");
GAZENET_DEFINE_ERROR(ConfigError, "config");
GAZENET_DEFINE_ERROR(AlignmentError, "alignment");
GAZENET_DEFINE_ERROR(ShapeError, "shape");
GAZENET_DEFINE_ERROR(TrainingError, "training");

#undef GAZENET_DEFINE_ERROR

// Raised when an eye-tracking trace fails the validity threshold.
class QualityError : public Error {
 public:
  QualityError(const std::string& what, double valid_fraction)
      : Error("quality", what), valid_fraction_(valid_fraction) {}
  double valid_fraction() const noexcept { return valid_fraction_; }

 private:
  double valid_fraction_;
};

}  // namespace gazenet
