#pragma once

#include <stdexcept>
#include <string>

namespace jss {

// Base of everything the library throws on purpose.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define JSS_ERROR(Name)                        \
  struct Name : Error {                        \
    explicit Name(const std::string& what)     \
        : Error(std::string(#Name ": ") + what) {} \
  }

JSS_ERROR(DegenerateCurve);
JSS_ERROR(QuadratureFailure);
JSS_ERROR(NotClosed);
JSS_ERROR(OffsetTooLarge);
JSS_ERROR(NoArcFound);
JSS_ERROR(EnumerationBudget);
JSS_ERROR(NotProperSubset);
JSS_ERROR(MeshQuality);
JSS_ERROR(FiberInversionFailure);
JSS_ERROR(InconclusiveLimit);
JSS_ERROR(DomainError);
JSS_ERROR(EigFailure);
JSS_ERROR(NotPrincipal);
JSS_ERROR(MeshTopology);
JSS_ERROR(ExtrapolationFailure);
JSS_ERROR(InvalidDomain);

#undef JSS_ERROR

struct SolveFailure : Error {
  double residual;
  SolveFailure(const std::string& what, double res)
      : Error("SolveFailure: " + what), residual(res) {}
};

struct ParseError : Error {
  int line, column;
  ParseError(const std::string& what, int l, int c)
      : Error("ParseError at " + std::to_string(l) + ":" + std::to_string(c) + ": " + what),
        line(l), column(c) {}
};

}  // namespace jss
