#pragma once

#include <stdexcept>
#include <string>

namespace linein {

/// Base of every error raised by the library. The concrete subclasses map
/// one-to-one onto the failure kinds a caller may want to distinguish.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "Error"; }
};

#define LINEIN_DECLARE_ERROR(Name)                                   \
  class Name : public Error {                                        \
   public:                                                           \
    using Error::Error;                                              \
    const char* kind() const noexcept override { return #Name; }     \
  };

// jets / expressions
LINEIN_DECLARE_ERROR(EvaluationSingular)
LINEIN_DECLARE_ERROR(UnknownSymbol)
LINEIN_DECLARE_ERROR(MismatchedJets)
// metric DSL / catalog
LINEIN_DECLARE_ERROR(SyntaxError)
LINEIN_DECLARE_ERROR(SemanticError)
LINEIN_DECLARE_ERROR(UnknownBackground)
LINEIN_DECLARE_ERROR(BadDimension)
LINEIN_DECLARE_ERROR(MissingParam)
LINEIN_DECLARE_ERROR(OutsideDomain)
LINEIN_DECLARE_ERROR(DegenerateMetric)
// tensors / geometry / operators
LINEIN_DECLARE_ERROR(BadSlots)
LINEIN_DECLARE_ERROR(InsufficientJetOrder)
LINEIN_DECLARE_ERROR(PathMismatch)
// harness
LINEIN_DECLARE_ERROR(UnknownSuite)

#undef LINEIN_DECLARE_ERROR

}  // namespace linein
