#pragma once
#include <stdexcept>
#include <string>

namespace deduct {

/// Base for every pipeline error. `stage` is filled in by the estimation
/// driver so CLI diagnostics can name the failing step.
class Error : public std::runtime_error {
  public:
    explicit Error(std::string what) : std::runtime_error(std::move(what)) {}
    void set_stage(const std::string& stage) { stage_ = stage; }
    const std::string& stage() const { return stage_; }

  private:
    std::string stage_;
};

#define DEDUCT_DEFINE_ERROR(Name)                                  \
    class Name : public Error {                                    \
      public:                                                      \
        explicit Name(std::string what) : Error(std::move(what)) {} \
    }

DEDUCT_DEFINE_ERROR(MalformedRow);
DEDUCT_DEFINE_ERROR(InvariantViolation);
DEDUCT_DEFINE_ERROR(EmptyDataset);
DEDUCT_DEFINE_ERROR(EmptyStratum);
DEDUCT_DEFINE_ERROR(NotInSupport);
DEDUCT_DEFINE_ERROR(DegenerateSelection);
DEDUCT_DEFINE_ERROR(NonConvergence);
DEDUCT_DEFINE_ERROR(ZeroVariance);
DEDUCT_DEFINE_ERROR(DegenerateExtension);
DEDUCT_DEFINE_ERROR(NoCompleteCases);
DEDUCT_DEFINE_ERROR(MissingDropoutTime);

#undef DEDUCT_DEFINE_ERROR

}  // namespace deduct
