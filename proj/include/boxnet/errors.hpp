#pragma once

#include <stdexcept>
#include <string>

namespace boxnet {

/// Base of every error the library throws. `code()` is a stable identifier
/// suitable for machine-readable error lines.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

#define BOXNET_DEFINE_ERROR(Name)                                           \
  class Name : public Error {                                               \
   public:                                                                  \
    explicit Name(const std::string& message) : Error(#Name, message) {}    \
  }

BOXNET_DEFINE_ERROR(ConfigInvalid);
BOXNET_DEFINE_ERROR(MalformedAction);
BOXNET_DEFINE_ERROR(GoldenPlanUnavailable);
BOXNET_DEFINE_ERROR(EmptyGroup);
BOXNET_DEFINE_ERROR(GenerationExhausted);
BOXNET_DEFINE_ERROR(EmptyDataset);
BOXNET_DEFINE_ERROR(MissingEnv);
BOXNET_DEFINE_ERROR(TrialCountMismatch);
BOXNET_DEFINE_ERROR(FormatError);

#undef BOXNET_DEFINE_ERROR

}  // namespace boxnet
