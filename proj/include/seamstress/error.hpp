#pragma once

#include <stdexcept>
#include <string>

namespace seamstress {

/// Base class for every error the library raises. The `code()` string is
/// stable and is what the CLI and run log print.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

#define SEAMSTRESS_DEFINE_ERROR(Name)                                   \
  class Name : public Error {                                           \
   public:                                                              \
    explicit Name(const std::string& what) : Error(#Name, what) {}      \
  }

// c_model
SEAMSTRESS_DEFINE_ERROR(UnbalancedBraces);
SEAMSTRESS_DEFINE_ERROR(DanglingEndif);
SEAMSTRESS_DEFINE_ERROR(UnterminatedConditional);
SEAMSTRESS_DEFINE_ERROR(AmbiguousDefinition);

// segment
SEAMSTRESS_DEFINE_ERROR(FloorReached);

// metadata
SEAMSTRESS_DEFINE_ERROR(ScanFailure);

// prompts
SEAMSTRESS_DEFINE_ERROR(BudgetExceeded);
SEAMSTRESS_DEFINE_ERROR(FormatError);
SEAMSTRESS_DEFINE_ERROR(TemplateError);

// llm_backend
SEAMSTRESS_DEFINE_ERROR(ContextOverflow);
SEAMSTRESS_DEFINE_ERROR(TransportError);
SEAMSTRESS_DEFINE_ERROR(RateLimited);
SEAMSTRESS_DEFINE_ERROR(GiveUp);
SEAMSTRESS_DEFINE_ERROR(ReplayMiss);
SEAMSTRESS_DEFINE_ERROR(MissingCredentials);

// orchestrator
SEAMSTRESS_DEFINE_ERROR(WorkspaceExists);
SEAMSTRESS_DEFINE_ERROR(PatchOutOfRange);
SEAMSTRESS_DEFINE_ERROR(OverlappingPatches);
SEAMSTRESS_DEFINE_ERROR(DisallowedDependency);
SEAMSTRESS_DEFINE_ERROR(ToolchainMissing);
SEAMSTRESS_DEFINE_ERROR(CompileTimeout);

// cli / config
SEAMSTRESS_DEFINE_ERROR(ConfigError);
SEAMSTRESS_DEFINE_ERROR(IoError);

#undef SEAMSTRESS_DEFINE_ERROR

}  // namespace seamstress
