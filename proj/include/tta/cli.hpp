#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

namespace tta::cli {

// Stable process exit codes.
enum ExitCode : int {
  kOk = 0,
  kInternalError = 1,
  kInvalidArguments = 2,
  kIoFailure = 3,
  kDimensionMismatch = 4,
  kFormatError = 5,
};

inline constexpr int kReportSchemaVersion = 1;
inline constexpr int kRunManifestVersion = 1;

/// Entry point shared by the `tta` binary and the tests; args[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Problems found in an evaluation report; empty when it matches the schema.
std::vector<std::string> validate_report(const nlohmann::json& report);

}  // namespace tta::cli
