#pragma once

#include <iosfwd>

namespace qsearch::cli {

enum ExitCode : int {
  kSuccess = 0,
  kUsageError = 1,
  kRuntimeError = 2,
  kAlarm = 10,
  kExhausted = 11,
};

/// Entry point for the qsearch tool; streams are injectable for tests.
int run(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace qsearch::cli
