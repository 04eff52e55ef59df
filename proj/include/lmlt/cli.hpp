#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace lmlt::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kDivergence = 2, kIo = 3 };

/// Entry point of the `lmlt` tool. Subcommands: upscale, count, gradcheck,
/// bench, train-toy, selftest, init.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

struct Invariant {
  std::string name;
  /// Throws (any std::exception) when the invariant does not hold.
  std::function<void()> check;
};

/// Cross-module invariant suite run by `lmlt selftest`.
std::vector<Invariant> invariant_suite();

}  // namespace lmlt::cli
