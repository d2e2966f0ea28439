#ifndef HIER_TOOLS_CLI_H_
#define HIER_TOOLS_CLI_H_

#include <iosfwd>

namespace hier::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomainError = 1;
inline constexpr int kExitUsage = 2;

// Entry point behind the hier_resolve binary. Results go to `out` (or the
// --out file), diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hier::cli

#endif  // HIER_TOOLS_CLI_H_
