#ifndef HIER_TOOLS_IO_UTIL_H_
#define HIER_TOOLS_IO_UTIL_H_

#include <string>

namespace hier::cli {

// "-" reads standard input. Throws Error(kInvalidArgument) if unreadable.
std::string read_file(const std::string& path);

}  // namespace hier::cli

#endif  // HIER_TOOLS_IO_UTIL_H_
