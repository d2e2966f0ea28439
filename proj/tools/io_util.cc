#include "io_util.h"

#include <fstream>
#include <iostream>
#include <sstream>

#include "hier/errors.h"

namespace hier::cli {

std::string read_file(const std::string& path) {
  std::ostringstream ss;
  if (path == "-") {
    ss << std::cin.rdbuf();
    return ss.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kInvalidArgument, "cannot read " + path);
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace hier::cli
