#include "app_config.h"

#include <filesystem>

#include "hier/errors.h"
#include "hier/json_io.h"
#include "io_util.h"

namespace hier::cli {
namespace {

Json load_relative(const std::string& config_path, const std::string& target) {
  std::filesystem::path p = target;
  if (p.is_relative()) p = std::filesystem::path(config_path).parent_path() / p;
  return parse_json_text(read_file(p.string()), p.string());
}

}  // namespace

AppConfig load_app_config(const std::string& path) {
  const Json doc = parse_json_text(read_file(path), path);
  if (!doc.is_object()) throw Error(ErrorCode::kParseError, path + ": config must be an object");
  AppConfig c;
  for (const auto& [key, value] : doc.items()) {
    if (key == "detector") {
      c.detector = detector_spec_from_json(value);
    } else if (key == "endpoint") {
      if (!value.is_null()) c.endpoint = endpoint_config_from_json(value);
    } else if (key == "hierarchy") {
      c.hierarchy = hierarchy_config_from_json(value);
    } else if (key == "atomizer_rules") {
      if (value.is_object()) {
        c.atomizer_rules = atomizer_rules_from_json(value);
      } else if (value.is_string() && value.get<std::string>() != "builtin") {
        c.atomizer_rules = atomizer_rules_from_json(load_relative(path, value.get<std::string>()));
      } else if (!value.is_string()) {
        throw Error(ErrorCode::kParseError, "atomizer_rules must be \"builtin\", a path or an object");
      }
    } else if (key == "verifier_rules") {
      c.verifier_rules = constraint_table_from_json(
          value.is_string() ? load_relative(path, value.get<std::string>()) : value);
    } else {
      throw Error(ErrorCode::kParseError, "unexpected config field \"" + key + "\"");
    }
  }
  validate(c);
  return c;
}

void validate(const AppConfig& c) {
  validate(c.detector);
  validate(c.hierarchy);
  validate(c.atomizer_rules);
  if (c.detector.backend == DetectorBackend::kExternal && !c.endpoint) {
    throw Error(ErrorCode::kInvalidArgument, "external detector needs an endpoint section");
  }
  if (c.endpoint) validate(*c.endpoint);
}

}  // namespace hier::cli
