#ifndef HIER_TOOLS_APP_CONFIG_H_
#define HIER_TOOLS_APP_CONFIG_H_

#include <optional>
#include <string>

#include "hier/atomizer.h"
#include "hier/conflict_scan.h"
#include "hier/context.h"
#include "hier/nli_client.h"
#include "hier/verifier.h"

namespace hier::cli {

// One document:
//   {"detector": {...}, "endpoint": {...}, "hierarchy": {...},
//    "atomizer_rules": "builtin" | "<path>" | {...},
//    "verifier_rules": "<path>" | [...]}
// Relative rule paths resolve against the config file's directory.
struct AppConfig {
  DetectorSpec detector;
  std::optional<EndpointConfig> endpoint;
  HierarchyConfig hierarchy;
  AtomizerRules atomizer_rules = default_atomizer_rules();
  ConstraintTable verifier_rules;  // on top of the built-in patterns
};

AppConfig load_app_config(const std::string& path);

// Throws Error(kInvalidArgument) if the external backend lacks an endpoint.
void validate(const AppConfig& config);

}  // namespace hier::cli

#endif  // HIER_TOOLS_APP_CONFIG_H_
