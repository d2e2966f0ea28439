#ifndef HIER_JSON_IO_H_
#define HIER_JSON_IO_H_

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "hier/atomizer.h"
#include "hier/conflict_scan.h"
#include "hier/context.h"
#include "hier/hcal_loss.h"
#include "hier/nli_client.h"
#include "hier/refiner.h"
#include "hier/solver.h"
#include "hier/verifier.h"

// Wire formats. Readers throw Error(kParseError) on malformed documents and
// run the type's own validation where it has one.
namespace hier {

using Json = nlohmann::ordered_json;

Json parse_json_text(std::string_view text, std::string_view what);

// {"messages": [{"role", "content", "turn_index"?}]} or a bare message array.
// A missing turn_index defaults to the message position.
Context context_from_json(const Json& j);
Json to_json(const Context& c);

Json to_json(const AtomicInstruction& a);
Json to_json(const std::vector<AtomicInstruction>& atoms);
std::vector<AtomicInstruction> atoms_from_json(const Json& j);

// {"n": 5, "conflicts": [[i, j], ...], "relations": {"i,j": "contradiction"}}
Json to_json(const ConflictMatrix& m);
ConflictMatrix matrix_from_json(const Json& j);

Json to_json(const Resolution& r);
Resolution resolution_from_json(const Json& j);

Json to_json(const RefinedContext& r);

Json to_json(const HierarchyConfig& c);
HierarchyConfig hierarchy_config_from_json(const Json& j);

Json to_json(const AtomizerRules& r);
AtomizerRules atomizer_rules_from_json(const Json& j);

Json to_json(const DetectorSpec& s);
DetectorSpec detector_spec_from_json(const Json& j);

// The API key is never read from a document; it comes from the environment.
EndpointConfig endpoint_config_from_json(const Json& j);
Json to_json(const EndpointConfig& c);  // key omitted

// {"s_w", "s_l", "s_w_ref"?, "s_l_ref"?} or {"logp_w": [...], "logp_l": [...],
// "logp_w_ref"?, "logp_l_ref"?}; per-token lists are length-normalized.
PreferenceScores scores_from_json(const Json& j);
LossParams loss_params_from_json(const Json& j);
Json to_json(const LossBreakdown& b);

Json to_json(const Constraint& c);
// [{"pattern", "kind", "count"?, "arg"?}] or {"rules": [...]}.
ConstraintTable constraint_table_from_json(const Json& j);
Json to_json(const ComplianceReport& r);
Json to_json(const DetectorMetrics& m);

}  // namespace hier

#endif  // HIER_JSON_IO_H_
