#ifndef HIER_ATOMIZER_H_
#define HIER_ATOMIZER_H_

#include <string>
#include <string_view>
#include <vector>

#include "hier/context.h"

namespace hier {

enum class MarkerAnchor {
  kSentenceStart,  // bare leading verbs: "Write ...", "Do not ..."
  kAnywhere,       // modal / obligation cues: "... must ...", "... should ..."
};

struct ImperativeMarker {
  std::string phrase;  // lowercase, matched on word boundaries
  MarkerAnchor anchor = MarkerAnchor::kSentenceStart;
};

struct AtomizerRules {
  std::string version;
  std::vector<ImperativeMarker> imperative_markers;
  // Each character is a delimiter. '\n' always splits; the others split only
  // when followed by whitespace or end of text, so URLs and decimals survive.
  std::string sentence_delimiters = ".!?\n";
  bool merge_adjacent = true;
  bool skip_assistant = false;
};

// The versioned built-in rule table ("atomizer-rules/v1").
const AtomizerRules& default_atomizer_rules();

void validate(const AtomizerRules& rules);

// Sentence units of `content`, in order, trimmed, empties dropped.
std::vector<std::string> split_sentences(std::string_view content,
                                         const AtomizerRules& rules);

InstructionKind classify_kind(std::string_view sentence,
                              const AtomizerRules& rules);

// True if `content` is a JSON document or looks like an XML element. Tool
// payloads of this shape are kept whole as one declarative atom.
bool is_structured_payload(std::string_view content);

// Role split -> sentence split -> classify -> merge same-kind neighbours ->
// contiguous ids. Throws Error(kCapExceeded) past config.max_instructions.
std::vector<AtomicInstruction> atomize(const Context& context,
                                       const AtomizerRules& rules,
                                       const HierarchyConfig& config);

}  // namespace hier

#endif  // HIER_ATOMIZER_H_
