#include "hier/refiner.h"

#include <algorithm>
#include <sstream>

#include "hier/errors.h"

namespace hier {
namespace {

constexpr std::string_view kActiveHeading = "## Active Instructions";
constexpr std::string_view kOverruledHeading = "## Overruled";
constexpr std::string_view kDataHeading = "## Context Data";
constexpr std::string_view kOverruledBy = " — overruled by: ";

[[noreturn]] void inconsistent(const std::string& what) {
  throw Error(ErrorCode::kInconsistentResolution, what);
}

void check_partition(std::size_t n, const Resolution& r) {
  std::vector<int> seen(n, 0);
  for (const std::vector<int>* ids : {&r.selected, &r.rejected}) {
    for (int id : *ids) {
      if (id < 0 || static_cast<std::size_t>(id) >= n) {
        inconsistent("instruction id " + std::to_string(id) + " is out of range");
      }
      if (seen[id]++) inconsistent("instruction " + std::to_string(id) + " listed twice");
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!seen[i]) inconsistent("instruction " + std::to_string(i) + " is unassigned");
  }
}

std::string level_heading(AuthorityLevel level) {
  return "### Level " + std::to_string(level.value) + " (" + level_label(level) + ")";
}

}  // namespace

std::string_view reason_name(RejectionReason r) {
  return r == RejectionReason::kHigherAuthority ? "higher_authority" : "tie_break";
}

RefinedContext refine(const std::vector<AtomicInstruction>& atoms,
                      const Resolution& resolution, const ConflictMatrix& matrix) {
  const std::size_t n = atoms.size();
  if (matrix.size() != n) {
    throw Error(ErrorCode::kMatrixShapeMismatch,
                "conflict matrix size does not match instruction count");
  }
  check_partition(n, resolution);
  if (!is_conflict_free(matrix, resolution.selected)) {
    inconsistent("selected set contains a conflicting pair");
  }

  RefinedContext out;
  std::vector<int> by_level = resolution.selected;
  std::stable_sort(by_level.begin(), by_level.end(), [&](int a, int b) {
    return atoms[a].authority < atoms[b].authority;
  });
  for (int id : by_level) {
    out.active_blocks.push_back(
        {id, atoms[id].authority, atoms[id].kind, atoms[id].content});
  }

  for (int r : resolution.rejected) {
    int partner = -1;
    for (int s : resolution.selected) {
      if (!matrix.conflict(r, s)) continue;
      if (partner < 0 || atoms[s].authority < atoms[partner].authority) partner = s;
    }
    if (partner < 0) {
      inconsistent("rejected instruction " + std::to_string(r) +
                   " has no selected conflict partner");
    }
    out.rejection_notices.push_back(
        {r, atoms[r].content, partner, atoms[partner].content,
         dominates(atoms[partner].authority, atoms[r].authority)
             ? RejectionReason::kHigherAuthority
             : RejectionReason::kTieBreak});
  }

  std::ostringstream text;
  auto emit_grouped = [&](InstructionKind kind, bool bullets) {
    int level = -1;
    bool first_entry = true;
    for (const ActiveBlock& b : out.active_blocks) {
      if (b.kind != kind) continue;
      if (b.level.value != level) {
        level = b.level.value;
        text << level_heading(b.level) << "\n";
      } else if (!bullets && !first_entry) {
        text << "\n";
      }
      first_entry = false;
      text << (bullets ? "- " : "") << b.text << "\n";
    }
  };

  text << kActiveHeading << "\n";
  emit_grouped(InstructionKind::kImperative, true);
  if (!out.rejection_notices.empty()) {
    text << "\n" << kOverruledHeading << "\n";
    for (const RejectionNotice& notice : out.rejection_notices) {
      text << "- " << notice.text << kOverruledBy << notice.overruled_by << "\n";
    }
  }
  text << "\n" << kDataHeading << "\n";
  emit_grouped(InstructionKind::kDeclarative, false);
  out.rendered = text.str();
  return out;
}

RenderedSections parse_rendered(std::string_view rendered) {
  RenderedSections out;
  enum class Section { kNone, kActive, kOverruled, kData } section = Section::kNone;
  std::string data_block;
  auto flush_data = [&] {
    while (!data_block.empty() && data_block.back() == '\n') data_block.pop_back();
    if (!data_block.empty()) out.context_data.push_back(data_block);
    data_block.clear();
  };

  std::size_t pos = 0;
  while (pos < rendered.size()) {
    std::size_t nl = rendered.find('\n', pos);
    if (nl == std::string_view::npos) nl = rendered.size();
    const std::string_view line = rendered.substr(pos, nl - pos);
    pos = nl + 1;

    if (line == kActiveHeading) {
      section = Section::kActive;
      continue;
    }
    if (line == kOverruledHeading) {
      section = Section::kOverruled;
      continue;
    }
    if (line == kDataHeading) {
      section = Section::kData;
      continue;
    }
    if (line.starts_with("### Level ")) {
      if (section == Section::kData) flush_data();
      continue;
    }
    switch (section) {
      case Section::kActive:
        if (line.starts_with("- ")) out.active.emplace_back(line.substr(2));
        break;
      case Section::kOverruled:
        if (line.starts_with("- ")) out.overruled.emplace_back(line.substr(2));
        break;
      case Section::kData:
        if (line.empty()) {
          flush_data();
        } else {
          if (!data_block.empty()) data_block.push_back('\n');
          data_block.append(line);
        }
        break;
      case Section::kNone:
        break;
    }
  }
  flush_data();
  return out;
}

}  // namespace hier
