#include "hier/wcnf.h"

#include <charconv>
#include <cstdlib>
#include <limits>
#include <sstream>

#include "hier/errors.h"
#include "text_util.h"

namespace hier {
namespace {

[[noreturn]] void parse_fail(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::kParseError,
              "wcnf line " + std::to_string(line) + ": " + what);
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

std::uint64_t instruction_weight(AuthorityLevel level, int depth, std::uint64_t base) {
  std::uint64_t w = 1;
  for (int e = 0; e < depth - level.value; ++e) {
    if (w > std::numeric_limits<std::uint64_t>::max() / base) {
      throw Error(ErrorCode::kInvalidArgument,
                  "weight base^" + std::to_string(depth - level.value) +
                      " overflows 64 bits");
    }
    w *= base;
  }
  return w;
}

std::string to_weighted_cnf(const std::vector<AtomicInstruction>& atoms,
                            const ConflictMatrix& matrix,
                            const HierarchyConfig& config, std::uint64_t base) {
  if (matrix.size() != atoms.size()) {
    throw Error(ErrorCode::kMatrixShapeMismatch,
                "conflict matrix size does not match instruction count");
  }
  validate_atoms(atoms, config);
  if (base <= atoms.size()) {
    throw Error(ErrorCode::kBaseTooSmall,
                "base " + std::to_string(base) + " must exceed the instruction count " +
                    std::to_string(atoms.size()));
  }

  std::vector<std::uint64_t> weights;
  std::uint64_t total = 0;
  for (const AtomicInstruction& a : atoms) {
    weights.push_back(instruction_weight(a.authority, config.depth, base));
    if (total > std::numeric_limits<std::uint64_t>::max() - weights.back() - 1) {
      throw Error(ErrorCode::kInvalidArgument, "total soft weight overflows 64 bits");
    }
    total += weights.back();
  }
  const std::uint64_t top = total + 1;
  const auto pairs = matrix.conflict_pairs();

  std::ostringstream out;
  out << "c hierarchical instruction selection\n";
  out << "c base " << base << " depth " << config.depth << "\n";
  out << "p wcnf " << atoms.size() << ' ' << atoms.size() + pairs.size() << ' ' << top
      << "\n";
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    out << weights[i] << ' ' << i + 1 << " 0\n";
  }
  for (const auto& [i, j] : pairs) {
    out << top << " -" << i + 1 << " -" << j + 1 << " 0\n";
  }
  return out.str();
}

WeightedCnf parse_weighted_cnf(std::string_view text) {
  WeightedCnf cnf;
  bool have_header = false;
  std::size_t declared_clauses = 0;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string_view raw =
        text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const std::string_view line = text::trim(raw);
    if (line.empty() || line.front() == 'c') continue;

    const std::vector<std::string> tok = text::split_whitespace(line);
    if (tok.front() == "p") {
      if (have_header) parse_fail(line_no, "duplicate problem line");
      if (tok.size() < 4 || tok[1] != "wcnf") parse_fail(line_no, "expected 'p wcnf'");
      if (!parse_number(tok[2], cnf.num_vars) || !parse_number(tok[3], declared_clauses)) {
        parse_fail(line_no, "bad problem line counts");
      }
      if (tok.size() >= 5 && !parse_number(tok[4], cnf.top)) {
        parse_fail(line_no, "bad top weight");
      }
      have_header = true;
      continue;
    }

    WeightedClause clause;
    std::size_t first = 1;
    if (tok.front() == "h") {
      clause.hard = true;
    } else if (!parse_number(tok.front(), clause.weight)) {
      parse_fail(line_no, "bad clause weight '" + tok.front() + "'");
    } else {
      clause.hard = cnf.top != 0 && clause.weight >= cnf.top;
    }
    bool terminated = false;
    for (std::size_t k = first; k < tok.size(); ++k) {
      int lit = 0;
      if (!parse_number(tok[k], lit)) parse_fail(line_no, "bad literal '" + tok[k] + "'");
      if (lit == 0) {
        terminated = k + 1 == tok.size();
        if (!terminated) parse_fail(line_no, "literals after terminating 0");
        break;
      }
      if (std::abs(lit) > cnf.num_vars && have_header) {
        parse_fail(line_no, "literal " + tok[k] + " exceeds declared variables");
      }
      clause.literals.push_back(lit);
    }
    if (!terminated) parse_fail(line_no, "clause not terminated by 0");
    cnf.clauses.push_back(std::move(clause));
  }
  if (have_header && declared_clauses != cnf.clauses.size()) {
    parse_fail(line_no, "declared " + std::to_string(declared_clauses) +
                            " clauses but found " + std::to_string(cnf.clauses.size()));
  }
  return cnf;
}

}  // namespace hier
