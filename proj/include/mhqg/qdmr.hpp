#pragma once

#include "mhqg/backend.hpp"
#include "mhqg/corpus.hpp"
#include "mhqg/graph.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace mhqg {

// A four-step "Return ..." program plus the slot values it was built from.
struct QdmrProgram {
  std::vector<std::string> steps;
  GraphKind kind = GraphKind::TableToText;

  std::size_t row = 0;
  std::string column_a;   // header of the linked column
  std::string column_b;   // header of the restricting / asked column
  std::string value;      // cell of column_b in `row`
  std::string title;
  std::string attribute;  // TABLE_TO_TEXT: text attribute, e.g. "birthdate"
  std::string predicate;  // TEXT_TO_TABLE: e.g. "born 19 January 1980"
};

// Violations of the reference rules: "#k" must point to an earlier step and
// step 1 has no reference. Empty means valid.
std::vector<std::string> check_qdmr(const QdmrProgram& p);

// One program per row whose linked passage yields a comparative attribute.
// Column choices are seeded. Throws InsufficientStructure for tables with
// fewer than two columns or no rows.
std::vector<QdmrProgram> make_qdmr(const LinkedTableContext& ctx, GraphKind kind, std::uint64_t seed = 0,
                                   const EntityTagger& tagger = default_tagger());

// Rule realizer: nests steps 2 and 3 as restrictors under the step 4 frame.
std::string realize_rules(const QdmrProgram& p);

// Sends the steps to the backend's translator when one is given, else rules.
std::string realize(const QdmrProgram& p, const Backend* backend = nullptr);

}  // namespace mhqg
