#include "mhqg/qdmr.hpp"

#include "mhqg/error.hpp"
#include "mhqg/hash.hpp"
#include "mhqg/operators.hpp"

#include <cctype>

namespace mhqg {

namespace {

std::string_view attribute_name(ComparativeProperty p) {
  switch (p) {
    case ComparativeProperty::Birthdate: return "birthdate";
    case ComparativeProperty::Nationality: return "nationality";
    case ComparativeProperty::Location: return "location";
    case ComparativeProperty::LivePlace: return "hometown";
  }
  return "location";
}

std::string_view predicate_verb(ComparativeProperty p) {
  switch (p) {
    case ComparativeProperty::Birthdate: return "born";
    case ComparativeProperty::Nationality: return "is";
    case ComparativeProperty::Location: return "located in";
    case ComparativeProperty::LivePlace: return "lives in";
  }
  return "is";
}

std::size_t pick(std::uint64_t seed, std::string_view what, std::size_t n) {
  return static_cast<std::size_t>(fnv1a64(what, fnv1a64(std::to_string(seed))) % n);
}

}  // namespace

std::vector<std::string> check_qdmr(const QdmrProgram& p) {
  std::vector<std::string> v;
  if (p.steps.empty()) v.push_back("empty program");
  for (std::size_t i = 0; i < p.steps.size(); ++i) {
    const std::string& s = p.steps[i];
    if (s.rfind("Return ", 0) != 0) v.push_back("step " + std::to_string(i + 1) + " does not start with 'Return '");
    for (std::size_t pos = s.find('#'); pos != std::string::npos; pos = s.find('#', pos + 1)) {
      std::size_t end = pos + 1;
      while (end < s.size() && std::isdigit(static_cast<unsigned char>(s[end]))) ++end;
      if (end == pos + 1) {
        v.push_back("step " + std::to_string(i + 1) + ": '#' without a step number");
        continue;
      }
      const std::size_t k = std::stoul(s.substr(pos + 1, end - pos - 1));
      if (k < 1 || k > i) v.push_back("step " + std::to_string(i + 1) + ": reference #" + std::to_string(k) + " is not backward");
    }
  }
  return v;
}

std::vector<QdmrProgram> make_qdmr(const LinkedTableContext& ctx, GraphKind kind, std::uint64_t seed,
                                   const EntityTagger& tagger) {
  if (kind != GraphKind::TableToText && kind != GraphKind::TextToTable) {
    throw PreconditionError("make_qdmr: kind must be TABLE_TO_TEXT or TEXT_TO_TABLE");
  }
  const Table& t = ctx.table;
  if (t.headers.size() < 2 || t.rows.empty()) {
    throw InsufficientStructure("table '" + t.id + "' needs at least 2 columns and 1 row");
  }
  std::vector<QdmrProgram> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    std::vector<std::size_t> linked;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (!row[c].raw.empty() && !row[c].linked_passage_ids.empty()) linked.push_back(c);
    }
    if (linked.empty()) continue;
    const std::string row_key = t.id + '\x1f' + std::to_string(r);
    const std::size_t a = linked[pick(seed, row_key + "\x1f" "A", linked.size())];
    std::vector<std::size_t> others;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c != a && !row[c].raw.empty()) others.push_back(c);
    }
    if (others.empty()) continue;
    const std::size_t b = others[pick(seed, row_key + "\x1f" "B", others.size())];

    auto it = ctx.passages.find(row[a].linked_passage_ids.front());
    if (it == ctx.passages.end()) continue;
    const auto comps = find_com_ent(it->second, tagger);
    if (comps.empty()) continue;
    const ComparativeEntity& attr = comps.front();

    QdmrProgram p;
    p.kind = kind;
    p.row = r;
    p.column_a = t.headers[a];
    p.column_b = t.headers[b];
    p.value = row[b].raw;
    p.title = t.title;
    p.attribute = std::string(attribute_name(attr.property));
    p.predicate = std::string(predicate_verb(attr.property)) + " " + attr.mention.surface;
    if (kind == GraphKind::TableToText) {
      p.steps = {"Return " + p.column_a, "Return #1 in " + p.column_b + " " + p.value, "Return #2 in " + p.title,
                 "Return what is the " + p.attribute + " of #3"};
    } else {
      p.steps = {"Return " + p.column_a, "Return #1 in " + p.title, "Return #2 that " + p.predicate,
                 "Return what is the " + p.column_b + " of #3"};
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::string realize_rules(const QdmrProgram& p) {
  if (p.steps.empty()) throw PreconditionError("realize: empty program");
  if (auto v = check_qdmr(p); !v.empty()) throw PreconditionError("realize: invalid program: " + v.front());
  if (p.kind == GraphKind::TableToText) {
    return "What is the " + p.attribute + " of the " + p.column_a + " that " + p.column_b + " is " + p.value + " in " +
           p.title + "?";
  }
  return "What is the " + p.column_b + " of the " + p.column_a + " in " + p.title + " that " + p.predicate + "?";
}

std::string realize(const QdmrProgram& p, const Backend* backend) {
  if (p.steps.empty()) throw PreconditionError("realize: empty program");
  if (backend) return backend->qdmr_to_question(p.steps);
  return realize_rules(p);
}

}  // namespace mhqg
