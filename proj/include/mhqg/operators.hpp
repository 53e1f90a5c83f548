#pragma once

#include "mhqg/backend.hpp"
#include "mhqg/corpus.hpp"
#include "mhqg/text.hpp"

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace mhqg {

struct CellLocus {
  std::size_t row = 0;
  std::size_t col = 0;
  std::string raw;

  friend bool operator==(const CellLocus&, const CellLocus&) = default;
};

// An entity shared by two contexts. `mention` is the locus in the second
// (passage) context; `locus_a` is either a table cell or a mention in the
// first passage.
struct BridgeEntity {
  EntityMention mention;
  std::variant<CellLocus, EntityMention> locus_a;

  const CellLocus* cell() const { return std::get_if<CellLocus>(&locus_a); }
  // Mention located in the passage with this id, if any.
  const EntityMention* mention_in(std::string_view passage_id) const;
  // Distinct surfaces across both loci, passage side first.
  std::vector<std::string> surfaces() const;

  friend bool operator==(const BridgeEntity&, const BridgeEntity&) = default;
};

struct SingleHopQ {
  std::string question;
  std::string answer;
  std::string source;
  std::optional<EntityMention> anchored_entity;
};

enum class ComparativeProperty { Birthdate, Location, Nationality, LivePlace };

std::string_view to_string(ComparativeProperty p);
std::optional<ComparativeProperty> comparative_property_from_string(std::string_view s);

struct ComparativeEntity {
  EntityMention mention;
  ComparativeProperty property = ComparativeProperty::Location;
  std::string subject;  // title of the passage the mention came from
};

struct PropertyMatch {
  ComparativeEntity first;
  ComparativeEntity second;
};

// ---- selection ----

// Mentions never used as bridges: empty, short pure numbers, stopwords.
bool is_bridge_eligible(const EntityMention& m, const Gazetteers& gazetteers);

std::vector<BridgeEntity> find_bridge(const LinkedTableContext& table, const Passage& passage,
                                      const EntityTagger& tagger = default_tagger(),
                                      const Gazetteers& gazetteers = default_gazetteers());
std::vector<BridgeEntity> find_bridge(const Passage& first, const Passage& second,
                                      const EntityTagger& tagger = default_tagger(),
                                      const Gazetteers& gazetteers = default_gazetteers());

std::vector<ComparativeEntity> find_com_ent(const Passage& d, const EntityTagger& tagger = default_tagger());

// All (c1, c2) with equal property, ordered by c1 then c2.
std::vector<PropertyMatch> match_properties(const std::vector<ComparativeEntity>& a,
                                            const std::vector<ComparativeEntity>& b);

// ---- generation ----

SingleHopQ qg_with_ans(const Passage& d, const EntityMention& answer, const Backend& backend);
// Answer-aware question over a flattened table row; the answer is the cell.
SingleHopQ qg_with_ans(const Table& t, const CellLocus& answer, const Backend& backend);

inline constexpr int kDefaultQgRetries = 3;

SingleHopQ qg_with_ent(const Passage& d, const EntityMention& e, const Backend& backend, int attempts = kDefaultQgRetries);
// Entity-aware question over the entity's row; the answer must be another
// cell of that row.
SingleHopQ qg_with_ent(const Table& t, const CellLocus& e, const Backend& backend, int attempts = kDefaultQgRetries);

std::string describe_ent(const Table& t, const BridgeEntity& e, const Backend& backend);

// ---- fusion ----

std::string ques_to_sent(const SingleHopQ& q);

// "the [MASK] that <s'>" substituted for the first occurrence of a bridge
// surface in the question.
std::string build_bridge_mask(std::string_view question, std::string_view s, const std::vector<std::string>& surfaces);

std::string bridge_blend(const SingleHopQ& q, std::string_view s, const BridgeEntity& e, const Backend& backend);

enum class AnswerRule { Earlier, Same, First, Second, BothInFirst };

std::string_view to_string(AnswerRule r);

struct ComparisonTemplate {
  ComparativeProperty property = ComparativeProperty::Location;
  std::string text;  // placeholders {e1} {e2} {a1} {a2}
  AnswerRule rule = AnswerRule::Same;
};

std::vector<ComparisonTemplate> load_comparison_templates(const std::filesystem::path& file);
const std::vector<ComparisonTemplate>& default_comparison_templates();

struct ComparisonQuestion {
  std::string question;
  std::string answer;
  std::size_t template_index = 0;  // position in the template list
};

// Every applicable template for `prop`, with its derived answer. Throws
// UndecidableAnswer when no template yields an answer.
std::vector<ComparisonQuestion> comp_blend(const SingleHopQ& q1, const SingleHopQ& q2, ComparativeProperty prop,
                                           std::string_view e1, std::string_view e2, std::string_view a1,
                                           std::string_view a2,
                                           const std::vector<ComparisonTemplate>& templates = default_comparison_templates());

}  // namespace mhqg
