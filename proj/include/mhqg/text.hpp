#pragma once

#include <cstddef>
#include <compare>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace mhqg {

// Half-open byte range [begin, end) into a UTF-8 string.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool contains(const Span& other) const { return begin <= other.begin && other.end <= end; }
  bool overlaps(const Span& other) const { return begin < other.end && other.begin < end; }
  friend bool operator==(const Span&, const Span&) = default;
};

enum class EntityType { Person, Location, Nationality, DateTime, Number, Other };

std::string_view to_string(EntityType t);
std::optional<EntityType> entity_type_from_string(std::string_view s);

struct EntityMention {
  std::string surface;
  std::string normalized;
  EntityType etype = EntityType::Other;
  Span span;
  std::string source;

  friend bool operator==(const EntityMention&, const EntityMention&) = default;
};

enum class WhType { What, When, Where, Which, Who, How, Other };

inline constexpr WhType kAllWhTypes[] = {WhType::What, WhType::When,  WhType::Where, WhType::Which,
                                         WhType::Who,  WhType::How,   WhType::Other};

std::string_view to_string(WhType t);

// Word lists backing the rule tagger. Each file holds one entry per line;
// blank lines and lines starting with '#' are ignored.
struct Gazetteers {
  std::unordered_set<std::string> nationalities;   // exact surface forms, e.g. "American"
  std::unordered_set<std::string> locations;       // exact surface forms, may be multi-word
  std::unordered_set<std::string> stopwords;       // normalized forms never used as bridges
  std::unordered_set<std::string> non_person_heads;  // capitalized tokens that mark a name as OTHER

  static Gazetteers load(const std::filesystem::path& dir);
};

// Directory holding the bundled gazetteers and templates; overridable with
// the MHQG_DATA_DIR environment variable.
std::filesystem::path default_data_dir();
const Gazetteers& default_gazetteers();

enum class TokenKind { Word, Number, Punct };

struct Token {
  std::string_view text;
  Span span;
  TokenKind kind = TokenKind::Word;
};

std::vector<Token> tokenize(std::string_view text);

// Sentence boundaries: ". ", "? " or "! " followed by an uppercase letter or
// digit, except after Mr. Mrs. Dr. St. No.
std::vector<Span> split_sentences(std::string_view text);

bool is_capitalized(std::string_view word);
std::string ascii_lower(std::string_view s);
std::string trim(std::string_view s);
std::string collapse_whitespace(std::string_view s);
bool icontains(std::string_view haystack, std::string_view needle);
std::optional<std::size_t> ifind(std::string_view haystack, std::string_view needle, std::size_t from = 0);

// Pluggable entity tagger. The rule tagger is the default; a model-served
// tagger can be dropped in behind the same interface.
class EntityTagger {
 public:
  virtual ~EntityTagger() = default;
  virtual std::vector<EntityMention> tag(std::string_view text, std::string_view source) const = 0;
};

class RuleTagger final : public EntityTagger {
 public:
  explicit RuleTagger(const Gazetteers& gazetteers) : gaz_(&gazetteers) {}

  std::vector<EntityMention> tag(std::string_view text, std::string_view source) const override;
  const Gazetteers& gazetteers() const { return *gaz_; }

 private:
  const Gazetteers* gaz_;
};

const RuleTagger& default_tagger();

std::vector<EntityMention> extract_entities(std::string_view text, const EntityTagger& tagger = default_tagger(),
                                            std::string_view source = {});

// Lowercase, NFKC, strip leading/trailing punctuation and leading articles,
// collapse whitespace. Idempotent.
std::string normalize_surface(std::string_view s);

// Rewrites a wh-question into a relative-clause predicate usable as
// "the [MASK] that <predicate>". Throws UnsupportedQuestionForm when none of
// the subject-wh, do-support or copular rules apply.
std::string question_to_predicate(std::string_view question, std::string_view answer_entity);

WhType classify_wh(std::string_view question);

// Verb morphology for the rewrite rules.
bool is_verb_like(std::string_view lower_token);
std::string verb_lemma(std::string_view verb);
std::string verb_past(std::string_view lemma);
std::string verb_third_person(std::string_view lemma);
bool is_past_form(std::string_view lower_token);

struct CalendarDate {
  int year = 0;
  std::optional<int> month;
  std::optional<int> day;

  // Earliest instant the (possibly partial) date can denote.
  int sort_key() const { return year * 10000 + month.value_or(1) * 100 + day.value_or(1); }
  friend bool operator==(const CalendarDate&, const CalendarDate&) = default;
};

inline std::strong_ordering compare_earliest(const CalendarDate& a, const CalendarDate& b) {
  return a.sort_key() <=> b.sort_key();
}

std::optional<CalendarDate> parse_date(std::string_view s);
std::optional<int> month_from_name(std::string_view name);

}  // namespace mhqg
