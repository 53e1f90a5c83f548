#include "mhqg/text.hpp"

#include "mhqg/error.hpp"

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <map>
#include <regex>
#include <stdexcept>

#ifndef MHQG_DEFAULT_DATA_DIR
#define MHQG_DEFAULT_DATA_DIR "data"
#endif

namespace mhqg {

namespace {

constexpr std::array<std::string_view, 12> kMonths = {"january", "february", "march",     "april",   "may",      "june",
                                                      "july",    "august",   "september", "october", "november", "december"};

const std::unordered_set<std::string>& sentence_initial_function_words() {
  static const std::unordered_set<std::string> words = {
      "The",   "A",     "An",    "In",    "On",     "At",      "By",   "For",   "From",  "With", "He",
      "She",   "It",    "They",  "We",    "I",      "His",     "Her",  "Its",   "Their", "This", "That",
      "These", "Those", "There", "Here",  "When",   "What",    "Who",  "Whom",  "Which", "Where", "Why",
      "How",   "After", "Before", "During", "Since", "Although", "While", "As",  "If",    "But",  "And",
      "Or",    "Is",    "Was",   "Are",   "Were",   "Did",     "Does", "Do",    "Both",  "Two",  "One"};
  return words;
}

const std::unordered_set<std::string>& units() {
  static const std::unordered_set<std::string> u = {"%",    "percent", "km",    "m",      "cm",   "mm",    "kg",
                                                   "g",    "lb",      "lbs",   "miles",  "mile", "feet",  "ft",
                                                   "metres", "meters", "acres", "people", "km2",  "sq"};
  return u;
}

bool is_ascii_alpha(unsigned char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
bool is_ascii_digit(unsigned char c) { return c >= '0' && c <= '9'; }
bool is_word_byte(unsigned char c) { return is_ascii_alpha(c) || is_ascii_digit(c) || c >= 0x80; }

std::string to_utf8(const icu::UnicodeString& u) {
  std::string out;
  u.toUTF8String(out);
  return out;
}

void load_list(const std::filesystem::path& file, std::unordered_set<std::string>& into, bool normalize) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot read gazetteer '" + file.string() + "'");
  std::string line;
  while (std::getline(in, line)) {
    std::string entry = trim(line);
    if (entry.empty() || entry.front() == '#') continue;
    into.insert(normalize ? normalize_surface(entry) : collapse_whitespace(entry));
  }
}

struct Candidate {
  std::size_t first = 0;  // token index
  std::size_t last = 0;   // one past
  EntityType etype = EntityType::Other;
  int priority = 0;
};

int priority_of(EntityType t) {
  switch (t) {
    case EntityType::DateTime: return 0;
    case EntityType::Number: return 1;
    case EntityType::Nationality: return 2;
    case EntityType::Location: return 3;
    case EntityType::Person: return 4;
    case EntityType::Other: return 5;
  }
  return 6;
}

std::optional<int> small_int(std::string_view s, int lo, int hi) {
  if (s.empty() || s.size() > 4) return std::nullopt;
  int v = 0;
  for (char c : s) {
    if (!is_ascii_digit(static_cast<unsigned char>(c))) return std::nullopt;
    v = v * 10 + (c - '0');
  }
  if (v < lo || v > hi) return std::nullopt;
  return v;
}

bool is_year_token(const Token& t) { return t.kind == TokenKind::Number && t.text.size() == 4 && small_int(t.text, 1000, 2099); }
bool is_day_token(const Token& t) { return t.kind == TokenKind::Number && small_int(t.text, 1, 31).has_value(); }
bool is_month_token(const Token& t) { return t.kind == TokenKind::Word && month_from_name(t.text).has_value(); }
bool is_comma(const Token& t) { return t.kind == TokenKind::Punct && t.text == ","; }

// Length in tokens of a date starting at i, or 0.
std::size_t match_date(const std::vector<Token>& toks, std::size_t i) {
  auto at = [&](std::size_t k) -> const Token* { return k < toks.size() ? &toks[k] : nullptr; };
  const Token* t0 = at(i);
  const Token* t1 = at(i + 1);
  const Token* t2 = at(i + 2);
  const Token* t3 = at(i + 3);
  if (t0 && is_day_token(*t0) && t1 && is_month_token(*t1)) {
    if (t2 && is_year_token(*t2)) return 3;
    if (t2 && is_comma(*t2) && t3 && is_year_token(*t3)) return 4;
  }
  if (t0 && is_month_token(*t0)) {
    if (t1 && is_day_token(*t1) && t2 && is_comma(*t2) && t3 && is_year_token(*t3)) return 4;
    if (t1 && is_day_token(*t1) && !is_year_token(*t1) && t2 && is_year_token(*t2)) return 3;
    if (t1 && is_year_token(*t1)) return 2;
  }
  if (t0 && is_year_token(*t0)) return 1;
  return 0;
}

bool single_space_between(std::string_view text, const Token& a, const Token& b) {
  return b.span.begin == a.span.end + 1 && text[a.span.end] == ' ';
}

std::string join_tokens(std::string_view text, const std::vector<Token>& toks, std::size_t first, std::size_t last) {
  return std::string(text.substr(toks[first].span.begin, toks[last - 1].span.end - toks[first].span.begin));
}

}  // namespace

std::string_view to_string(EntityType t) {
  switch (t) {
    case EntityType::Person: return "PERSON";
    case EntityType::Location: return "LOCATION";
    case EntityType::Nationality: return "NATIONALITY";
    case EntityType::DateTime: return "DATETIME";
    case EntityType::Number: return "NUMBER";
    case EntityType::Other: return "OTHER";
  }
  return "OTHER";
}

std::optional<EntityType> entity_type_from_string(std::string_view s) {
  for (EntityType t : {EntityType::Person, EntityType::Location, EntityType::Nationality, EntityType::DateTime,
                       EntityType::Number, EntityType::Other}) {
    if (to_string(t) == s) return t;
  }
  return std::nullopt;
}

std::string_view to_string(WhType t) {
  switch (t) {
    case WhType::What: return "WHAT";
    case WhType::When: return "WHEN";
    case WhType::Where: return "WHERE";
    case WhType::Which: return "WHICH";
    case WhType::Who: return "WHO";
    case WhType::How: return "HOW";
    case WhType::Other: return "OTHER";
  }
  return "OTHER";
}

Gazetteers Gazetteers::load(const std::filesystem::path& dir) {
  Gazetteers g;
  load_list(dir / "nationalities.txt", g.nationalities, false);
  load_list(dir / "locations.txt", g.locations, false);
  load_list(dir / "stopwords.txt", g.stopwords, true);
  load_list(dir / "non_person_heads.txt", g.non_person_heads, false);
  return g;
}

std::filesystem::path default_data_dir() {
  if (const char* env = std::getenv("MHQG_DATA_DIR"); env && *env) return env;
  return MHQG_DEFAULT_DATA_DIR;
}

const Gazetteers& default_gazetteers() {
  static const Gazetteers g = Gazetteers::load(default_data_dir() / "gazetteers");
  return g;
}

const RuleTagger& default_tagger() {
  static const RuleTagger tagger(default_gazetteers());
  return tagger;
}

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  std::size_t i = 0;
  const std::size_t n = text.size();
  auto byte = [&](std::size_t k) { return static_cast<unsigned char>(text[k]); };
  while (i < n) {
    unsigned char c = byte(i);
    if (std::isspace(c)) {
      ++i;
      continue;
    }
    std::size_t start = i;
    if (is_ascii_digit(c)) {
      while (i < n && (is_ascii_digit(byte(i)) ||
                       ((byte(i) == ',' || byte(i) == '.') && i + 1 < n && is_ascii_digit(byte(i + 1))))) {
        ++i;
      }
      TokenKind kind = TokenKind::Number;
      if (i < n && (is_ascii_alpha(byte(i)) || byte(i) >= 0x80)) {
        while (i < n && is_word_byte(byte(i))) ++i;
        kind = TokenKind::Word;
      }
      out.push_back({text.substr(start, i - start), {start, i}, kind});
    } else if (is_word_byte(c)) {
      while (i < n) {
        if (is_word_byte(byte(i))) {
          ++i;
        } else if ((byte(i) == '\'' || byte(i) == '-') && i + 1 < n && is_word_byte(byte(i + 1))) {
          ++i;
        } else {
          break;
        }
      }
      out.push_back({text.substr(start, i - start), {start, i}, TokenKind::Word});
    } else {
      ++i;
      out.push_back({text.substr(start, 1), {start, i}, TokenKind::Punct});
    }
  }
  return out;
}

std::vector<Span> split_sentences(std::string_view text) {
  static const std::array<std::string_view, 5> kAbbrev = {"Mr.", "Mrs.", "Dr.", "St.", "No."};
  std::vector<Span> out;
  std::size_t start = 0;
  auto push = [&](std::size_t b, std::size_t e) {
    while (b < e && std::isspace(static_cast<unsigned char>(text[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(text[e - 1]))) --e;
    if (b < e) out.push_back({b, e});
  };
  for (std::size_t i = 0; i + 2 < text.size(); ++i) {
    char c = text[i];
    if ((c != '.' && c != '?' && c != '!') || text[i + 1] != ' ') continue;
    unsigned char next = static_cast<unsigned char>(text[i + 2]);
    if (!(std::isupper(next) || is_ascii_digit(next))) continue;
    if (c == '.') {
      bool abbrev = false;
      for (std::string_view a : kAbbrev) {
        if (i + 1 >= a.size() && text.substr(i + 1 - a.size(), a.size()) == a &&
            (i + 1 == a.size() || !is_word_byte(static_cast<unsigned char>(text[i - a.size()])))) {
          abbrev = true;
          break;
        }
      }
      if (abbrev) continue;
    }
    push(start, i + 1);
    start = i + 2;
  }
  push(start, text.size());
  return out;
}

bool is_capitalized(std::string_view word) {
  if (word.empty()) return false;
  auto c = static_cast<unsigned char>(word[0]);
  if (c < 0x80) return std::isupper(c) != 0;
  std::int32_t i = 0;
  UChar32 cp = 0;
  U8_NEXT(word.data(), i, static_cast<std::int32_t>(word.size()), cp);
  return cp >= 0 && u_isupper(cp);
}

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  bool pending_space = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

std::optional<std::size_t> ifind(std::string_view haystack, std::string_view needle, std::size_t from) {
  if (needle.empty()) return from <= haystack.size() ? std::optional<std::size_t>(from) : std::nullopt;
  if (needle.size() > haystack.size()) return std::nullopt;
  for (std::size_t i = from; i + needle.size() <= haystack.size(); ++i) {
    bool match = true;
    for (std::size_t k = 0; k < needle.size(); ++k) {
      if (std::tolower(static_cast<unsigned char>(haystack[i + k])) !=
          std::tolower(static_cast<unsigned char>(needle[k]))) {
        match = false;
        break;
      }
    }
    if (match) return i;
  }
  return std::nullopt;
}

bool icontains(std::string_view haystack, std::string_view needle) { return ifind(haystack, needle).has_value(); }

std::vector<EntityMention> RuleTagger::tag(std::string_view text, std::string_view source) const {
  const std::vector<Token> toks = tokenize(text);
  const std::vector<Span> sentences = split_sentences(text);
  std::vector<bool> sentence_initial(toks.size(), false);
  {
    std::size_t s = 0;
    for (std::size_t i = 0; i < toks.size(); ++i) {
      while (s < sentences.size() && sentences[s].end <= toks[i].span.begin) ++s;
      if (s < sentences.size() && toks[i].span.begin == sentences[s].begin) sentence_initial[i] = true;
    }
  }

  std::vector<Candidate> cands;
  auto add = [&](std::size_t first, std::size_t last, EntityType t) {
    cands.push_back({first, last, t, priority_of(t)});
  };

  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (std::size_t len = match_date(toks, i); len > 0) add(i, i + len, EntityType::DateTime);
    if (toks[i].kind == TokenKind::Number) {
      std::size_t last = i + 1;
      if (last < toks.size() && units().count(ascii_lower(toks[last].text)) &&
          (toks[last].text == "%" || toks[last].span.begin == toks[i].span.end + 1)) {
        ++last;
      }
      add(i, last, EntityType::Number);
    }
    if (toks[i].kind == TokenKind::Word && gaz_->nationalities.count(std::string(toks[i].text))) {
      add(i, i + 1, EntityType::Nationality);
    }
    // Longest multi-word location entry starting here.
    for (std::size_t len = std::min<std::size_t>(5, toks.size() - i); len >= 1; --len) {
      if (gaz_->locations.count(collapse_whitespace(join_tokens(text, toks, i, i + len)))) {
        add(i, i + len, EntityType::Location);
        break;
      }
    }
  }

  // Runs of capitalized words separated by single spaces.
  for (std::size_t i = 0; i < toks.size();) {
    if (toks[i].kind != TokenKind::Word || !is_capitalized(toks[i].text)) {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    while (j < toks.size() && toks[j].kind == TokenKind::Word && is_capitalized(toks[j].text) &&
           single_space_between(text, toks[j - 1], toks[j])) {
      ++j;
    }
    std::size_t first = i;
    if (sentence_initial[first] && sentence_initial_function_words().count(std::string(toks[first].text))) ++first;
    const std::size_t len = j - first;
    if (len > 0) {
      bool has_head = false;
      for (std::size_t k = first; k < j; ++k) {
        if (gaz_->non_person_heads.count(std::string(toks[k].text))) has_head = true;
      }
      const bool after_in = first > 0 && toks[first - 1].kind == TokenKind::Word && toks[first - 1].text == "in";
      if (after_in && len <= 3 && !has_head) {
        add(first, j, EntityType::Location);
      } else if (len >= 2) {
        add(first, j, (has_head || len > 4) ? EntityType::Other : EntityType::Person);
      }
    }
    i = j;
  }

  std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    if (a.first != b.first) return a.first < b.first;
    if (a.last - a.first != b.last - b.first) return a.last - a.first > b.last - b.first;
    return a.priority < b.priority;
  });

  std::vector<EntityMention> out;
  std::size_t covered_until = 0;  // token index
  for (const Candidate& c : cands) {
    if (c.first < covered_until) continue;
    Span span{toks[c.first].span.begin, toks[c.last - 1].span.end};
    std::string surface(text.substr(span.begin, span.size()));
    out.push_back({surface, normalize_surface(surface), c.etype, span, std::string(source)});
    covered_until = c.last;
  }
  return out;
}

std::vector<EntityMention> extract_entities(std::string_view text, const EntityTagger& tagger, std::string_view source) {
  return tagger.tag(text, source);
}

std::string normalize_surface(std::string_view s) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfkc = icu::Normalizer2::getNFKCInstance(status);
  if (U_FAILURE(status)) throw std::runtime_error("ICU NFKC normalizer unavailable");
  icu::UnicodeString u = icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<std::int32_t>(s.size())));
  u = nfkc->normalize(u, status);
  if (U_FAILURE(status)) throw std::runtime_error("ICU normalization failed");
  u.toLower(icu::Locale::getRoot());
  // Lowercasing can produce non-NFKC sequences for a few code points.
  u = nfkc->normalize(u, status);

  std::string text = collapse_whitespace(to_utf8(u));
  auto is_punct_at_front = [](const std::string& t, std::int32_t& len) {
    std::int32_t i = 0;
    UChar32 cp = 0;
    U8_NEXT(t.data(), i, static_cast<std::int32_t>(t.size()), cp);
    len = i;
    return cp >= 0 && (u_ispunct(cp) || u_hasBinaryProperty(cp, UCHAR_PATTERN_SYNTAX));
  };
  auto is_punct_at_back = [](const std::string& t, std::int32_t& len) {
    std::int32_t i = static_cast<std::int32_t>(t.size());
    UChar32 cp = 0;
    U8_PREV(t.data(), 0, i, cp);
    len = static_cast<std::int32_t>(t.size()) - i;
    return cp >= 0 && (u_ispunct(cp) || u_hasBinaryProperty(cp, UCHAR_PATTERN_SYNTAX));
  };

  bool changed = true;
  while (changed && !text.empty()) {
    changed = false;
    std::int32_t len = 0;
    while (!text.empty() && is_punct_at_front(text, len)) {
      text.erase(0, static_cast<std::size_t>(len));
      changed = true;
    }
    while (!text.empty() && is_punct_at_back(text, len)) {
      text.erase(text.size() - static_cast<std::size_t>(len));
      changed = true;
    }
    std::string trimmed = trim(text);
    if (trimmed != text) {
      text = trimmed;
      changed = true;
    }
    for (std::string_view article : {"the ", "a ", "an "}) {
      if (text.size() > article.size() && text.compare(0, article.size(), article) == 0) {
        text.erase(0, article.size());
        changed = true;
        break;
      }
    }
    if (text == "the" || text == "a" || text == "an") {
      text.clear();
      changed = true;
    }
  }
  return collapse_whitespace(text);
}

namespace {

const std::map<std::string, std::string, std::less<>>& irregular_past_to_lemma() {
  static const std::map<std::string, std::string, std::less<>> m = {
      {"was", "be"},        {"were", "be"},       {"had", "have"},     {"did", "do"},       {"went", "go"},
      {"won", "win"},       {"made", "make"},     {"took", "take"},    {"gave", "give"},    {"wrote", "write"},
      {"built", "build"},   {"became", "become"}, {"began", "begin"},  {"brought", "bring"}, {"bought", "buy"},
      {"came", "come"},     {"found", "find"},    {"got", "get"},      {"knew", "know"},    {"led", "lead"},
      {"left", "leave"},    {"lost", "lose"},     {"met", "meet"},     {"ran", "run"},      {"said", "say"},
      {"saw", "see"},       {"sold", "sell"},     {"sent", "send"},    {"sang", "sing"},    {"sat", "sit"},
      {"spoke", "speak"},   {"spent", "spend"},   {"stood", "stand"},  {"taught", "teach"}, {"told", "tell"},
      {"thought", "think"}, {"held", "hold"},     {"grew", "grow"},    {"drew", "draw"},    {"drove", "drive"},
      {"flew", "fly"},      {"rode", "ride"},     {"rose", "rise"},    {"felt", "feel"},    {"kept", "keep"},
      {"fought", "fight"},  {"chose", "choose"},  {"ate", "eat"},      {"fell", "fall"},    {"forgot", "forget"},
      {"heard", "hear"},    {"paid", "pay"},      {"shot", "shoot"},   {"stole", "steal"},  {"swam", "swim"},
      {"threw", "throw"},   {"wore", "wear"},     {"struck", "strike"}, {"sought", "seek"}, {"born", "bear"}};
  return m;
}

const std::map<std::string, std::string, std::less<>>& irregular_lemma_to_past() {
  static const std::map<std::string, std::string, std::less<>> m = [] {
    std::map<std::string, std::string, std::less<>> r;
    for (const auto& [past, lemma] : irregular_past_to_lemma()) {
      if (past == "born") continue;
      if (lemma == "be") continue;
      r.emplace(lemma, past);
    }
    r["be"] = "was";
    return r;
  }();
  return m;
}

const std::unordered_set<std::string>& auxiliaries() {
  static const std::unordered_set<std::string> a = {"is",  "was",  "are", "were", "did",  "does",  "do",
                                                    "has", "have", "had", "can",  "will", "could", "would"};
  return a;
}

bool is_copula(std::string_view w) { return w == "is" || w == "was" || w == "are" || w == "were"; }
bool is_do_aux(std::string_view w) { return w == "did" || w == "does" || w == "do"; }

bool is_determiner(std::string_view w) {
  return w == "the" || w == "a" || w == "an" || w == "his" || w == "her" || w == "its" || w == "their" ||
         w == "this" || w == "that" || w == "these" || w == "those";
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

bool is_vowel(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }

std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string join(const std::vector<std::string>& parts, std::size_t from, std::size_t to) {
  std::string out;
  for (std::size_t k = from; k < to; ++k) {
    if (!out.empty()) out.push_back(' ');
    out += parts[k];
  }
  return out;
}

}  // namespace

bool is_past_form(std::string_view w) {
  if (irregular_past_to_lemma().count(w)) return true;
  return w.size() > 3 && ends_with(w, "ed");
}

bool is_verb_like(std::string_view w) {
  if (w.empty()) return false;
  if (auxiliaries().count(std::string(w))) return true;
  if (is_past_form(w)) return true;
  if (w.size() > 3 && ends_with(w, "s") && !ends_with(w, "ss") && !ends_with(w, "us") && !ends_with(w, "is")) return true;
  return false;
}

std::string verb_lemma(std::string_view verb) {
  std::string w = ascii_lower(verb);
  if (auto it = irregular_past_to_lemma().find(w); it != irregular_past_to_lemma().end()) return it->second;
  if (w == "is" || w == "are") return "be";
  if (w == "has") return "have";
  if (w == "does") return "do";
  if (w.size() > 4 && ends_with(w, "ied")) return w.substr(0, w.size() - 3) + "y";
  if (w.size() > 3 && ends_with(w, "ed")) {
    std::string stem = w.substr(0, w.size() - 2);
    const std::size_t n = stem.size();
    if (n >= 2 && stem[n - 1] == stem[n - 2] && !is_vowel(stem[n - 1]) && stem[n - 1] != 'l' && stem[n - 1] != 's') {
      return stem.substr(0, n - 1);
    }
    static const std::array<std::string_view, 16> kNeedsE = {"at", "et", "it", "ut", "iv", "ov", "ur", "as",
                                                             "us", "ag", "dg", "nc", "rg", "ib", "iz", "ys"};
    for (std::string_view e : kNeedsE) {
      if (ends_with(stem, e) && !ends_with(stem, "sit") && !ends_with(stem, "ect")) return stem + "e";
    }
    return stem;
  }
  if (w.size() > 4 && ends_with(w, "ies")) return w.substr(0, w.size() - 3) + "y";
  if (w.size() > 3 && (ends_with(w, "ches") || ends_with(w, "shes") || ends_with(w, "sses") || ends_with(w, "xes") ||
                       ends_with(w, "zes"))) {
    return w.substr(0, w.size() - 2);
  }
  if (w.size() > 2 && ends_with(w, "s") && !ends_with(w, "ss")) return w.substr(0, w.size() - 1);
  return w;
}

std::string verb_past(std::string_view lemma) {
  std::string w = ascii_lower(lemma);
  if (auto it = irregular_lemma_to_past().find(w); it != irregular_lemma_to_past().end()) return it->second;
  if (ends_with(w, "e")) return w + "d";
  if (w.size() > 1 && w.back() == 'y' && !is_vowel(w[w.size() - 2])) return w.substr(0, w.size() - 1) + "ied";
  return w + "ed";
}

std::string verb_third_person(std::string_view lemma) {
  std::string w = ascii_lower(lemma);
  if (w == "be") return "is";
  if (w == "have") return "has";
  if (w == "do") return "does";
  if (w == "go") return "goes";
  if (ends_with(w, "s") || ends_with(w, "x") || ends_with(w, "z") || ends_with(w, "ch") || ends_with(w, "sh")) {
    return w + "es";
  }
  if (w.size() > 1 && w.back() == 'y' && !is_vowel(w[w.size() - 2])) return w.substr(0, w.size() - 1) + "ies";
  return w + "s";
}

std::string question_to_predicate(std::string_view question, std::string_view answer_entity) {
  std::string q = trim(question);
  if (q.empty() || q.back() != '?') throw PreconditionError("question must end with '?'");
  q.pop_back();
  std::vector<std::string> toks = split_ws(q);
  while (!toks.empty() && (toks.back() == "," || toks.back() == ".")) toks.pop_back();
  if (toks.empty()) throw UnsupportedQuestionForm("empty question");

  const std::string wh = ascii_lower(toks[0]);
  static const std::unordered_set<std::string> kWh = {"what", "which", "who", "whom", "when", "where"};
  if (!kWh.count(wh)) throw UnsupportedQuestionForm("not a wh-question: " + std::string(question));

  std::size_t i = 1;
  std::size_t np = 0;
  if (wh == "what" || wh == "which") {
    while (i < toks.size() && np < 3 && !is_verb_like(ascii_lower(toks[i]))) {
      ++i;
      ++np;
    }
  }
  if (i >= toks.size()) throw UnsupportedQuestionForm("no verb after wh-phrase");
  const std::string v = ascii_lower(toks[i]);

  std::string predicate;
  if (is_do_aux(v)) {
    // Object-wh with do-support: "<wh> did <subject> <verb> <rest>" -> "<subject> <verb-ed> <rest>".
    std::size_t k = i + 1;
    if (k >= toks.size()) throw UnsupportedQuestionForm("missing subject");
    std::size_t subject_begin = k;
    if (is_determiner(ascii_lower(toks[k]))) {
      ++k;
      if (k < toks.size() && !is_capitalized(toks[k])) {
        ++k;
      } else {
        while (k < toks.size() && is_capitalized(toks[k])) ++k;
      }
    } else if (is_capitalized(toks[k])) {
      while (k < toks.size() && is_capitalized(toks[k])) ++k;
    } else {
      ++k;
    }
    if (k >= toks.size() || k == subject_begin) throw UnsupportedQuestionForm("missing main verb");
    const std::string lemma = ascii_lower(toks[k]);
    std::string inflected = v == "did" ? verb_past(lemma) : v == "does" ? verb_third_person(lemma) : lemma;
    predicate = join(toks, subject_begin, k) + " " + inflected;
    if (k + 1 < toks.size()) predicate += " " + join(toks, k + 1, toks.size());
  } else if (is_copula(v)) {
    if (wh == "when" || wh == "where") throw UnsupportedQuestionForm("adverbial copular question");
    predicate = join(toks, i, toks.size());
  } else {
    if (wh == "when" || wh == "where" || wh == "whom") throw UnsupportedQuestionForm("adverbial question without auxiliary");
    predicate = join(toks, i, toks.size());
  }

  predicate = trim(predicate);
  if (predicate.empty()) throw UnsupportedQuestionForm("empty predicate");
  const std::string answer = trim(answer_entity);
  if (!answer.empty() && icontains(predicate, answer)) {
    throw UnsupportedQuestionForm("predicate repeats its own answer");
  }
  return predicate;
}

WhType classify_wh(std::string_view question) {
  std::vector<std::string> toks = split_ws(question);
  for (std::size_t k = 0; k < toks.size() && k < 3; ++k) {
    std::string w;
    for (char c : toks[k]) {
      if (std::isalpha(static_cast<unsigned char>(c))) w.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    if (w == "what") return WhType::What;
    if (w == "when") return WhType::When;
    if (w == "where") return WhType::Where;
    if (w == "which") return WhType::Which;
    if (w == "who") return WhType::Who;
    if (w == "how") return WhType::How;
  }
  return WhType::Other;
}

std::optional<int> month_from_name(std::string_view name) {
  const std::string w = ascii_lower(name);
  for (std::size_t k = 0; k < kMonths.size(); ++k) {
    if (kMonths[k] == w) return static_cast<int>(k) + 1;
  }
  return std::nullopt;
}

namespace {

bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

int days_in_month(int y, int m) {
  static constexpr std::array<int, 12> kDays = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  return m == 2 && is_leap(y) ? 29 : kDays[static_cast<std::size_t>(m - 1)];
}

}  // namespace

std::optional<CalendarDate> parse_date(std::string_view s) {
  std::string text = collapse_whitespace(s);
  while (!text.empty() && text.back() == '.') text.pop_back();
  static const std::regex kDayMonthYear(R"(^(\d{1,2}) ([A-Za-z]+),? (\d{4})$)");
  static const std::regex kMonthDayYear(R"(^([A-Za-z]+) (\d{1,2}),? (\d{4})$)");
  static const std::regex kMonthYear(R"(^([A-Za-z]+),? (\d{4})$)");
  static const std::regex kYear(R"(^(\d{4})$)");

  std::smatch m;
  CalendarDate d;
  if (std::regex_match(text, m, kDayMonthYear)) {
    d.day = std::stoi(m[1]);
    d.month = month_from_name(m[2].str());
    d.year = std::stoi(m[3]);
    if (!d.month) return std::nullopt;
  } else if (std::regex_match(text, m, kMonthDayYear)) {
    d.month = month_from_name(m[1].str());
    d.day = std::stoi(m[2]);
    d.year = std::stoi(m[3]);
    if (!d.month) return std::nullopt;
  } else if (std::regex_match(text, m, kMonthYear)) {
    d.month = month_from_name(m[1].str());
    d.year = std::stoi(m[2]);
    if (!d.month) return std::nullopt;
  } else if (std::regex_match(text, m, kYear)) {
    d.year = std::stoi(m[1]);
  } else {
    return std::nullopt;
  }
  if (d.year < 1) return std::nullopt;
  if (d.day && (*d.day < 1 || *d.day > days_in_month(d.year, *d.month))) return std::nullopt;
  return d;
}

}  // namespace mhqg
