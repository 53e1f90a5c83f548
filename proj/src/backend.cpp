#include "mhqg/backend.hpp"

#include "mhqg/corpus.hpp"
#include "mhqg/error.hpp"
#include "mhqg/hash.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <unordered_set>

namespace mhqg {

namespace {

std::vector<std::string> words_of(std::string_view s) {
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

std::string join_words(const std::vector<std::string>& w, std::size_t from, std::size_t to) {
  std::string out;
  for (std::size_t k = from; k < to && k < w.size(); ++k) {
    if (!out.empty()) out.push_back(' ');
    out += w[k];
  }
  return out;
}

std::string strip_word(std::string_view w) {
  std::string out;
  for (char c : w) {
    if (std::isalnum(static_cast<unsigned char>(c)) || static_cast<unsigned char>(c) >= 0x80) {
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  return out;
}

std::string strip_trailing_punct(std::string s) {
  while (!s.empty() && (s.back() == '.' || s.back() == '!' || s.back() == '?' || s.back() == ',' || s.back() == ';' ||
                        std::isspace(static_cast<unsigned char>(s.back())))) {
    s.pop_back();
  }
  return s;
}

std::size_t count_mask(std::string_view text) {
  std::size_t n = 0;
  for (std::size_t pos = text.find("[MASK]"); pos != std::string_view::npos; pos = text.find("[MASK]", pos + 6)) ++n;
  return n;
}

// Sentence span of `text` that contains byte offset `at`.
Span sentence_around(std::string_view text, std::size_t at) {
  for (const Span& s : split_sentences(text)) {
    if (s.begin <= at && at < s.end) return s;
  }
  return {0, text.size()};
}

std::string_view wh_for(EntityType t) {
  switch (t) {
    case EntityType::DateTime: return "When";
    case EntityType::Location: return "Where";
    case EntityType::Person: return "Who";
    default: return "What";
  }
}

std::string answer_noun(EntityType t, std::string_view answer) {
  switch (t) {
    case EntityType::Person: return "person";
    case EntityType::Location: return "place";
    case EntityType::DateTime: return "year";
    case EntityType::Nationality: return "nationality";
    case EntityType::Number: return "number";
    case EntityType::Other: break;
  }
  auto w = words_of(answer);
  std::string last = w.empty() ? std::string() : strip_word(w.back());
  if (last.empty() || std::all_of(last.begin(), last.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
    return "thing";
  }
  return last;
}

bool is_preposition(std::string_view w) {
  static const std::unordered_set<std::string_view> kPreps = {"in",   "on",  "at",   "by",   "from", "since", "during",
                                                              "for",  "with", "of",  "into", "near", "to"};
  return kPreps.count(w) > 0;
}

bool is_article(std::string_view w) { return w == "a" || w == "an" || w == "the"; }

bool lowercases_at_front(std::string_view w) {
  static const std::unordered_set<std::string_view> kWords = {"The", "A",   "An",  "It",  "He",    "She",
                                                              "They", "His", "Her", "Its", "Their", "This"};
  return kWords.count(w) > 0;
}

bool inverts(std::string_view w) {
  static const std::unordered_set<std::string_view> kAux = {"is",  "was", "are",   "were",  "has",  "have",
                                                            "had", "can", "could", "will", "would"};
  return kAux.count(w) > 0;
}

// Type of the mention covering exactly [begin, end) of `text`, falling back to
// tagging the bare surface.
EntityType type_of(const EntityTagger& tagger, std::string_view text, Span where) {
  for (const auto& m : tagger.tag(text, {})) {
    if (m.span == where) return m.etype;
  }
  const auto alone = tagger.tag(text.substr(where.begin, where.size()), {});
  if (alone.size() == 1 && alone[0].span.size() == where.size()) return alone[0].etype;
  return EntityType::Other;
}

std::optional<Span> locate(std::string_view text, std::string_view needle) {
  if (needle.empty()) return std::nullopt;
  std::size_t pos = text.find(needle);
  if (pos == std::string_view::npos) {
    auto ipos = ifind(text, needle);
    if (!ipos) return std::nullopt;
    pos = *ipos;
  }
  return Span{pos, pos + needle.size()};
}

// Deletes `cut` (relative to `sentence`) together with a directly preceding
// preposition, then tidies spacing and empty brackets.
std::string remove_answer(std::string_view sentence, Span cut, bool drop_preposition, bool drop_article) {
  std::string before(sentence.substr(0, cut.begin));
  std::string after(sentence.substr(cut.end));
  auto drop_last_word_if = [&](auto pred) {
    std::string t = before;
    while (!t.empty() && t.back() == ' ') t.pop_back();
    std::size_t sp = t.find_last_of(' ');
    std::string last = sp == std::string::npos ? t : t.substr(sp + 1);
    if (pred(ascii_lower(last))) {
      before = sp == std::string::npos ? std::string() : t.substr(0, sp + 1);
      return true;
    }
    return false;
  };
  if (drop_article) drop_last_word_if(is_article);
  if (drop_preposition) drop_last_word_if(is_preposition);
  std::string out = before + after;
  for (std::string_view junk : {"( )", "()", "(, )"}) {
    for (std::size_t p = out.find(junk); p != std::string::npos; p = out.find(junk)) out.erase(p, junk.size());
  }
  out = collapse_whitespace(out);
  for (std::string_view fix : {" ,", " .", " ;"}) {
    for (std::size_t p = out.find(fix); p != std::string::npos; p = out.find(fix)) out.erase(p, 1);
  }
  if (!out.empty() && out.front() == ',') out = trim(out.substr(1));
  return out;
}

// Turns a declarative remainder into a wh-question anchored on the removed
// answer. Returns nullopt when no finite verb is found.
std::optional<std::string> invert(std::string_view wh, const std::string& remainder) {
  std::vector<std::string> w = words_of(remainder);
  for (std::size_t k = 1; k < w.size(); ++k) {
    const std::string& tok = w[k];
    if (tok.empty() || !std::islower(static_cast<unsigned char>(tok[0]))) continue;
    const std::string lower = strip_word(tok);
    if (!is_verb_like(lower)) continue;
    std::vector<std::string> subject(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(k));
    if (lowercases_at_front(subject[0])) subject[0] = ascii_lower(subject[0]);
    const std::string subj = join_words(subject, 0, subject.size());
    const std::string rest = join_words(w, k + 1, w.size());
    std::string q(wh);
    if (inverts(lower)) {
      q += " " + lower + " " + subj;
    } else {
      std::string_view aux = is_past_form(lower) ? "did" : (lower.back() == 's' ? "does" : "do");
      q += " " + std::string(aux) + " " + subj + " " + verb_lemma(lower);
    }
    if (!rest.empty()) q += " " + rest;
    return strip_trailing_punct(q) + "?";
  }
  return std::nullopt;
}

std::size_t fact_index(const FlattenedRow& row, std::string_view value) {
  const std::string key = normalize_surface(value);
  for (std::size_t i = 0; i < row.facts.size(); ++i) {
    if (normalize_surface(row.facts[i].value) == key) return i;
  }
  for (std::size_t i = 0; i < row.facts.size(); ++i) {
    if (icontains(row.facts[i].value, value)) return i;
  }
  return row.facts.size();
}

std::optional<std::size_t> nearest_other_fact(const FlattenedRow& row, std::size_t i) {
  for (std::size_t d = 1; d < row.facts.size(); ++d) {
    if (i >= d && !row.facts[i - d].value.empty()) return i - d;
    if (i + d < row.facts.size() && !row.facts[i + d].value.empty()) return i + d;
  }
  return std::nullopt;
}

std::string row_scope(const FlattenedRow& row) { return row.title; }

}  // namespace

std::string_view mask_noun(EntityType t) {
  switch (t) {
    case EntityType::Person: return "person";
    case EntityType::Location: return "place";
    case EntityType::DateTime: return "year";
    default: return "one";
  }
}

std::size_t word_count(std::string_view text) { return words_of(text).size(); }

std::size_t repeated_bigram_count(std::string_view text) {
  std::vector<std::string> w;
  for (const auto& raw : words_of(text)) {
    std::string s = strip_word(raw);
    if (!s.empty()) w.push_back(std::move(s));
  }
  if (w.size() < 2) return 0;
  std::set<std::pair<std::string, std::string>> seen;
  for (std::size_t i = 0; i + 1 < w.size(); ++i) seen.emplace(w[i], w[i + 1]);
  return (w.size() - 1) - seen.size();
}

// ---- contract checks ----

std::string Backend::gen_question_with_answer(std::string_view context, std::string_view answer) const {
  if (trim(answer).empty()) throw PreconditionError("gen_question_with_answer: empty answer");
  std::string q = do_gen_question_with_answer(context, answer);
  if (trim(q).empty()) throw ProtocolError("qg_ans: empty question");
  return q;
}

GeneratedQuestion Backend::gen_question_with_entity(std::string_view context, std::string_view entity) const {
  if (trim(entity).empty() || !icontains(context, entity)) {
    throw PreconditionError("gen_question_with_entity: entity '" + std::string(entity) + "' not in context");
  }
  GeneratedQuestion g = do_gen_question_with_entity(context, entity);
  if (trim(g.question).empty()) throw ProtocolError("qg_ent: empty question");
  if (trim(g.answer).empty() || context.find(g.answer) == std::string_view::npos) {
    throw ProtocolError("qg_ent: answer '" + g.answer + "' is not a span of the context");
  }
  return g;
}

std::string Backend::describe_entity(std::string_view flattened_row, std::string_view entity) const {
  if (trim(entity).empty() || !icontains(flattened_row, entity)) {
    throw PreconditionError("describe_entity: entity '" + std::string(entity) + "' not in row");
  }
  std::string s = trim(do_describe_entity(flattened_row, entity));
  if (s.empty()) throw ProtocolError("describe: empty sentence");
  if (split_sentences(s).size() != 1) throw ProtocolError("describe: reply is not a single sentence");
  return s;
}

std::string Backend::fill_mask(std::string_view text_with_mask, EntityType hint) const {
  if (count_mask(text_with_mask) != 1) throw PreconditionError("fill_mask: text must contain exactly one [MASK]");
  std::string fill = trim(do_fill_mask(text_with_mask, hint));
  const std::size_t n = word_count(fill);
  if (n < 1 || n > 2) throw ProtocolError("fill_mask: fill must be 1-2 words, got '" + fill + "'");
  if (fill.find("[MASK]") != std::string::npos) throw ProtocolError("fill_mask: fill contains [MASK]");
  return fill;
}

double Backend::perplexity(std::string_view text) const {
  if (trim(text).empty()) throw PreconditionError("perplexity: empty text");
  const double s = do_perplexity(text);
  if (!std::isfinite(s) || s <= 0.0) throw ProtocolError("perplexity: score must be finite and positive");
  return s;
}

std::string Backend::qdmr_to_question(const std::vector<std::string>& steps) const {
  if (steps.empty()) throw PreconditionError("qdmr_to_question: empty program");
  std::string q = trim(do_qdmr_to_question(steps));
  if (q.empty()) throw ProtocolError("qdmr2q: empty question");
  return q;
}

std::string Backend::do_qdmr_to_question(const std::vector<std::string>&) const {
  throw BackendUnavailable("backend has no QDMR translator");
}

void BackendDescriptor::validate() const {
  if (timeout_ms <= 0) throw ConfigError("backend timeout_ms must be > 0");
  if (retries < 0) throw ConfigError("backend retries must be >= 0");
  if (kind == BackendKind::Remote && (!endpoint || trim(*endpoint).empty())) {
    throw ConfigError("remote backend requires an endpoint URL");
  }
}

std::unique_ptr<Backend> make_backend(const BackendDescriptor& descriptor, const EntityTagger& tagger) {
  descriptor.validate();
  if (descriptor.kind == BackendKind::Stub) return std::make_unique<StubBackend>(descriptor.seed, tagger);
  return std::make_unique<HttpBackend>(descriptor);
}

// ---- stub ----

std::string StubBackend::do_gen_question_with_answer(std::string_view context, std::string_view answer) const {
  if (auto row = parse_flattened_row(context)) {
    const std::size_t i = fact_index(*row, answer);
    if (i < row->facts.size()) {
      const auto j = nearest_other_fact(*row, i);
      if (!j) return "What is the " + row->facts[i].header + " in " + row_scope(*row) + "?";
      return "What is the " + row->facts[i].header + " whose " + row->facts[*j].header + " is " + row->facts[*j].value +
             " in " + row_scope(*row) + "?";
    }
  }
  const auto where = locate(context, answer);
  if (!where) throw PreconditionError("stub qg_ans: answer not found in context");
  const EntityType t = type_of(*tagger_, context, *where);
  const std::string noun = answer_noun(t, context.substr(where->begin, where->size()));
  const Span sent = sentence_around(context, where->begin);
  const std::string_view sentence = context.substr(sent.begin, sent.size());
  const Span rel{where->begin - sent.begin, where->end - sent.begin};

  if (rel.begin == 0) {
    std::string rest = strip_trailing_punct(trim(sentence.substr(rel.end)));
    return "What " + noun + (rest.empty() ? std::string() : " " + rest) + "?";
  }
  // In-situ form: "<before> what <noun> <after>?", dropping an article right before the answer.
  const std::string before = remove_answer(sentence, {rel.begin, sentence.size()}, false, true);
  std::string q = before + " what " + noun + std::string(sentence.substr(rel.end));
  q = collapse_whitespace(q);
  for (std::string_view fix : {" ,", " ."}) {
    for (std::size_t p = q.find(fix); p != std::string::npos; p = q.find(fix)) q.erase(p, 1);
  }
  return strip_trailing_punct(q) + "?";
}

GeneratedQuestion StubBackend::do_gen_question_with_entity(std::string_view context, std::string_view entity) const {
  if (auto row = parse_flattened_row(context)) {
    const std::size_t i = fact_index(*row, entity);
    if (i < row->facts.size()) {
      const auto j = nearest_other_fact(*row, i);
      if (!j) throw RejectedGeneration("stub qg_ent: row has no other fact");
      return {"What is the " + row->facts[*j].header + " of " + std::string(entity) + " in " + row_scope(*row) + "?",
              row->facts[*j].value};
    }
  }
  const auto where = locate(context, entity);
  if (!where) throw PreconditionError("stub qg_ent: entity not found in context");
  const Span sent = sentence_around(context, where->begin);
  const std::string ent_norm = normalize_surface(entity);

  const EntityMention* best = nullptr;
  std::size_t best_gap = 0;
  const auto mentions = tagger_->tag(context, {});
  for (const auto& m : mentions) {
    if (m.span.begin < sent.begin || m.span.end > sent.end) continue;
    if (m.span.overlaps(*where) || m.normalized == ent_norm || m.normalized.empty()) continue;
    const std::size_t gap = m.span.end <= where->begin ? where->begin - m.span.end : m.span.begin - where->end;
    if (!best || gap < best_gap) {
      best = &m;
      best_gap = gap;
    }
  }
  if (!best) throw RejectedGeneration("stub qg_ent: no co-sentential answer candidate");

  const std::string_view sentence = context.substr(sent.begin, sent.size());
  const Span rel{best->span.begin - sent.begin, best->span.end - sent.begin};
  const std::string_view wh = wh_for(best->etype);
  const std::string remainder = remove_answer(sentence, rel, true, true);
  std::string question;
  if (rel.begin == 0) {
    question = std::string(wh) + " " + strip_trailing_punct(remainder) + "?";
  } else {
    auto q = invert(wh, remainder);
    if (!q) throw RejectedGeneration("stub qg_ent: no finite verb to invert");
    question = *q;
  }
  return {question, best->surface};
}

std::string StubBackend::do_describe_entity(std::string_view flattened_row, std::string_view entity) const {
  auto row = parse_flattened_row(flattened_row);
  if (!row) return std::string(entity) + " is mentioned in " + strip_trailing_punct(std::string(flattened_row)) + ".";
  const std::size_t i = fact_index(*row, entity);
  std::string facts;
  for (std::size_t k = 0; k < row->facts.size(); ++k) {
    if (k == i || row->facts[k].value.empty()) continue;
    if (!facts.empty()) facts += " and ";
    facts += row->facts[k].header + " is " + row->facts[k].value;
  }
  if (facts.empty()) return std::string(entity) + " is listed in " + row->title + ".";
  return std::string(entity) + " " + facts + " in " + row->title + ".";
}

std::string StubBackend::do_fill_mask(std::string_view, EntityType hint) const { return std::string(mask_noun(hint)); }

double StubBackend::do_perplexity(std::string_view text) const {
  const std::uint64_t h = fnv1a64(text, fnv1a64(std::to_string(seed_)));
  // The hash term stays below 0.01 so one repeated bigram (0.05) always dominates.
  return 1.0 + static_cast<double>(h % 1000000ULL) / 1e8 + 0.05 * static_cast<double>(repeated_bigram_count(text));
}

}  // namespace mhqg
