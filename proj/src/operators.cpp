#include "mhqg/operators.hpp"

#include "mhqg/error.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <unordered_map>

namespace mhqg {

namespace {

bool is_short_number(std::string_view s) {
  if (s.empty() || s.size() >= 4) return false;
  return std::all_of(s.begin(), s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

std::string strip_trailing_punct(std::string s) {
  while (!s.empty() && (s.back() == '.' || s.back() == '!' || s.back() == '?' || s.back() == ',' || s.back() == ';' ||
                        std::isspace(static_cast<unsigned char>(s.back())))) {
    s.pop_back();
  }
  return s;
}

// Case-insensitive occurrence of `phrase` that is not part of a longer word.
bool contains_phrase(std::string_view text, std::string_view phrase) {
  auto word_char = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || static_cast<unsigned char>(c) >= 0x80; };
  for (auto p = ifind(text, phrase); p; p = ifind(text, phrase, *p + 1)) {
    const bool left = *p == 0 || !word_char(text[*p - 1]) || !word_char(phrase.front());
    const std::size_t end = *p + phrase.size();
    const bool right = end == text.size() || !word_char(text[end]) || !word_char(phrase.back());
    if (left && right) return true;
  }
  return false;
}

void require_question_shape(const std::string& q, const char* op) {
  const std::string t = trim(q);
  if (t.empty() || t.back() != '?') throw RejectedGeneration(std::string(op) + ": generated text is not a question");
}

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
  for (std::size_t p = s.find(from); p != std::string::npos; p = s.find(from, p + to.size())) {
    s.replace(p, from.size(), to);
  }
  return s;
}

bool near_trigger(const std::vector<Token>& toks, const Span& mention, const Span& sentence,
                  std::initializer_list<std::string_view> triggers, std::size_t window) {
  std::size_t first = toks.size();
  std::size_t last = 0;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (mention.contains(toks[i].span)) {
      first = std::min(first, i);
      last = std::max(last, i);
    }
  }
  if (first == toks.size()) return false;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (!sentence.contains(toks[i].span) || mention.contains(toks[i].span)) continue;
    const std::string w = ascii_lower(toks[i].text);
    if (std::find(triggers.begin(), triggers.end(), w) == triggers.end()) continue;
    const std::size_t dist = i < first ? first - i : i - last;
    if (dist <= window) return true;
  }
  return false;
}

}  // namespace

const EntityMention* BridgeEntity::mention_in(std::string_view passage_id) const {
  if (mention.source == passage_id) return &mention;
  if (const auto* m = std::get_if<EntityMention>(&locus_a); m && m->source == passage_id) return m;
  return nullptr;
}

std::vector<std::string> BridgeEntity::surfaces() const {
  std::vector<std::string> out{mention.surface};
  std::string other = cell() ? cell()->raw : std::get<EntityMention>(locus_a).surface;
  if (other != mention.surface) out.push_back(std::move(other));
  return out;
}

std::string_view to_string(ComparativeProperty p) {
  switch (p) {
    case ComparativeProperty::Birthdate: return "BIRTHDATE";
    case ComparativeProperty::Location: return "LOCATION";
    case ComparativeProperty::Nationality: return "NATIONALITY";
    case ComparativeProperty::LivePlace: return "LIVE_PLACE";
  }
  return "LOCATION";
}

std::optional<ComparativeProperty> comparative_property_from_string(std::string_view s) {
  for (auto p : {ComparativeProperty::Birthdate, ComparativeProperty::Location, ComparativeProperty::Nationality,
                 ComparativeProperty::LivePlace}) {
    if (to_string(p) == s) return p;
  }
  return std::nullopt;
}

std::string_view to_string(AnswerRule r) {
  switch (r) {
    case AnswerRule::Earlier: return "earlier";
    case AnswerRule::Same: return "same";
    case AnswerRule::First: return "e1";
    case AnswerRule::Second: return "e2";
    case AnswerRule::BothInFirst: return "both_in_a1";
  }
  return "same";
}

// ---- selection ----

bool is_bridge_eligible(const EntityMention& m, const Gazetteers& gazetteers) {
  if (m.normalized.empty()) return false;
  if (is_short_number(m.normalized)) return false;
  return gazetteers.stopwords.count(m.normalized) == 0;
}

std::vector<BridgeEntity> find_bridge(const LinkedTableContext& table, const Passage& passage,
                                      const EntityTagger& tagger, const Gazetteers& gazetteers) {
  if (passage.text.empty() || table.table.rows.empty()) return {};
  std::unordered_map<std::string, EntityMention> first_mention;
  for (auto& m : tagger.tag(passage.text, passage.id)) {
    if (!is_bridge_eligible(m, gazetteers)) continue;
    first_mention.emplace(m.normalized, std::move(m));
  }
  std::vector<BridgeEntity> out;
  const auto& rows = table.table.rows;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      const std::string key = normalize_surface(rows[r][c].raw);
      if (key.empty()) continue;
      auto it = first_mention.find(key);
      if (it == first_mention.end()) continue;
      out.push_back({it->second, CellLocus{r, c, rows[r][c].raw}});
    }
  }
  return out;
}

std::vector<BridgeEntity> find_bridge(const Passage& first, const Passage& second, const EntityTagger& tagger,
                                      const Gazetteers& gazetteers) {
  if (first.text.empty() || second.text.empty()) return {};
  std::unordered_map<std::string, EntityMention> in_second;
  for (auto& m : tagger.tag(second.text, second.id)) {
    if (!is_bridge_eligible(m, gazetteers)) continue;
    in_second.emplace(m.normalized, std::move(m));
  }
  std::vector<BridgeEntity> out;
  std::set<std::string> seen;
  for (auto& m : tagger.tag(first.text, first.id)) {
    if (!is_bridge_eligible(m, gazetteers) || !seen.insert(m.normalized).second) continue;
    auto it = in_second.find(m.normalized);
    if (it == in_second.end()) continue;
    out.push_back({it->second, std::move(m)});
  }
  return out;
}

std::vector<ComparativeEntity> find_com_ent(const Passage& d, const EntityTagger& tagger) {
  constexpr std::size_t kTriggerWindow = 8;
  const std::vector<Token> toks = tokenize(d.text);
  std::vector<ComparativeEntity> out;
  for (auto& m : tagger.tag(d.text, d.id)) {
    Span sentence{0, d.text.size()};
    for (const Span& s : d.sentences) {
      if (s.contains(m.span)) sentence = s;
    }
    std::optional<ComparativeProperty> prop;
    switch (m.etype) {
      case EntityType::DateTime:
        if (near_trigger(toks, m.span, sentence, {"born", "birth"}, kTriggerWindow)) prop = ComparativeProperty::Birthdate;
        break;
      case EntityType::Location:
        prop = near_trigger(toks, m.span, sentence, {"lives", "lived", "hometown"}, kTriggerWindow)
                   ? ComparativeProperty::LivePlace
                   : ComparativeProperty::Location;
        break;
      case EntityType::Nationality: prop = ComparativeProperty::Nationality; break;
      default: break;
    }
    if (prop) out.push_back({std::move(m), *prop, d.title});
  }
  return out;
}

std::vector<PropertyMatch> match_properties(const std::vector<ComparativeEntity>& a,
                                            const std::vector<ComparativeEntity>& b) {
  std::vector<PropertyMatch> out;
  for (const auto& x : a) {
    for (const auto& y : b) {
      if (x.property == y.property) out.push_back({x, y});
    }
  }
  return out;
}

// ---- generation ----

SingleHopQ qg_with_ans(const Passage& d, const EntityMention& answer, const Backend& backend) {
  if (answer.span.end > d.text.size() || d.text.compare(answer.span.begin, answer.span.size(), answer.surface) != 0) {
    throw PreconditionError("qg_with_ans: answer span does not lie in passage '" + d.id + "'");
  }
  std::string q;
  try {
    q = trim(backend.gen_question_with_answer(d.text, answer.surface));
  } catch (const ProtocolError& e) {
    throw RejectedGeneration(std::string("qg_with_ans: ") + e.what());
  }
  require_question_shape(q, "qg_with_ans");
  if (contains_phrase(q, answer.surface)) throw RejectedGeneration("qg_with_ans: question leaks the answer");
  return {q, answer.surface, d.id, std::nullopt};
}

SingleHopQ qg_with_ans(const Table& t, const CellLocus& answer, const Backend& backend) {
  if (answer.row >= t.rows.size() || answer.col >= t.rows[answer.row].size() || t.rows[answer.row][answer.col].raw.empty()) {
    throw PreconditionError("qg_with_ans: cell locus outside table '" + t.id + "' or empty");
  }
  const std::string& raw = t.rows[answer.row][answer.col].raw;
  std::string q;
  try {
    q = trim(backend.gen_question_with_answer(flatten_table_row(t, answer.row), raw));
  } catch (const ProtocolError& e) {
    throw RejectedGeneration(std::string("qg_with_ans: ") + e.what());
  }
  require_question_shape(q, "qg_with_ans");
  if (contains_phrase(q, raw)) throw RejectedGeneration("qg_with_ans: question leaks the answer");
  return {q, raw, t.id, std::nullopt};
}

namespace {

SingleHopQ qg_with_ent_impl(std::string_view context, std::string_view entity, std::string source,
                            std::optional<EntityMention> anchor, const Backend& backend, int attempts,
                            const std::vector<std::string>* allowed_answers) {
  if (!icontains(context, entity)) throw PreconditionError("qg_with_ent: entity '" + std::string(entity) + "' absent");
  std::string last_reason = "no attempts";
  const std::string ent_norm = normalize_surface(entity);
  for (int k = 0; k < std::max(1, attempts); ++k) {
    GeneratedQuestion g;
    try {
      g = backend.gen_question_with_entity(context, entity);
    } catch (const ProtocolError& e) {
      last_reason = e.what();
      continue;
    }
    g.question = trim(g.question);
    g.answer = trim(g.answer);
    if (g.question.empty() || g.question.back() != '?') {
      last_reason = "not a question";
    } else if (!icontains(g.question, entity)) {
      last_reason = "question lacks the entity";
    } else if (normalize_surface(g.answer) == ent_norm) {
      last_reason = "answer equals the entity";
    } else if (allowed_answers &&
               std::find(allowed_answers->begin(), allowed_answers->end(), g.answer) == allowed_answers->end()) {
      last_reason = "answer is not a cell of the row";
    } else {
      return {g.question, g.answer, std::move(source), std::move(anchor)};
    }
  }
  throw RejectedGeneration("qg_with_ent: " + last_reason);
}

}  // namespace

SingleHopQ qg_with_ent(const Passage& d, const EntityMention& e, const Backend& backend, int attempts) {
  return qg_with_ent_impl(d.text, e.surface, d.id, e, backend, attempts, nullptr);
}

SingleHopQ qg_with_ent(const Table& t, const CellLocus& e, const Backend& backend, int attempts) {
  if (e.row >= t.rows.size()) throw PreconditionError("qg_with_ent: row outside table '" + t.id + "'");
  std::vector<std::string> cells;
  for (std::size_t c = 0; c < t.rows[e.row].size(); ++c) {
    if (c != e.col && !t.rows[e.row][c].raw.empty()) cells.push_back(t.rows[e.row][c].raw);
  }
  return qg_with_ent_impl(flatten_table_row(t, e.row), e.raw, t.id, std::nullopt, backend, attempts, &cells);
}

std::string describe_ent(const Table& t, const BridgeEntity& e, const Backend& backend) {
  const CellLocus* cell = e.cell();
  if (!cell) throw PreconditionError("describe_ent: bridge entity has no table locus");
  std::string s;
  try {
    s = backend.describe_entity(flatten_table_row(t, cell->row), cell->raw);
  } catch (const ProtocolError& err) {
    throw RejectedGeneration(std::string("describe_ent: ") + err.what());
  }
  if (!icontains(s, cell->raw)) throw RejectedGeneration("describe_ent: sentence does not mention the entity");
  return s;
}

// ---- fusion ----

std::string ques_to_sent(const SingleHopQ& q) {
  if (trim(q.question).empty() || trim(q.question).back() != '?') throw PreconditionError("ques_to_sent: not a question");
  return question_to_predicate(q.question, q.answer);
}

std::string build_bridge_mask(std::string_view question, std::string_view s, const std::vector<std::string>& surfaces) {
  std::optional<std::size_t> at;
  std::size_t len = 0;
  for (const auto& surface : surfaces) {
    if (surface.empty()) continue;
    if (auto p = ifind(question, surface); p && (!at || *p < *at)) {
      at = p;
      len = surface.size();
    }
  }
  if (!at) throw PreconditionError("bridge_blend: bridge entity absent from question");

  std::string pred = trim(s);
  for (const auto& surface : surfaces) {
    if (!surface.empty() && pred.size() >= surface.size() && ifind(pred, surface) == std::optional<std::size_t>(0)) {
      pred = trim(std::string_view(pred).substr(surface.size()));
      break;
    }
  }
  pred = strip_trailing_punct(std::move(pred));
  if (pred.empty()) throw PreconditionError("bridge_blend: empty predicate");

  std::string out(question.substr(0, *at));
  out += "the [MASK] that " + pred;
  out += question.substr(*at + len);
  return out;
}

std::string bridge_blend(const SingleHopQ& q, std::string_view s, const BridgeEntity& e, const Backend& backend) {
  const std::string masked = build_bridge_mask(q.question, s, e.surfaces());
  std::string fill;
  try {
    fill = backend.fill_mask(masked, e.mention.etype);
  } catch (const ProtocolError& err) {
    throw RejectedGeneration(std::string("bridge_blend: ") + err.what());
  }
  const std::size_t p = masked.find("[MASK]");
  std::string out = masked.substr(0, p) + fill + masked.substr(p + 6);
  out = trim(out);
  if (out.empty() || out.back() != '?') throw RejectedGeneration("bridge_blend: result is not a question");
  if (out.find("[MASK]") != std::string::npos) throw RejectedGeneration("bridge_blend: mask left unfilled");
  return out;
}

// ---- comparison templates ----

std::vector<ComparisonTemplate> load_comparison_templates(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open comparison templates '" + file.string() + "'");
  std::vector<ComparisonTemplate> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty() || trim(line)[0] == '#') continue;
    std::vector<std::string> cols;
    std::size_t pos = 0;
    for (std::size_t tab = line.find('\t'); tab != std::string::npos; tab = line.find('\t', pos)) {
      cols.push_back(line.substr(pos, tab - pos));
      pos = tab + 1;
    }
    cols.push_back(line.substr(pos));
    const std::string where = file.string() + ":" + std::to_string(lineno);
    if (cols.size() != 3) throw ConfigError(where + ": expected 3 tab-separated fields");
    auto prop = comparative_property_from_string(trim(cols[0]));
    if (!prop) throw ConfigError(where + ": unknown property '" + cols[0] + "'");
    std::optional<AnswerRule> rule;
    for (auto r : {AnswerRule::Earlier, AnswerRule::Same, AnswerRule::First, AnswerRule::Second, AnswerRule::BothInFirst}) {
      if (to_string(r) == trim(cols[2])) rule = r;
    }
    if (!rule) throw ConfigError(where + ": unknown answer rule '" + cols[2] + "'");
    out.push_back({*prop, trim(cols[1]), *rule});
  }
  return out;
}

const std::vector<ComparisonTemplate>& default_comparison_templates() {
  static const std::vector<ComparisonTemplate> t = load_comparison_templates(default_data_dir() / "comparison_templates.tsv");
  return t;
}

std::vector<ComparisonQuestion> comp_blend(const SingleHopQ& q1, const SingleHopQ& q2, ComparativeProperty prop,
                                           std::string_view e1, std::string_view e2, std::string_view a1,
                                           std::string_view a2, const std::vector<ComparisonTemplate>& templates) {
  if (trim(e1).empty() || trim(e2).empty() || trim(a1).empty() || trim(a2).empty()) {
    throw PreconditionError("comp_blend: entities and answers must be non-empty");
  }
  if (trim(q1.question).empty() || trim(q2.question).empty()) throw PreconditionError("comp_blend: empty question");
  const bool same = normalize_surface(a1) == normalize_surface(a2);

  std::vector<ComparisonQuestion> out;
  for (std::size_t i = 0; i < templates.size(); ++i) {
    const ComparisonTemplate& t = templates[i];
    if (t.property != prop) continue;
    std::string answer;
    switch (t.rule) {
      case AnswerRule::Earlier: {
        auto d1 = parse_date(a1);
        auto d2 = parse_date(a2);
        if (!d1 || !d2) continue;
        const auto order = compare_earliest(*d1, *d2);
        if (order == std::strong_ordering::equal) continue;
        answer = std::string(order == std::strong_ordering::less ? e1 : e2);
        break;
      }
      case AnswerRule::Same:
      case AnswerRule::BothInFirst: answer = same ? "Yes" : "No"; break;
      case AnswerRule::First:
        if (same) continue;
        answer = std::string(e1);
        break;
      case AnswerRule::Second:
        if (same) continue;
        answer = std::string(e2);
        break;
    }
    std::string q = t.text;
    q = replace_all(q, "{e1}", e1);
    q = replace_all(q, "{e2}", e2);
    q = replace_all(q, "{a1}", a1);
    q = replace_all(q, "{a2}", a2);
    out.push_back({std::move(q), std::move(answer), i});
  }
  if (out.empty()) {
    throw UndecidableAnswer("comp_blend: no template yields an answer for " + std::string(to_string(prop)) + " (" +
                            std::string(a1) + " vs " + std::string(a2) + ")");
  }
  return out;
}

}  // namespace mhqg
