#include "mhqg/corpus.hpp"
#include "mhqg/error.hpp"
#include "mhqg/filtration.hpp"
#include "mhqg/graph.hpp"
#include "mhqg/operators.hpp"
#include "mhqg/qdmr.hpp"
#include "mhqg/stats.hpp"
#include "mhqg/text.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

using namespace mhqg;

namespace {

using Rng = std::mt19937_64;

const std::vector<std::string> kNames = {"Alan Turing",   "Grace Hopper",  "Ada Lovelace", "Jenson Button",
                                         "Ross Brawn",    "Beth Ditto",    "Terry Southern", "Ciro Ippolito",
                                         "Arthur Lubin",  "Mary Beth Patterson"};
const std::vector<std::string> kPlaces = {"Frome", "Astoria", "Kerala", "Paris", "London"};
const std::vector<std::string> kNations = {"American", "British", "Italian", "Canadian"};
const std::vector<std::string> kFiller = {"met", "saw", "joined", "visited", "and", "later", "then", "with", "the team"};
const std::vector<std::string> kMonths = {"January", "February", "March",     "April",   "May",      "June",
                                          "July",    "August",   "September", "October", "November", "December"};

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& v) {
  return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
}

int uniform(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

std::string random_entity(Rng& rng) {
  switch (uniform(rng, 0, 4)) {
    case 0:
    case 1: return pick(rng, kNames);
    case 2: return "in " + pick(rng, kPlaces);
    case 3: return pick(rng, kNations);
    default: return std::to_string(uniform(rng, 1900, 2020));
  }
}

// A few sentences with at most `max_entities` entity slots.
std::string random_text(Rng& rng, int max_entities) {
  std::string text;
  int left = uniform(rng, 1, max_entities);
  while (left > 0) {
    std::string sentence = pick(rng, kNames);
    --left;
    for (int k = uniform(rng, 0, 3); k > 0 && left > 0; --k, --left) {
      sentence += " " + pick(rng, kFiller) + " " + random_entity(rng);
    }
    if (!text.empty()) text += " ";
    text += sentence + ".";
  }
  return text;
}

std::set<std::string> eligible_surfaces(const std::string& text) {
  std::set<std::string> out;
  for (const auto& m : extract_entities(text)) {
    if (is_bridge_eligible(m, default_gazetteers())) out.insert(m.normalized);
  }
  return out;
}

// Days since 1970-01-01 for a proleptic Gregorian date.
long days_since_epoch(int y, int m, int d) {
  static const int kCum[] = {0, 31, 59, 90, 120, 151, 181, 212, 243, 273, 304, 334};
  auto leap = [](int yy) { return (yy % 4 == 0 && yy % 100 != 0) || yy % 400 == 0; };
  long days = 0;
  for (int yy = 1970; yy < y; ++yy) days += leap(yy) ? 366 : 365;
  for (int yy = y; yy < 1970; ++yy) days -= leap(yy) ? 366 : 365;
  days += kCum[m - 1] + (m > 2 && leap(y) ? 1 : 0) + (d - 1);
  return days;
}

int days_in_month(int y, int m) {
  static const int kLen[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  const bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
  return m == 2 && leap ? 29 : kLen[m - 1];
}

CandidateQA cand(std::string q, std::string a, double ppl) {
  CandidateQA c;
  c.question = std::move(q);
  c.answer = std::move(a);
  c.sources = {"s"};
  c.perplexity = ppl;
  c.id = candidate_id(c.kind, c.question, c.answer, c.sources);
  return c;
}

}  // namespace

TEST_CASE("normalize_surface is idempotent") {
  Rng rng(11);
  const std::vector<std::string> parts = {"The", "the", "A", "an", " ", "  ", "Oak", "RIDGE", "boys", "\"", "!",
                                          ",",   "(",   ")", "Ｆａｒｇｏ", "é", "e\xCC\x81", "-", "1966", "\t"};
  for (int i = 0; i < 500; ++i) {
    std::string s;
    for (int k = uniform(rng, 0, 8); k > 0; --k) s += pick(rng, parts);
    const std::string once = normalize_surface(s);
    CHECK(normalize_surface(once) == once);
  }
}

TEST_CASE("entity spans are exact and disjoint") {
  Rng rng(12);
  for (int i = 0; i < 300; ++i) {
    const std::string text = random_text(rng, 12);
    const auto ms = extract_entities(text);
    for (std::size_t k = 0; k < ms.size(); ++k) {
      CHECK(text.substr(ms[k].span.begin, ms[k].span.size()) == ms[k].surface);
      CHECK(ms[k].normalized == normalize_surface(ms[k].surface));
      if (k > 0) CHECK(ms[k - 1].span.end <= ms[k].span.begin);
    }
  }
}

TEST_CASE("classify_wh is pure") {
  Rng rng(13);
  const std::vector<std::string> words = {"what", "Who", "on", "at", "is", "When", "x", "Which", "how", "where"};
  for (int i = 0; i < 200; ++i) {
    std::string q;
    for (int k = uniform(rng, 1, 6); k > 0; --k) q += pick(rng, words) + " ";
    q += "?";
    CHECK(classify_wh(q) == classify_wh(std::string(q)));
  }
}

TEST_CASE("find_bridge text x text matches set intersection") {
  Rng rng(14);
  for (int i = 0; i < 200; ++i) {
    auto a = make_passage("a", "A", random_text(rng, 10));
    auto b = make_passage("b", "B", random_text(rng, 10));
    std::set<std::string> want;
    const auto ea = eligible_surfaces(a.text);
    const auto eb = eligible_surfaces(b.text);
    std::set_intersection(ea.begin(), ea.end(), eb.begin(), eb.end(), std::inserter(want, want.end()));
    std::set<std::string> got, swapped;
    for (const auto& br : find_bridge(a, b)) got.insert(br.mention.normalized);
    for (const auto& br : find_bridge(b, a)) swapped.insert(br.mention.normalized);
    CHECK(got == want);
    CHECK(swapped == got);
  }
}

TEST_CASE("find_bridge table x text matches cell intersection") {
  Rng rng(15);
  for (int i = 0; i < 100; ++i) {
    LinkedTableContext ctx;
    ctx.table.id = "t";
    ctx.table.title = "T";
    ctx.table.headers = {"A", "B"};
    for (int r = uniform(rng, 1, 4); r > 0; --r) {
      ctx.table.rows.push_back({Cell{pick(rng, kNames), {}}, Cell{pick(rng, kPlaces), {}}});
    }
    auto d = make_passage("p", "P", random_text(rng, 10));
    const auto eligible = eligible_surfaces(d.text);
    std::vector<std::string> want;
    for (const auto& row : ctx.table.rows) {
      for (const auto& cell : row) {
        if (eligible.count(normalize_surface(cell.raw))) want.push_back(normalize_surface(cell.raw));
      }
    }
    std::vector<std::string> got;
    for (const auto& br : find_bridge(ctx, d)) {
      got.push_back(br.mention.normalized);
      CHECK(normalize_surface(br.cell()->raw) == br.mention.normalized);
    }
    CHECK(got == want);
  }
}

TEST_CASE("date ordering agrees with a day count") {
  Rng rng(16);
  for (int i = 0; i < 500; ++i) {
    int y[2], m[2], d[2];
    std::string s[2];
    for (int k = 0; k < 2; ++k) {
      y[k] = uniform(rng, 1600, 2100);
      m[k] = uniform(rng, 1, 12);
      d[k] = uniform(rng, 1, days_in_month(y[k], m[k]));
      s[k] = uniform(rng, 0, 1) ? std::to_string(d[k]) + " " + kMonths[m[k] - 1] + " " + std::to_string(y[k])
                                : kMonths[m[k] - 1] + " " + std::to_string(d[k]) + ", " + std::to_string(y[k]);
    }
    auto p0 = parse_date(s[0]);
    auto p1 = parse_date(s[1]);
    REQUIRE(p0);
    REQUIRE(p1);
    const long a = days_since_epoch(y[0], m[0], d[0]);
    const long b = days_since_epoch(y[1], m[1], d[1]);
    CHECK((compare_earliest(*p0, *p1) == std::strong_ordering::less) == (a < b));
    CHECK((compare_earliest(*p0, *p1) == std::strong_ordering::equal) == (a == b));
  }
}

TEST_CASE("comp_blend is permutation coherent") {
  Rng rng(17);
  const SingleHopQ q{"What is it?", "x", "s", {}};
  const ComparativeProperty props[] = {ComparativeProperty::Birthdate, ComparativeProperty::Location,
                                       ComparativeProperty::Nationality, ComparativeProperty::LivePlace};
  for (int i = 0; i < 300; ++i) {
    const auto prop = props[uniform(rng, 0, 3)];
    std::string e1 = pick(rng, kNames), e2 = pick(rng, kNames);
    if (e1 == e2) continue;
    std::string a1, a2;
    if (prop == ComparativeProperty::Birthdate) {
      a1 = std::to_string(uniform(rng, 1, 28)) + " May " + std::to_string(uniform(rng, 1950, 1953));
      a2 = std::to_string(uniform(rng, 1, 28)) + " May " + std::to_string(uniform(rng, 1950, 1953));
    } else {
      a1 = pick(rng, kPlaces);
      a2 = pick(rng, kPlaces);
    }
    std::vector<ComparisonQuestion> fwd, rev;
    bool fwd_undecidable = false, rev_undecidable = false;
    try { fwd = comp_blend(q, q, prop, e1, e2, a1, a2); } catch (const UndecidableAnswer&) { fwd_undecidable = true; }
    try { rev = comp_blend(q, q, prop, e2, e1, a2, a1); } catch (const UndecidableAnswer&) { rev_undecidable = true; }
    CHECK(fwd_undecidable == rev_undecidable);
    if (fwd_undecidable) continue;
    REQUIRE(fwd.size() == rev.size());
    for (std::size_t k = 0; k < fwd.size(); ++k) {
      const auto rule = default_comparison_templates()[fwd[k].template_index].rule;
      if (rule == AnswerRule::Same || rule == AnswerRule::BothInFirst) {
        // The both-in-a1 question names a different place once swapped; its
        // answer still only depends on whether the two places agree.
        CHECK(fwd[k].answer == rev[k].answer);
      } else if (rule == AnswerRule::Earlier) {
        CHECK(fwd[k].answer == rev[k].answer);
      } else {
        // "Which ... in a1" asked forward equals "Which ... in a2" asked in reverse.
        CHECK(((fwd[k].answer == e1) == (rev[k].answer == e2)));
      }
    }
  }
}

TEST_CASE("stub entity questions contain the entity") {
  Rng rng(18);
  StubBackend stub(5);
  int produced = 0;
  for (int i = 0; i < 200; ++i) {
    auto d = make_passage("p", "P", random_text(rng, 8));
    auto ms = extract_entities(d.text, default_tagger(), "p");
    if (ms.empty()) continue;
    const auto& e = ms[static_cast<std::size_t>(uniform(rng, 0, static_cast<int>(ms.size()) - 1))];
    try {
      auto q = qg_with_ent(d, e, stub);
      ++produced;
      CHECK(icontains(q.question, e.surface));
      CHECK(q.question.back() == '?');
      CHECK(d.text.find(q.answer) != std::string::npos);
    } catch (const RejectedGeneration&) {
    }
  }
  CHECK(produced > 50);
}

TEST_CASE("bridge_blend keeps the predicate and fills the mask") {
  Rng rng(19);
  StubBackend stub;
  for (int i = 0; i < 200; ++i) {
    const std::string e = pick(rng, kNames);
    const std::string q = "When did " + e + " " + pick(rng, kFiller) + " " + pick(rng, kPlaces) + "?";
    const std::string s = "won the " + pick(rng, kNations) + " prize in " + std::to_string(uniform(rng, 1900, 2000));
    EntityMention m{e, normalize_surface(e), EntityType::Person, {0, e.size()}, "p"};
    const std::string out = bridge_blend({q, "x", "p", m}, s, BridgeEntity{m, m}, stub);
    CHECK(out.find(s) != std::string::npos);
    CHECK(out.find("[MASK]") == std::string::npos);
    CHECK(out.back() == '?');
  }
}

TEST_CASE("dedup is idempotent and selection is ordered") {
  Rng rng(20);
  const std::vector<std::string> qs = {"Who is A?", "who is a?", "What is B?", "When was C?", "Who is A ?"};
  for (int i = 0; i < 50; ++i) {
    std::vector<CandidateQA> cands;
    for (int k = uniform(rng, 0, 40); k > 0; --k) {
      cands.push_back(cand(pick(rng, qs), pick(rng, qs), std::uniform_real_distribution<double>(1, 3)(rng)));
    }
    const auto once = dedup(cands);
    CHECK(dedup(once) == once);
    const std::size_t n = static_cast<std::size_t>(uniform(rng, 0, 10));
    auto [top, report] = select_top_n(once, n);
    CHECK(top.size() == std::min(n, once.size()));
    CHECK(report.output_count <= report.deduped_count);
    CHECK(report.deduped_count <= report.input_count);
    for (std::size_t k = 1; k < top.size(); ++k) CHECK(*top[k - 1].perplexity <= *top[k].perplexity);
    double max_kept = 0;
    for (const auto& c : top) max_kept = std::max(max_kept, *c.perplexity);
    for (const auto& c : once) {
      if (std::find(top.begin(), top.end(), c) == top.end()) CHECK(*c.perplexity >= max_kept);
    }
  }
}

TEST_CASE("flattening mentions each cell of the row once") {
  Rng rng(21);
  for (int i = 0; i < 100; ++i) {
    Table t;
    t.id = "t";
    t.title = "Title";
    const int cols = uniform(rng, 1, 5);
    for (int c = 0; c < cols; ++c) t.headers.push_back("H" + std::to_string(c));
    const int rows = uniform(rng, 1, 5);
    for (int r = 0; r < rows; ++r) {
      std::vector<Cell> row;
      for (int c = 0; c < cols; ++c) {
        row.push_back(Cell{uniform(rng, 0, 4) ? "v" + std::to_string(r) + "x" + std::to_string(c) + "z" : "", {}});
      }
      t.rows.push_back(std::move(row));
    }
    const auto r = static_cast<std::size_t>(uniform(rng, 0, rows - 1));
    const std::string flat = flatten_table_row(t, r);
    for (std::size_t rr = 0; rr < t.rows.size(); ++rr) {
      for (const auto& cell : t.rows[rr]) {
        if (cell.raw.empty()) continue;
        std::size_t count = 0;
        for (auto p = flat.find(cell.raw); p != std::string::npos; p = flat.find(cell.raw, p + 1)) ++count;
        CHECK(count == (rr == r ? 1u : 0u));
      }
    }
  }
}

TEST_CASE("corpus serialization round-trips") {
  Rng rng(22);
  for (int i = 0; i < 50; ++i) {
    LinkedTableContext ctx;
    ctx.table.id = "t" + std::to_string(i);
    ctx.table.title = pick(rng, kNames) + " table";
    ctx.table.section_title = uniform(rng, 0, 1) ? "Section" : "";
    ctx.table.headers = {"Name", "Place"};
    for (int r = uniform(rng, 0, 3); r > 0; --r) {
      ctx.table.rows.push_back({Cell{pick(rng, kNames), {"p1"}}, Cell{pick(rng, kPlaces), {}}});
    }
    ctx.passages.emplace("p1", make_passage("p1", "P", random_text(rng, 6)));
    auto once = parse_table_corpus(table_corpus_to_json({ctx}));
    CHECK(parse_table_corpus(table_corpus_to_json(once)) == once);
    CHECK(once[0].table == ctx.table);
  }
  std::vector<PassagePair> pairs{{make_passage("a", "A", random_text(rng, 5)), make_passage("b", "B", random_text(rng, 5))}};
  CHECK(parse_text_pair_corpus(text_pair_corpus_to_json(pairs)) == pairs);
}

TEST_CASE("generated QDMR programs type-check") {
  Rng rng(23);
  for (int i = 0; i < 100; ++i) {
    LinkedTableContext ctx;
    ctx.table.id = "t";
    ctx.table.title = "Season " + std::to_string(uniform(rng, 1990, 2020));
    const int cols = uniform(rng, 2, 4);
    for (int c = 0; c < cols; ++c) ctx.table.headers.push_back("Col" + std::string(1, static_cast<char>('A' + c)));
    for (int r = uniform(rng, 1, 4); r > 0; --r) {
      std::vector<Cell> row;
      for (int c = 0; c < cols; ++c) row.push_back(Cell{"val" + std::to_string(r) + std::string(1, 'k' + c), {}});
      const std::string pid = "p" + std::to_string(r);
      row[static_cast<std::size_t>(uniform(rng, 0, cols - 1))].linked_passage_ids = {pid};
      ctx.passages.emplace(pid, make_passage(pid, "P", pick(rng, kNames) + " was born on " +
                                                          std::to_string(uniform(rng, 1, 28)) + " May 1970 in " +
                                                          pick(rng, kPlaces) + "."));
      ctx.table.rows.push_back(std::move(row));
    }
    for (GraphKind kind : {GraphKind::TableToText, GraphKind::TextToTable}) {
      for (const auto& p : make_qdmr(ctx, kind, static_cast<std::uint64_t>(i))) {
        CHECK(p.steps.size() == 4);
        CHECK(check_qdmr(p).empty());
        const std::string q = realize(p);
        auto count = [&](const std::string& needle) {
          std::size_t n = 0;
          for (auto pos = q.find(needle); pos != std::string::npos; pos = q.find(needle, pos + 1)) ++n;
          return n;
        };
        CHECK(count(p.column_a) == 1);
        CHECK(count(p.title) == 1);
        if (kind == GraphKind::TableToText) CHECK(count(p.value) == 1);
      }
    }
  }
}

TEST_CASE("graph mutations are caught") {
  Rng rng(24);
  for (int i = 0; i < 50; ++i) {
    auto g = builtin(kAllGraphKinds[static_cast<std::size_t>(uniform(rng, 0, 5))]);
    const auto e = static_cast<std::size_t>(uniform(rng, 0, static_cast<int>(g.edges.size()) - 1));
    g.edges.erase(g.edges.begin() + static_cast<std::ptrdiff_t>(e));
    CHECK(!validate(g).empty());
  }
}

TEST_CASE("stats are permutation invariant") {
  Rng rng(25);
  std::vector<CandidateQA> ds;
  const std::vector<std::string> qs = {"Who?", "What is it?", "When was it built?", "Are they equal?", "How many?"};
  for (int i = 0; i < 60; ++i) ds.push_back(cand(pick(rng, qs), "a", 1.0));
  const auto base = compute_stats(ds);
  for (int i = 0; i < 10; ++i) {
    std::shuffle(ds.begin(), ds.end(), rng);
    const auto s = compute_stats(ds);
    CHECK(s.wh_counts == base.wh_counts);
    CHECK(s.by_kind == base.by_kind);
    CHECK(s.mean_question_tokens == doctest::Approx(base.mean_question_tokens));
  }
  double sum = 0;
  for (const auto& [k, v] : base.by_wh) sum += v;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
}
