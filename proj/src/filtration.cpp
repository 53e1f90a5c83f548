#include "mhqg/filtration.hpp"

#include "mhqg/error.hpp"

#include <algorithm>
#include <future>
#include <set>
#include <tuple>

namespace mhqg {

namespace {

std::string joined_sources(const CandidateQA& c) {
  std::string s;
  for (const auto& x : c.sources) {
    s += x;
    s += '\x1f';
  }
  return s;
}

struct RankKey {
  double score;
  std::string question;
  std::string sources;
  std::string answer;
  std::string id;

  friend bool operator<(const RankKey& a, const RankKey& b) {
    return std::tie(a.score, a.question, a.sources, a.answer, a.id) <
           std::tie(b.score, b.question, b.sources, b.answer, b.id);
  }
};

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

void fill_score_summary(FiltrationReport& r, const std::vector<CandidateQA>& scored) {
  if (scored.empty()) return;
  std::vector<double> scores;
  for (const auto& c : scored) scores.push_back(*c.perplexity);
  r.score_min = *std::min_element(scores.begin(), scores.end());
  r.score_max = *std::max_element(scores.begin(), scores.end());
  r.score_median = median_of(std::move(scores));
}

}  // namespace

nlohmann::ordered_json report_to_json(const FiltrationReport& r) {
  nlohmann::ordered_json dropped = nlohmann::ordered_json::array();
  for (const auto& d : r.dropped_examples) dropped.push_back({{"question", d.question}, {"score", d.score}});
  return {{"input_count", r.input_count},   {"deduped_count", r.deduped_count}, {"output_count", r.output_count},
          {"score_min", r.score_min},       {"score_median", r.score_median},   {"score_max", r.score_max},
          {"dropped_examples", std::move(dropped)}};
}

std::vector<CandidateQA> score_all(std::vector<CandidateQA> cands, const Backend& backend, unsigned threads) {
  threads = std::max(1u, threads);
  if (threads == 1 || cands.size() < 2) {
    for (auto& c : cands) c.perplexity = backend.perplexity(c.question);
    return cands;
  }
  const std::size_t chunk = (cands.size() + threads - 1) / threads;
  std::vector<std::future<void>> jobs;
  for (std::size_t start = 0; start < cands.size(); start += chunk) {
    const std::size_t end = std::min(cands.size(), start + chunk);
    jobs.push_back(std::async(std::launch::async, [&cands, &backend, start, end] {
      for (std::size_t i = start; i < end; ++i) cands[i].perplexity = backend.perplexity(cands[i].question);
    }));
  }
  for (auto& j : jobs) j.get();
  return cands;
}

std::vector<CandidateQA> dedup(const std::vector<CandidateQA>& cands) {
  std::set<std::pair<std::string, std::string>> seen;
  std::vector<CandidateQA> out;
  for (const auto& c : cands) {
    if (seen.emplace(normalize_surface(c.question), normalize_surface(c.answer)).second) out.push_back(c);
  }
  return out;
}

std::pair<std::vector<CandidateQA>, FiltrationReport> select_top_n(const std::vector<CandidateQA>& scored, std::size_t n) {
  std::vector<std::pair<RankKey, std::size_t>> ranked;
  ranked.reserve(scored.size());
  for (std::size_t i = 0; i < scored.size(); ++i) {
    const auto& c = scored[i];
    if (!c.perplexity) throw UnscoredCandidate("candidate '" + c.id + "' has no perplexity score");
    ranked.push_back({{*c.perplexity, normalize_surface(c.question), joined_sources(c), normalize_surface(c.answer), c.id}, i});
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });

  FiltrationReport r;
  r.input_count = scored.size();
  r.deduped_count = scored.size();
  fill_score_summary(r, scored);
  std::vector<CandidateQA> out;
  const std::size_t keep = std::min(n, ranked.size());
  for (std::size_t k = 0; k < keep; ++k) out.push_back(scored[ranked[k].second]);
  for (std::size_t k = keep; k < ranked.size() && r.dropped_examples.size() < FiltrationReport::kMaxDroppedExamples; ++k) {
    const auto& c = scored[ranked[k].second];
    r.dropped_examples.push_back({c.question, *c.perplexity});
  }
  r.output_count = out.size();
  return {std::move(out), std::move(r)};
}

std::pair<std::vector<CandidateQA>, FiltrationReport> filter_candidates(std::vector<CandidateQA> cands,
                                                                         const Backend& backend, std::size_t n,
                                                                         unsigned threads) {
  const std::size_t input_count = cands.size();
  auto scored = score_all(std::move(cands), backend, threads);
  auto unique = dedup(scored);
  auto [out, report] = select_top_n(unique, n);
  report.input_count = input_count;
  fill_score_summary(report, scored);
  return {std::move(out), std::move(report)};
}

}  // namespace mhqg
