#include "mhqg/stats.hpp"

#include "mhqg/backend.hpp"

#include <cmath>
#include <cstdio>

namespace mhqg {

namespace {

void add_question(DatasetStats& s, std::string_view q) {
  ++s.total;
  ++s.wh_counts[classify_wh(q)];
  s.question_tokens += word_count(q);
}

void finish(DatasetStats& s) {
  s.by_wh.clear();
  for (const auto& [wh, n] : s.wh_counts) s.by_wh[wh] = static_cast<double>(n) / static_cast<double>(s.total);
  s.mean_question_tokens = s.total ? static_cast<double>(s.question_tokens) / static_cast<double>(s.total) : 0.0;
}

}  // namespace

DatasetStats compute_stats(const std::vector<CandidateQA>& dataset) {
  DatasetStats s;
  for (const auto& c : dataset) {
    add_question(s, c.question);
    ++s.by_kind[c.kind];
  }
  finish(s);
  return s;
}

DatasetStats compute_question_stats(const std::vector<std::string>& questions) {
  DatasetStats s;
  for (const auto& q : questions) add_question(s, q);
  finish(s);
  return s;
}

DatasetStats merge_stats(const DatasetStats& a, const DatasetStats& b) {
  DatasetStats s = a;
  s.total += b.total;
  s.question_tokens += b.question_tokens;
  for (const auto& [k, n] : b.by_kind) s.by_kind[k] += n;
  for (const auto& [w, n] : b.wh_counts) s.wh_counts[w] += n;
  finish(s);
  return s;
}

std::map<WhType, double> compare_distributions(const DatasetStats& a, const DatasetStats& b) {
  std::map<WhType, double> out;
  for (WhType w : kAllWhTypes) {
    const double x = a.by_wh.count(w) ? a.by_wh.at(w) : 0.0;
    const double y = b.by_wh.count(w) ? b.by_wh.at(w) : 0.0;
    out[w] = std::fabs(x - y);
  }
  return out;
}

nlohmann::ordered_json stats_to_json(const DatasetStats& s) {
  nlohmann::ordered_json by_kind = nlohmann::ordered_json::object();
  for (GraphKind k : kAllGraphKinds) {
    if (s.by_kind.count(k)) by_kind[std::string(to_string(k))] = s.by_kind.at(k);
  }
  nlohmann::ordered_json by_wh = nlohmann::ordered_json::object();
  nlohmann::ordered_json wh_counts = nlohmann::ordered_json::object();
  for (WhType w : kAllWhTypes) {
    if (!s.wh_counts.count(w)) continue;
    by_wh[std::string(to_string(w))] = s.by_wh.at(w);
    wh_counts[std::string(to_string(w))] = s.wh_counts.at(w);
  }
  nlohmann::ordered_json j;
  j["total"] = s.total;
  j["by_kind"] = std::move(by_kind);
  j["by_wh"] = std::move(by_wh);
  j["wh_counts"] = std::move(wh_counts);
  j["mean_question_tokens"] = s.mean_question_tokens;
  return j;
}

std::string stats_histogram(const DatasetStats& s) {
  constexpr int kBarWidth = 40;
  std::string out;
  char line[160];
  for (WhType w : kAllWhTypes) {
    const std::size_t n = s.wh_counts.count(w) ? s.wh_counts.at(w) : 0;
    const double f = s.total ? static_cast<double>(n) / static_cast<double>(s.total) : 0.0;
    const int bar = static_cast<int>(std::lround(f * kBarWidth));
    std::snprintf(line, sizeof line, "%-6s %6zu %6.1f%% ", std::string(to_string(w)).c_str(), n, f * 100.0);
    out += line;
    out.append(static_cast<std::size_t>(bar), '#');
    out += '\n';
  }
  std::snprintf(line, sizeof line, "total  %6zu  mean tokens %.2f\n", s.total, s.mean_question_tokens);
  out += line;
  return out;
}

}  // namespace mhqg
