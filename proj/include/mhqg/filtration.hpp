#pragma once

#include "mhqg/backend.hpp"
#include "mhqg/graph.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace mhqg {

struct DroppedExample {
  std::string question;
  double score = 0.0;
};

struct FiltrationReport {
  std::size_t input_count = 0;
  std::size_t deduped_count = 0;
  std::size_t output_count = 0;
  double score_min = 0.0;
  double score_median = 0.0;
  double score_max = 0.0;
  std::vector<DroppedExample> dropped_examples;  // at most kMaxDroppedExamples

  static constexpr std::size_t kMaxDroppedExamples = 20;
};

nlohmann::ordered_json report_to_json(const FiltrationReport& r);

// Attaches a perplexity to every candidate; order is preserved.
std::vector<CandidateQA> score_all(std::vector<CandidateQA> cands, const Backend& backend, unsigned threads = 1);

// Keeps the first candidate per (normalized question, normalized answer).
std::vector<CandidateQA> dedup(const std::vector<CandidateQA>& cands);

// Lowest-perplexity n, ordered by (perplexity, normalized question, sources).
// Throws UnscoredCandidate if any candidate lacks a score.
std::pair<std::vector<CandidateQA>, FiltrationReport> select_top_n(const std::vector<CandidateQA>& scored, std::size_t n);

// select_top_n . dedup . score_all
std::pair<std::vector<CandidateQA>, FiltrationReport> filter_candidates(std::vector<CandidateQA> cands,
                                                                         const Backend& backend, std::size_t n,
                                                                         unsigned threads = 1);

}  // namespace mhqg
