#pragma once

#include "mhqg/graph.hpp"
#include "mhqg/text.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace mhqg {

struct DatasetStats {
  std::size_t total = 0;
  std::map<GraphKind, std::size_t> by_kind;
  std::map<WhType, std::size_t> wh_counts;
  std::map<WhType, double> by_wh;  // fractions of total; only types that occur
  double mean_question_tokens = 0.0;
  std::size_t question_tokens = 0;  // sum, kept so partial stats can be merged
};

DatasetStats compute_stats(const std::vector<CandidateQA>& dataset);
// Wh-type and length statistics over bare questions (by_kind stays empty).
DatasetStats compute_question_stats(const std::vector<std::string>& questions);

// Commutative merge of two partial results.
DatasetStats merge_stats(const DatasetStats& a, const DatasetStats& b);

// |a - b| per wh-type over all seven types.
std::map<WhType, double> compare_distributions(const DatasetStats& a, const DatasetStats& b);

nlohmann::ordered_json stats_to_json(const DatasetStats& s);
// Aligned plain-text histogram of the wh-type distribution.
std::string stats_histogram(const DatasetStats& s);

}  // namespace mhqg
