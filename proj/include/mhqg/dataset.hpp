#pragma once

#include "mhqg/graph.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace mhqg {

// Key order: id, question, answer, kind, sources, perplexity, provenance.
nlohmann::ordered_json candidate_to_json(const CandidateQA& c);

// Throws MalformedInput (with the line index) when a record breaks the
// CandidateQA invariants.
CandidateQA candidate_from_json(const nlohmann::json& j, std::size_t line_index = 0);

// One compact JSON object per line, each terminated by "\n".
std::string to_jsonl(const std::vector<CandidateQA>& cands);
std::vector<CandidateQA> parse_jsonl(std::string_view content);

std::vector<CandidateQA> read_jsonl(const std::filesystem::path& path);
void write_jsonl(const std::filesystem::path& path, const std::vector<CandidateQA>& cands);

// Writes text verbatim in binary mode; throws IoError.
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace mhqg
