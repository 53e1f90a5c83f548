#pragma once

#include "mhqg/backend.hpp"
#include "mhqg/corpus.hpp"
#include "mhqg/operators.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

namespace mhqg {

enum class GraphKind { TableOnly, TextOnly, TableToText, TextToTable, TextToText, Comparison };

inline constexpr GraphKind kAllGraphKinds[] = {GraphKind::TableOnly,   GraphKind::TextOnly,   GraphKind::TableToText,
                                               GraphKind::TextToTable, GraphKind::TextToText, GraphKind::Comparison};

std::string_view to_string(GraphKind k);       // "TABLE_TO_TEXT"
std::string_view to_snake_case(GraphKind k);   // "table_to_text"
// Accepts either spelling, case-insensitively.
std::optional<GraphKind> graph_kind_from_string(std::string_view s);
bool is_table_kind(GraphKind k);

enum class ValueKind { Table, Text, Entity, EntitySet, Question, Sentence, QaPair };

std::string_view to_string(ValueKind k);

// Reserved edge sources standing for the graph's input contexts.
inline constexpr std::string_view kInputTable = "$table";
inline constexpr std::string_view kInputText = "$text";   // each linked passage of the table in turn
inline constexpr std::string_view kInputText1 = "$text1";
inline constexpr std::string_view kInputText2 = "$text2";

struct OperatorNode {
  std::string id;
  std::string op;
  nlohmann::json params = nlohmann::json::object();
};

struct Edge {
  std::string from;
  std::string to;
  std::size_t port = 0;
};

struct ReasoningGraph {
  GraphKind name = GraphKind::TextOnly;
  std::vector<OperatorNode> nodes;
  std::vector<Edge> edges;
};

struct OpSignature {
  std::vector<ValueKind> inputs;
  ValueKind output = ValueKind::Question;
};

// Port kinds of a node given its params; nullopt for an unknown op or bad params.
std::optional<OpSignature> signature_of(const OperatorNode& node);
std::vector<std::string> known_operators();

// Every violation found, in a stable order; empty means valid.
std::vector<std::string> validate(const ReasoningGraph& g);

ReasoningGraph builtin(GraphKind kind);

nlohmann::json graph_to_json(const ReasoningGraph& g);
ReasoningGraph graph_from_json(const nlohmann::json& j);

struct ProvenanceStep {
  std::string node;
  std::string op;
  std::vector<std::string> inputs;  // digests
  std::string output;               // digest

  friend bool operator==(const ProvenanceStep&, const ProvenanceStep&) = default;
};

struct CandidateQA {
  std::string id;
  std::string question;
  std::string answer;
  GraphKind kind = GraphKind::TextOnly;
  std::vector<std::string> sources;
  std::optional<double> perplexity;
  std::vector<ProvenanceStep> provenance;

  friend bool operator==(const CandidateQA&, const CandidateQA&) = default;
};

// Content hash over (kind, question, answer, sources).
std::string candidate_id(GraphKind kind, std::string_view question, std::string_view answer,
                         const std::vector<std::string>& sources);

struct ExecOptions {
  std::size_t max_fanout = 8;
  int qg_attempts = kDefaultQgRetries;
  std::uint64_t seed = 0;
  const EntityTagger* tagger = nullptr;          // default_tagger() when null
  const Gazetteers* gazetteers = nullptr;        // default_gazetteers() when null
  const std::vector<ComparisonTemplate>* templates = nullptr;  // default_comparison_templates() when null
};

struct ExecStats {
  std::size_t branches = 0;
  std::size_t rejected = 0;
  std::size_t unsupported = 0;
  std::size_t undecidable = 0;

  std::size_t dropped() const { return rejected + unsupported + undecidable; }
  ExecStats& operator+=(const ExecStats& o);
};

using GraphInput = std::variant<const LinkedTableContext*, const PassagePair*>;

std::vector<CandidateQA> execute(const ReasoningGraph& g, GraphInput input, const Backend& backend,
                                 const ExecOptions& opts = {}, ExecStats* stats = nullptr);

struct GenerateOptions {
  ExecOptions exec;
  unsigned threads = 1;
  std::ostream* log = nullptr;
};

// Corpus order (tables, then pairs), then kind order, then branch order.
// Items whose modality does not fit a kind are skipped.
std::vector<CandidateQA> generate_dataset(const std::vector<GraphKind>& kinds, const Corpus& corpus,
                                          const Backend& backend, const GenerateOptions& opts = {},
                                          ExecStats* stats = nullptr);

}  // namespace mhqg
