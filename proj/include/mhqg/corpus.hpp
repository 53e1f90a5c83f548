#pragma once

#include "mhqg/text.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mhqg {

struct Passage {
  std::string id;
  std::string title;
  std::string text;
  std::vector<Span> sentences;

  friend bool operator==(const Passage&, const Passage&) = default;
};

// Builds a passage and segments its sentences. Throws PreconditionError on an
// empty title.
Passage make_passage(std::string id, std::string title, std::string text);

struct Cell {
  std::string raw;
  std::vector<std::string> linked_passage_ids;

  friend bool operator==(const Cell&, const Cell&) = default;
};

struct Table {
  std::string id;
  std::string title;
  std::string section_title;
  std::vector<std::string> headers;
  std::vector<std::vector<Cell>> rows;

  friend bool operator==(const Table&, const Table&) = default;
};

struct LinkedTableContext {
  Table table;
  std::map<std::string, Passage> passages;

  // Passages referenced by at least one cell, in row-major order of first link.
  std::vector<const Passage*> linked_passages() const;

  friend bool operator==(const LinkedTableContext&, const LinkedTableContext&) = default;
};

struct PassagePair {
  Passage first;
  Passage second;

  friend bool operator==(const PassagePair&, const PassagePair&) = default;
};

struct Corpus {
  std::vector<LinkedTableContext> tables;
  std::vector<PassagePair> pairs;

  std::size_t size() const { return tables.size() + pairs.size(); }
};

std::vector<LinkedTableContext> parse_table_corpus(const nlohmann::json& doc);
std::vector<PassagePair> parse_text_pair_corpus(const nlohmann::json& doc);

std::vector<LinkedTableContext> load_table_corpus(const std::filesystem::path& path);
std::vector<PassagePair> load_text_pair_corpus(const std::filesystem::path& path);

nlohmann::json table_corpus_to_json(const std::vector<LinkedTableContext>& contexts);
nlohmann::json text_pair_corpus_to_json(const std::vector<PassagePair>& pairs);

// Trim and collapse internal whitespace runs.
std::string normalize_cell(std::string_view raw);

// "<title> ; <section> ; <h1> is <c1> ; ... ; <hk> is <ck> ." with empty cells skipped.
std::string flatten_table_row(const Table& table, std::size_t row_index);

struct RowFact {
  std::string header;
  std::string value;
};

struct FlattenedRow {
  std::string title;
  std::string section_title;
  std::vector<RowFact> facts;
};

// Inverse of flatten_table_row; nullopt when text is not in that shape.
std::optional<FlattenedRow> parse_flattened_row(std::string_view text);

}  // namespace mhqg
