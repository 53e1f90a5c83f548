#include "mhqg/corpus.hpp"

#include "mhqg/error.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

using nlohmann::json;

namespace mhqg {

namespace {

const json& require(const json& obj, const char* key, json::value_t type, std::size_t index, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw MalformedInput(index, where + ": missing \"" + key + "\"");
  }
  const json& v = obj.at(key);
  if (v.type() != type) throw MalformedInput(index, where + ": \"" + key + "\" has wrong type");
  return v;
}

std::string optional_string(const json& obj, const char* key, std::size_t index, const std::string& where) {
  if (!obj.contains(key) || obj.at(key).is_null()) return {};
  if (!obj.at(key).is_string()) throw MalformedInput(index, where + ": \"" + key + "\" has wrong type");
  return obj.at(key).get<std::string>();
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  std::string content = buf.str();
  if (content.rfind("\xEF\xBB\xBF", 0) == 0) {
    throw MalformedInput(0, "UTF-8 BOM not allowed in '" + path.string() + "'");
  }
  try {
    return json::parse(content);
  } catch (const json::parse_error& e) {
    throw MalformedInput(0, std::string("invalid JSON: ") + e.what());
  }
}

Passage parse_passage(const json& obj, std::string id, std::size_t index, const std::string& where) {
  std::string title = require(obj, "title", json::value_t::string, index, where).get<std::string>();
  std::string text = require(obj, "text", json::value_t::string, index, where).get<std::string>();
  if (trim(title).empty()) throw MalformedInput(index, where + ": empty title");
  return make_passage(std::move(id), std::move(title), std::move(text));
}

json passage_body(const Passage& p) { return json{{"title", p.title}, {"text", p.text}}; }

}  // namespace

Passage make_passage(std::string id, std::string title, std::string text) {
  if (trim(title).empty()) throw PreconditionError("passage '" + id + "' has an empty title");
  Passage p{std::move(id), std::move(title), std::move(text), {}};
  p.sentences = split_sentences(p.text);
  return p;
}

std::vector<const Passage*> LinkedTableContext::linked_passages() const {
  std::vector<const Passage*> out;
  std::unordered_set<std::string> seen;
  for (const auto& row : table.rows) {
    for (const auto& cell : row) {
      for (const auto& id : cell.linked_passage_ids) {
        if (!seen.insert(id).second) continue;
        if (auto it = passages.find(id); it != passages.end()) out.push_back(&it->second);
      }
    }
  }
  return out;
}

std::string normalize_cell(std::string_view raw) { return collapse_whitespace(raw); }

std::vector<LinkedTableContext> parse_table_corpus(const json& doc) {
  if (!doc.is_array()) throw MalformedInput(0, "table corpus must be a JSON array");
  std::vector<LinkedTableContext> out;
  out.reserve(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const json& rec = doc[i];
    if (!rec.is_object()) throw MalformedInput(i, "record is not an object");
    const json& t = require(rec, "table", json::value_t::object, i, "record");
    LinkedTableContext ctx;
    Table& table = ctx.table;
    table.id = require(t, "id", json::value_t::string, i, "table").get<std::string>();
    table.title = require(t, "title", json::value_t::string, i, "table").get<std::string>();
    table.section_title = optional_string(t, "section_title", i, "table");
    if (trim(table.title).empty()) throw MalformedInput(i, "table: empty title");

    const json& headers = require(t, "headers", json::value_t::array, i, "table");
    if (headers.empty()) throw MalformedInput(i, "table: no headers");
    std::set<std::string> seen;
    for (const json& h : headers) {
      if (!h.is_string()) throw MalformedInput(i, "table: header is not a string");
      std::string header = normalize_cell(h.get<std::string>());
      std::string key = ascii_lower(header);
      if (key.empty()) throw MalformedInput(i, "table: empty header");
      if (!seen.insert(key).second) throw MalformedInput(i, "table: duplicate header '" + header + "'");
      table.headers.push_back(std::move(header));
    }

    const json& rows = require(t, "rows", json::value_t::array, i, "table");
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const json& row = rows[r];
      if (!row.is_array()) throw MalformedInput(i, "table: row " + std::to_string(r) + " is not an array");
      if (row.size() != table.headers.size()) {
        throw MalformedInput(i, "table: row " + std::to_string(r) + " has " + std::to_string(row.size()) +
                                    " cells, expected " + std::to_string(table.headers.size()));
      }
      std::vector<Cell> cells;
      for (const json& c : row) {
        Cell cell;
        cell.raw = normalize_cell(require(c, "raw", json::value_t::string, i, "cell").get<std::string>());
        if (c.contains("links")) {
          const json& links = require(c, "links", json::value_t::array, i, "cell");
          for (const json& l : links) {
            if (!l.is_string()) throw MalformedInput(i, "cell: link is not a string");
            cell.linked_passage_ids.push_back(l.get<std::string>());
          }
        }
        cells.push_back(std::move(cell));
      }
      table.rows.push_back(std::move(cells));
    }

    if (rec.contains("passages")) {
      const json& passages = require(rec, "passages", json::value_t::object, i, "record");
      for (const auto& [id, body] : passages.items()) {
        ctx.passages.emplace(id, parse_passage(body, id, i, "passage '" + id + "'"));
      }
    }
    for (const auto& row : table.rows) {
      for (const auto& cell : row) {
        for (const auto& id : cell.linked_passage_ids) {
          if (!ctx.passages.count(id)) throw DanglingLink(id);
        }
      }
    }
    out.push_back(std::move(ctx));
  }
  return out;
}

std::vector<PassagePair> parse_text_pair_corpus(const json& doc) {
  if (!doc.is_array()) throw MalformedInput(0, "pair corpus must be a JSON array");
  std::vector<PassagePair> out;
  out.reserve(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const json& rec = doc[i];
    if (!rec.is_object()) throw MalformedInput(i, "record is not an object");
    const json& a = require(rec, "first", json::value_t::object, i, "record");
    const json& b = require(rec, "second", json::value_t::object, i, "record");
    std::string id_a = require(a, "id", json::value_t::string, i, "first").get<std::string>();
    std::string id_b = require(b, "id", json::value_t::string, i, "second").get<std::string>();
    if (id_a == id_b) throw DuplicatePair("record " + std::to_string(i) + ": both passages have id '" + id_a + "'");
    out.push_back({parse_passage(a, id_a, i, "first"), parse_passage(b, id_b, i, "second")});
  }
  return out;
}

std::vector<LinkedTableContext> load_table_corpus(const std::filesystem::path& path) {
  return parse_table_corpus(read_json(path));
}

std::vector<PassagePair> load_text_pair_corpus(const std::filesystem::path& path) {
  return parse_text_pair_corpus(read_json(path));
}

json table_corpus_to_json(const std::vector<LinkedTableContext>& contexts) {
  json out = json::array();
  for (const auto& ctx : contexts) {
    json rows = json::array();
    for (const auto& row : ctx.table.rows) {
      json cells = json::array();
      for (const auto& cell : row) cells.push_back({{"raw", cell.raw}, {"links", cell.linked_passage_ids}});
      rows.push_back(std::move(cells));
    }
    json passages = json::object();
    for (const auto& [id, p] : ctx.passages) passages[id] = passage_body(p);
    out.push_back({{"table",
                    {{"id", ctx.table.id},
                     {"title", ctx.table.title},
                     {"section_title", ctx.table.section_title},
                     {"headers", ctx.table.headers},
                     {"rows", std::move(rows)}}},
                   {"passages", std::move(passages)}});
  }
  return out;
}

json text_pair_corpus_to_json(const std::vector<PassagePair>& pairs) {
  json out = json::array();
  for (const auto& pair : pairs) {
    json a = passage_body(pair.first);
    a["id"] = pair.first.id;
    json b = passage_body(pair.second);
    b["id"] = pair.second.id;
    out.push_back({{"first", std::move(a)}, {"second", std::move(b)}});
  }
  return out;
}

std::string flatten_table_row(const Table& table, std::size_t row_index) {
  if (row_index >= table.rows.size()) {
    throw IndexOutOfRange("row " + std::to_string(row_index) + " of table '" + table.id + "' with " +
                          std::to_string(table.rows.size()) + " rows");
  }
  std::string out = table.title + " ; " + table.section_title;
  const auto& row = table.rows[row_index];
  for (std::size_t c = 0; c < row.size() && c < table.headers.size(); ++c) {
    const std::string cell = normalize_cell(row[c].raw);
    if (cell.empty()) continue;
    out += " ; " + table.headers[c] + " is " + cell;
  }
  out += " .";
  return out;
}

std::optional<FlattenedRow> parse_flattened_row(std::string_view text) {
  constexpr std::string_view kSep = " ; ";
  if (text.size() < 2 || text.substr(text.size() - 2) != " .") return std::nullopt;
  std::string_view body = text.substr(0, text.size() - 2);
  std::vector<std::string_view> parts;
  std::size_t pos = 0;
  while (true) {
    std::size_t next = body.find(kSep, pos);
    if (next == std::string_view::npos) {
      parts.push_back(body.substr(pos));
      break;
    }
    parts.push_back(body.substr(pos, next - pos));
    pos = next + kSep.size();
  }
  if (parts.size() < 2) return std::nullopt;
  FlattenedRow row;
  row.title = std::string(parts[0]);
  row.section_title = std::string(parts[1]);
  for (std::size_t k = 2; k < parts.size(); ++k) {
    std::size_t is = parts[k].find(" is ");
    if (is == std::string_view::npos) return std::nullopt;
    row.facts.push_back({std::string(parts[k].substr(0, is)), std::string(parts[k].substr(is + 4))});
  }
  return row;
}

}  // namespace mhqg
