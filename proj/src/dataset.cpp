#include "mhqg/dataset.hpp"

#include "mhqg/error.hpp"

#include <fstream>
#include <sstream>

namespace mhqg {

nlohmann::ordered_json candidate_to_json(const CandidateQA& c) {
  nlohmann::ordered_json prov = nlohmann::ordered_json::array();
  for (const auto& p : c.provenance) {
    prov.push_back({{"node", p.node}, {"op", p.op}, {"inputs", p.inputs}, {"output", p.output}});
  }
  nlohmann::ordered_json j;
  j["id"] = c.id;
  j["question"] = c.question;
  j["answer"] = c.answer;
  j["kind"] = to_string(c.kind);
  j["sources"] = c.sources;
  j["perplexity"] = c.perplexity ? nlohmann::ordered_json(*c.perplexity) : nlohmann::ordered_json(nullptr);
  j["provenance"] = std::move(prov);
  return j;
}

CandidateQA candidate_from_json(const nlohmann::json& j, std::size_t line_index) {
  auto bad = [&](const std::string& what) { return MalformedInput(line_index, what); };
  if (!j.is_object()) throw bad("record is not an object");
  auto str = [&](const char* key) {
    if (!j.contains(key) || !j.at(key).is_string()) throw bad(std::string("missing string field \"") + key + "\"");
    return j.at(key).get<std::string>();
  };
  CandidateQA c;
  c.id = str("id");
  c.question = str("question");
  c.answer = str("answer");
  auto kind = graph_kind_from_string(str("kind"));
  if (!kind) throw bad("unknown kind");
  c.kind = *kind;
  if (trim(c.question).empty() || trim(c.question).back() != '?') throw bad("question must end with '?'");
  if (trim(c.answer).empty()) throw bad("empty answer");
  if (!j.contains("sources") || !j.at("sources").is_array()) throw bad("missing \"sources\" array");
  for (const auto& s : j.at("sources")) {
    if (!s.is_string()) throw bad("source is not a string");
    c.sources.push_back(s.get<std::string>());
  }
  if (j.contains("perplexity") && !j.at("perplexity").is_null()) {
    if (!j.at("perplexity").is_number()) throw bad("perplexity is not a number");
    c.perplexity = j.at("perplexity").get<double>();
  }
  if (j.contains("provenance")) {
    if (!j.at("provenance").is_array()) throw bad("provenance is not an array");
    for (const auto& p : j.at("provenance")) {
      try {
        c.provenance.push_back({p.at("node").get<std::string>(), p.at("op").get<std::string>(),
                                p.at("inputs").get<std::vector<std::string>>(), p.at("output").get<std::string>()});
      } catch (const nlohmann::json::exception&) {
        throw bad("malformed provenance step");
      }
    }
  }
  return c;
}

std::string to_jsonl(const std::vector<CandidateQA>& cands) {
  std::string out;
  for (const auto& c : cands) {
    out += candidate_to_json(c).dump();
    out += '\n';
  }
  return out;
}

std::vector<CandidateQA> parse_jsonl(std::string_view content) {
  std::vector<CandidateQA> out;
  std::size_t line_index = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    std::size_t nl = content.find('\n', pos);
    if (nl == std::string_view::npos) nl = content.size();
    std::string_view line = content.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!trim(line).empty()) {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const nlohmann::json::parse_error& e) {
        throw MalformedInput(line_index, std::string("invalid JSON: ") + e.what());
      }
      out.push_back(candidate_from_json(j, line_index));
    }
    ++line_index;
    pos = nl + 1;
  }
  return out;
}

std::vector<CandidateQA> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_jsonl(buf.str());
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

void write_jsonl(const std::filesystem::path& path, const std::vector<CandidateQA>& cands) {
  write_text_file(path, to_jsonl(cands));
}

}  // namespace mhqg
