#include "mhqg/graph.hpp"

#include "mhqg/error.hpp"
#include "mhqg/hash.hpp"

#include <algorithm>
#include <functional>
#include <future>
#include <map>
#include <set>

using nlohmann::json;

namespace mhqg {

// ---- enums ----

std::string_view to_string(GraphKind k) {
  switch (k) {
    case GraphKind::TableOnly: return "TABLE_ONLY";
    case GraphKind::TextOnly: return "TEXT_ONLY";
    case GraphKind::TableToText: return "TABLE_TO_TEXT";
    case GraphKind::TextToTable: return "TEXT_TO_TABLE";
    case GraphKind::TextToText: return "TEXT_TO_TEXT";
    case GraphKind::Comparison: return "COMPARISON";
  }
  return "TEXT_ONLY";
}

std::string_view to_snake_case(GraphKind k) {
  switch (k) {
    case GraphKind::TableOnly: return "table_only";
    case GraphKind::TextOnly: return "text_only";
    case GraphKind::TableToText: return "table_to_text";
    case GraphKind::TextToTable: return "text_to_table";
    case GraphKind::TextToText: return "text_to_text";
    case GraphKind::Comparison: return "comparison";
  }
  return "text_only";
}

std::optional<GraphKind> graph_kind_from_string(std::string_view s) {
  const std::string lower = ascii_lower(s);
  for (GraphKind k : kAllGraphKinds) {
    if (lower == to_snake_case(k) || lower == ascii_lower(to_string(k))) return k;
  }
  return std::nullopt;
}

bool is_table_kind(GraphKind k) {
  return k == GraphKind::TableOnly || k == GraphKind::TableToText || k == GraphKind::TextToTable;
}

std::string_view to_string(ValueKind k) {
  switch (k) {
    case ValueKind::Table: return "TABLE";
    case ValueKind::Text: return "TEXT";
    case ValueKind::Entity: return "ENTITY";
    case ValueKind::EntitySet: return "ENTITY_SET";
    case ValueKind::Question: return "QUESTION";
    case ValueKind::Sentence: return "SENTENCE";
    case ValueKind::QaPair: return "QA_PAIR";
  }
  return "TEXT";
}

ExecStats& ExecStats::operator+=(const ExecStats& o) {
  branches += o.branches;
  rejected += o.rejected;
  unsupported += o.unsupported;
  undecidable += o.undecidable;
  return *this;
}

// ---- signatures ----

namespace {

std::optional<std::string> string_param(const OperatorNode& n, const char* key, const char* fallback) {
  if (!n.params.is_object() || !n.params.contains(key)) return std::string(fallback);
  if (!n.params.at(key).is_string()) return std::nullopt;
  return n.params.at(key).get<std::string>();
}

std::optional<ValueKind> context_kind(const OperatorNode& n) {
  auto ctx = string_param(n, "context", "text");
  if (!ctx) return std::nullopt;
  if (*ctx == "text") return ValueKind::Text;
  if (*ctx == "table_row") return ValueKind::Table;
  return std::nullopt;
}

std::optional<ValueKind> reserved_kind(std::string_view id) {
  if (id == kInputTable) return ValueKind::Table;
  if (id == kInputText || id == kInputText1 || id == kInputText2) return ValueKind::Text;
  return std::nullopt;
}

const std::vector<std::string>& operator_names() {
  static const std::vector<std::string> names = {"FindBridge", "FindComEnt",  "ExtractEntities", "SelectCells",
                                                 "MatchProperty", "QGwithAns", "QGwithEnt",       "DescribeEnt",
                                                 "QuesToSent", "BridgeBlend", "CompBlend"};
  return names;
}

}  // namespace

std::vector<std::string> known_operators() { return operator_names(); }

std::optional<OpSignature> signature_of(const OperatorNode& node) {
  using V = ValueKind;
  const std::string& op = node.op;
  if (op == "FindBridge") {
    auto mode = string_param(node, "mode", "table_text");
    if (!mode) return std::nullopt;
    if (*mode == "table_text") return OpSignature{{V::Table, V::Text}, V::EntitySet};
    if (*mode == "text_text") return OpSignature{{V::Text, V::Text}, V::EntitySet};
    return std::nullopt;
  }
  if (op == "FindComEnt" || op == "ExtractEntities") return OpSignature{{V::Text}, V::EntitySet};
  if (op == "SelectCells") return OpSignature{{V::Table}, V::EntitySet};
  if (op == "MatchProperty") return OpSignature{{V::EntitySet, V::EntitySet}, V::EntitySet};
  if (op == "QGwithAns" || op == "QGwithEnt") {
    auto ctx = context_kind(node);
    if (!ctx) return std::nullopt;
    return OpSignature{{*ctx, V::Entity}, V::Question};
  }
  if (op == "DescribeEnt") return OpSignature{{V::Table, V::Entity}, V::Sentence};
  if (op == "QuesToSent") return OpSignature{{V::Question}, V::Sentence};
  if (op == "BridgeBlend") return OpSignature{{V::Question, V::Sentence, V::Entity}, V::QaPair};
  if (op == "CompBlend") return OpSignature{{V::Question, V::Question, V::Entity}, V::QaPair};
  return std::nullopt;
}

// ---- validation ----

namespace {

bool kinds_compatible(ValueKind producer, ValueKind port) {
  // An ENTITY_SET feeding an ENTITY port is a fan-out edge.
  return producer == port || (producer == ValueKind::EntitySet && port == ValueKind::Entity);
}

// Strongly connected components that contain a cycle, each sorted by node index.
std::vector<std::vector<std::size_t>> cyclic_components(std::size_t n, const std::vector<std::vector<std::size_t>>& adj) {
  std::vector<int> index(n, -1), low(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<std::size_t> stack;
  std::vector<std::vector<std::size_t>> out;
  int counter = 0;
  std::function<void(std::size_t)> strong = [&](std::size_t v) {
    index[v] = low[v] = counter++;
    stack.push_back(v);
    on_stack[v] = true;
    for (std::size_t w : adj[v]) {
      if (index[w] < 0) {
        strong(w);
        low[v] = std::min(low[v], low[w]);
      } else if (on_stack[w]) {
        low[v] = std::min(low[v], index[w]);
      }
    }
    if (low[v] == index[v]) {
      std::vector<std::size_t> comp;
      std::size_t w = 0;
      do {
        w = stack.back();
        stack.pop_back();
        on_stack[w] = false;
        comp.push_back(w);
      } while (w != v);
      const bool self_loop = std::find(adj[v].begin(), adj[v].end(), v) != adj[v].end();
      if (comp.size() > 1 || self_loop) {
        std::sort(comp.begin(), comp.end());
        out.push_back(std::move(comp));
      }
    }
  };
  for (std::size_t v = 0; v < n; ++v) {
    if (index[v] < 0) strong(v);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::vector<std::string> validate(const ReasoningGraph& g) {
  std::vector<std::string> v;
  std::map<std::string, std::size_t> ids;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    const auto& n = g.nodes[i];
    if (n.id.empty() || n.id[0] == '$') v.push_back("invalid node id '" + n.id + "'");
    if (!ids.emplace(n.id, i).second) v.push_back("duplicate node id '" + n.id + "'");
  }
  std::vector<std::optional<OpSignature>> sigs(g.nodes.size());
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    const auto& n = g.nodes[i];
    sigs[i] = signature_of(n);
    if (sigs[i]) continue;
    const auto& names = operator_names();
    if (std::find(names.begin(), names.end(), n.op) == names.end()) {
      v.push_back("unknown operator '" + n.op + "' at node '" + n.id + "'");
    } else {
      v.push_back("invalid params at node '" + n.id + "'");
    }
  }

  std::vector<std::vector<std::size_t>> port_edges(g.nodes.size());
  std::vector<std::vector<std::size_t>> adj(g.nodes.size());
  std::vector<bool> has_consumer(g.nodes.size(), false);
  bool uses_table_inputs = false;
  bool uses_pair_inputs = false;
  std::vector<std::map<std::size_t, std::size_t>> port_count(g.nodes.size());

  for (const Edge& e : g.edges) {
    std::optional<ValueKind> from_kind = reserved_kind(e.from);
    std::optional<std::size_t> from_node;
    if (from_kind) {
      if (e.from == kInputTable || e.from == kInputText) uses_table_inputs = true;
      if (e.from == kInputText1 || e.from == kInputText2) uses_pair_inputs = true;
    } else if (auto it = ids.find(e.from); it != ids.end()) {
      from_node = it->second;
      if (sigs[it->second]) from_kind = sigs[it->second]->output;
    } else {
      v.push_back("dangling edge: unknown source '" + e.from + "' -> '" + e.to + "'");
    }
    auto to_it = ids.find(e.to);
    if (to_it == ids.end()) {
      v.push_back("dangling edge: '" + e.from + "' -> unknown target '" + e.to + "'");
      continue;
    }
    const std::size_t to = to_it->second;
    if (from_node) {
      adj[*from_node].push_back(to);
      has_consumer[*from_node] = true;
    }
    if (!sigs[to]) continue;
    if (e.port >= sigs[to]->inputs.size()) {
      v.push_back("port out of range: '" + e.to + "'[" + std::to_string(e.port) + "]");
      continue;
    }
    ++port_count[to][e.port];
    const ValueKind want = sigs[to]->inputs[e.port];
    if (from_kind && !kinds_compatible(*from_kind, want)) {
      v.push_back("kind mismatch: '" + e.from + "' (" + std::string(to_string(*from_kind)) + ") -> '" + e.to + "'[" +
                  std::to_string(e.port) + "] (" + std::string(to_string(want)) + ")");
    }
  }

  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    if (!sigs[i]) continue;
    for (std::size_t p = 0; p < sigs[i]->inputs.size(); ++p) {
      const std::size_t c = port_count[i].count(p) ? port_count[i][p] : 0;
      if (c == 0) v.push_back("missing input: '" + g.nodes[i].id + "'[" + std::to_string(p) + "]");
      if (c > 1) v.push_back("duplicate input: '" + g.nodes[i].id + "'[" + std::to_string(p) + "]");
    }
  }

  for (const auto& comp : cyclic_components(g.nodes.size(), adj)) {
    std::string s = "cycle: ";
    for (std::size_t k = 0; k < comp.size(); ++k) {
      if (k) s += ",";
      s += g.nodes[comp[k]].id;
    }
    v.push_back(s);
  }

  if (g.nodes.empty()) {
    v.push_back("empty graph");
  } else {
    std::vector<std::size_t> sinks;
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
      if (!has_consumer[i]) sinks.push_back(i);
    }
    if (sinks.size() != 1) {
      std::string s = "sink: expected exactly one sink node, found " + std::to_string(sinks.size());
      v.push_back(s);
    } else if (sigs[sinks[0]] && sigs[sinks[0]]->output != ValueKind::Question &&
               sigs[sinks[0]]->output != ValueKind::QaPair) {
      v.push_back("sink: '" + g.nodes[sinks[0]].id + "' produces " + std::string(to_string(sigs[sinks[0]]->output)) +
                  ", expected QUESTION or QA_PAIR");
    }
  }
  if (uses_table_inputs && uses_pair_inputs) v.push_back("mixed input modalities: table inputs and passage-pair inputs");
  return v;
}

// ---- builtins ----

namespace {

OperatorNode node(std::string id, std::string op, json params = json::object()) {
  return {std::move(id), std::move(op), std::move(params)};
}

}  // namespace

ReasoningGraph builtin(GraphKind kind) {
  ReasoningGraph g;
  g.name = kind;
  const std::string table(kInputTable), text(kInputText), text1(kInputText1), text2(kInputText2);
  switch (kind) {
    case GraphKind::TableToText:
      g.nodes = {node("find_bridge", "FindBridge", {{"mode", "table_text"}}),
                 node("qg_text", "QGwithEnt", {{"context", "text"}}), node("describe", "DescribeEnt"),
                 node("blend", "BridgeBlend")};
      g.edges = {{table, "find_bridge", 0},  {text, "find_bridge", 1},    {text, "qg_text", 0},
                 {"find_bridge", "qg_text", 1}, {table, "describe", 0}, {"find_bridge", "describe", 1},
                 {"qg_text", "blend", 0},    {"describe", "blend", 1},  {"find_bridge", "blend", 2}};
      break;
    case GraphKind::TextToTable:
      g.nodes = {node("find_bridge", "FindBridge", {{"mode", "table_text"}}),
                 node("qg_table", "QGwithEnt", {{"context", "table_row"}}),
                 node("qg_text", "QGwithAns", {{"context", "text"}}), node("to_sent", "QuesToSent"),
                 node("blend", "BridgeBlend")};
      g.edges = {{table, "find_bridge", 0},   {text, "find_bridge", 1},      {table, "qg_table", 0},
                 {"find_bridge", "qg_table", 1}, {text, "qg_text", 0},        {"find_bridge", "qg_text", 1},
                 {"qg_text", "to_sent", 0},   {"qg_table", "blend", 0},     {"to_sent", "blend", 1},
                 {"find_bridge", "blend", 2}};
      break;
    case GraphKind::TextToText:
      g.nodes = {node("find_bridge", "FindBridge", {{"mode", "text_text"}}),
                 node("qg_first", "QGwithEnt", {{"context", "text"}}),
                 node("qg_second", "QGwithAns", {{"context", "text"}}), node("to_sent", "QuesToSent"),
                 node("blend", "BridgeBlend")};
      g.edges = {{text1, "find_bridge", 0},   {text2, "find_bridge", 1},     {text1, "qg_first", 0},
                 {"find_bridge", "qg_first", 1}, {text2, "qg_second", 0},     {"find_bridge", "qg_second", 1},
                 {"qg_second", "to_sent", 0}, {"qg_first", "blend", 0},     {"to_sent", "blend", 1},
                 {"find_bridge", "blend", 2}};
      break;
    case GraphKind::Comparison:
      g.nodes = {node("com_first", "FindComEnt"),
                 node("com_second", "FindComEnt"),
                 node("match", "MatchProperty"),
                 node("qg_first", "QGwithAns", {{"context", "text"}}),
                 node("qg_second", "QGwithAns", {{"context", "text"}}),
                 node("blend", "CompBlend")};
      g.edges = {{text1, "com_first", 0},   {text2, "com_second", 0},  {"com_first", "match", 0},
                 {"com_second", "match", 1}, {text1, "qg_first", 0},    {"match", "qg_first", 1},
                 {text2, "qg_second", 0},    {"match", "qg_second", 1}, {"qg_first", "blend", 0},
                 {"qg_second", "blend", 1},  {"match", "blend", 2}};
      break;
    case GraphKind::TableOnly:
      g.nodes = {node("select_cells", "SelectCells"), node("qg", "QGwithAns", {{"context", "table_row"}})};
      g.edges = {{table, "select_cells", 0}, {table, "qg", 0}, {"select_cells", "qg", 1}};
      break;
    case GraphKind::TextOnly:
      g.nodes = {node("entities", "ExtractEntities"), node("qg", "QGwithAns", {{"context", "text"}})};
      g.edges = {{text1, "entities", 0}, {text1, "qg", 0}, {"entities", "qg", 1}};
      break;
  }
  return g;
}

// ---- serialization ----

json graph_to_json(const ReasoningGraph& g) {
  json nodes = json::array();
  for (const auto& n : g.nodes) nodes.push_back({{"id", n.id}, {"op", n.op}, {"params", n.params}});
  json edges = json::array();
  for (const auto& e : g.edges) edges.push_back({{"from", e.from}, {"to", e.to}, {"port", e.port}});
  return {{"name", to_string(g.name)}, {"nodes", std::move(nodes)}, {"edges", std::move(edges)}};
}

ReasoningGraph graph_from_json(const json& j) {
  try {
    ReasoningGraph g;
    auto kind = graph_kind_from_string(j.at("name").get<std::string>());
    if (!kind) throw InvalidGraph("unknown graph name '" + j.at("name").get<std::string>() + "'");
    g.name = *kind;
    for (const auto& n : j.at("nodes")) {
      OperatorNode node{n.at("id").get<std::string>(), n.at("op").get<std::string>(),
                        n.contains("params") ? n.at("params") : json::object()};
      g.nodes.push_back(std::move(node));
    }
    for (const auto& e : j.at("edges")) {
      g.edges.push_back({e.at("from").get<std::string>(), e.at("to").get<std::string>(), e.at("port").get<std::size_t>()});
    }
    return g;
  } catch (const json::exception& e) {
    throw InvalidGraph(std::string("malformed graph JSON: ") + e.what());
  }
}

// ---- execution ----

std::string candidate_id(GraphKind kind, std::string_view question, std::string_view answer,
                         const std::vector<std::string>& sources) {
  std::string key(to_string(kind));
  key += '\x1f';
  key += question;
  key += '\x1f';
  key += answer;
  for (const auto& s : sources) {
    key += '\x1f';
    key += s;
  }
  return digest(key);
}

namespace {

using Element = std::variant<BridgeEntity, EntityMention, CellLocus, ComparativeEntity, PropertyMatch>;

struct QaPair {
  std::string question;
  std::string answer;
};

struct Sentence {
  std::string text;
};

using Value = std::variant<const LinkedTableContext*, const Passage*, Element, std::vector<Element>, SingleHopQ, Sentence, QaPair>;

json mention_json(const EntityMention& m) {
  return {{"surface", m.surface}, {"type", to_string(m.etype)}, {"span", {m.span.begin, m.span.end}}, {"source", m.source}};
}

json element_json(const Element& e) {
  return std::visit(
      [](const auto& x) -> json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, BridgeEntity>) {
          json a = x.cell() ? json{{"row", x.cell()->row}, {"col", x.cell()->col}, {"raw", x.cell()->raw}}
                            : mention_json(std::get<EntityMention>(x.locus_a));
          return {{"bridge", mention_json(x.mention)}, {"locus_a", std::move(a)}};
        } else if constexpr (std::is_same_v<T, EntityMention>) {
          return {{"mention", mention_json(x)}};
        } else if constexpr (std::is_same_v<T, CellLocus>) {
          return {{"cell", {{"row", x.row}, {"col", x.col}, {"raw", x.raw}}}};
        } else if constexpr (std::is_same_v<T, ComparativeEntity>) {
          return {{"comparative", mention_json(x.mention)}, {"property", to_string(x.property)}, {"subject", x.subject}};
        } else {
          return {{"match",
                   {{"property", to_string(x.first.property)},
                    {"first", mention_json(x.first.mention)},
                    {"second", mention_json(x.second.mention)}}}};
        }
      },
      e);
}

json value_json(const Value& v) {
  return std::visit(
      [](const auto& x) -> json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, const LinkedTableContext*>) {
          return {{"table", x->table.id}};
        } else if constexpr (std::is_same_v<T, const Passage*>) {
          return {{"passage", x->id}, {"text", x->text}};
        } else if constexpr (std::is_same_v<T, Element>) {
          return element_json(x);
        } else if constexpr (std::is_same_v<T, std::vector<Element>>) {
          json arr = json::array();
          for (const auto& e : x) arr.push_back(element_json(e));
          return arr;
        } else if constexpr (std::is_same_v<T, SingleHopQ>) {
          return {{"question", x.question}, {"answer", x.answer}, {"source", x.source}};
        } else if constexpr (std::is_same_v<T, Sentence>) {
          return {{"sentence", x.text}};
        } else {
          return {{"question", x.question}, {"answer", x.answer}};
        }
      },
      v);
}

std::string value_digest(const Value& v) { return digest(value_json(v).dump()); }

template <typename T>
const T& as(const Value& v, const OperatorNode& n, std::size_t port) {
  if (const T* p = std::get_if<T>(&v)) return *p;
  throw InvalidGraph("node '" + n.id + "': unexpected value on port " + std::to_string(port));
}

const EntityMention& mention_for(const Element& e, const Passage& d, const OperatorNode& n) {
  if (const auto* b = std::get_if<BridgeEntity>(&e)) {
    if (const EntityMention* m = b->mention_in(d.id)) return *m;
  } else if (const auto* m = std::get_if<EntityMention>(&e)) {
    return *m;
  } else if (const auto* c = std::get_if<ComparativeEntity>(&e)) {
    return c->mention;
  } else if (const auto* pm = std::get_if<PropertyMatch>(&e)) {
    if (pm->first.mention.source == d.id) return pm->first.mention;
    if (pm->second.mention.source == d.id) return pm->second.mention;
  }
  throw InvalidGraph("node '" + n.id + "': entity has no locus in passage '" + d.id + "'");
}

const CellLocus& cell_for(const Element& e, const OperatorNode& n) {
  if (const auto* c = std::get_if<CellLocus>(&e)) return *c;
  if (const auto* b = std::get_if<BridgeEntity>(&e); b && b->cell()) return *b->cell();
  throw InvalidGraph("node '" + n.id + "': entity has no table locus");
}

struct Executor {
  const ReasoningGraph& g;
  const Backend& backend;
  const ExecOptions& opts;
  const EntityTagger& tagger;
  const Gazetteers& gaz;
  const std::vector<ComparisonTemplate>& templates;
  ExecStats& stats;

  std::vector<std::size_t> order;                       // topological order of node indices
  std::vector<std::vector<const Edge*>> inputs;          // per node, by port
  std::vector<std::vector<std::optional<std::size_t>>> producer;  // per node/port, producer node index
  std::vector<std::vector<bool>> fanout;                 // per node/port
  std::vector<OpSignature> sigs;
  std::size_t sink = 0;

  // Per-run state.
  std::map<std::string, Value, std::less<>> reserved;
  std::vector<std::string> sources;
  std::vector<std::optional<Value>> values;
  std::map<std::size_t, std::size_t> bound;
  std::vector<ProvenanceStep> trail;
  std::size_t budget = 0;
  std::vector<CandidateQA>* out = nullptr;

  void prepare() {
    std::map<std::string, std::size_t> ids;
    for (std::size_t i = 0; i < g.nodes.size(); ++i) ids[g.nodes[i].id] = i;
    sigs.clear();
    for (const auto& n : g.nodes) sigs.push_back(*signature_of(n));
    inputs.assign(g.nodes.size(), {});
    producer.assign(g.nodes.size(), {});
    fanout.assign(g.nodes.size(), {});
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
      inputs[i].assign(sigs[i].inputs.size(), nullptr);
      producer[i].assign(sigs[i].inputs.size(), std::nullopt);
      fanout[i].assign(sigs[i].inputs.size(), false);
    }
    std::vector<std::size_t> indegree(g.nodes.size(), 0);
    std::vector<std::vector<std::size_t>> adj(g.nodes.size());
    std::vector<bool> has_consumer(g.nodes.size(), false);
    for (const Edge& e : g.edges) {
      const std::size_t to = ids.at(e.to);
      inputs[to][e.port] = &e;
      if (auto it = ids.find(e.from); it != ids.end()) {
        producer[to][e.port] = it->second;
        fanout[to][e.port] =
            sigs[it->second].output == ValueKind::EntitySet && sigs[to].inputs[e.port] == ValueKind::Entity;
        adj[it->second].push_back(to);
        ++indegree[to];
        has_consumer[it->second] = true;
      }
    }
    // Kahn's algorithm, always taking the lowest ready index for a stable order.
    std::set<std::size_t> ready;
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
      if (indegree[i] == 0) ready.insert(i);
    }
    while (!ready.empty()) {
      const std::size_t v = *ready.begin();
      ready.erase(ready.begin());
      order.push_back(v);
      for (std::size_t w : adj[v]) {
        if (--indegree[w] == 0) ready.insert(w);
      }
    }
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
      if (!has_consumer[i]) sink = i;
    }
  }

  Value input_value(std::size_t node, std::size_t port) const {
    const Edge* e = inputs[node][port];
    if (auto p = producer[node][port]) {
      const Value& v = *values[*p];
      if (fanout[node][port]) return std::get<std::vector<Element>>(v)[bound.at(*p)];
      return v;
    }
    return reserved.at(e->from);
  }

  Value apply(std::size_t idx, const std::vector<Value>& in) const {
    const OperatorNode& n = g.nodes[idx];
    const std::string& op = n.op;
    auto elements = [](auto&& range) {
      std::vector<Element> out;
      for (auto& x : range) out.emplace_back(std::move(x));
      return out;
    };
    if (op == "FindBridge") {
      const Passage& b = *as<const Passage*>(in[1], n, 1);
      if (sigs[idx].inputs[0] == ValueKind::Table) {
        return elements(find_bridge(*as<const LinkedTableContext*>(in[0], n, 0), b, tagger, gaz));
      }
      return elements(find_bridge(*as<const Passage*>(in[0], n, 0), b, tagger, gaz));
    }
    if (op == "FindComEnt") return elements(find_com_ent(*as<const Passage*>(in[0], n, 0), tagger));
    if (op == "ExtractEntities") {
      const Passage& d = *as<const Passage*>(in[0], n, 0);
      return elements(extract_entities(d.text, tagger, d.id));
    }
    if (op == "SelectCells") {
      const Table& t = as<const LinkedTableContext*>(in[0], n, 0)->table;
      std::vector<Element> out;
      for (std::size_t r = 0; r < t.rows.size(); ++r) {
        for (std::size_t c = 0; c < t.rows[r].size(); ++c) {
          if (!t.rows[r][c].linked_passage_ids.empty() && !t.rows[r][c].raw.empty()) {
            out.emplace_back(CellLocus{r, c, t.rows[r][c].raw});
          }
        }
      }
      return out;
    }
    if (op == "MatchProperty") {
      auto comps = [&](std::size_t port) {
        std::vector<ComparativeEntity> out;
        for (const Element& e : as<std::vector<Element>>(in[port], n, port)) {
          const auto* c = std::get_if<ComparativeEntity>(&e);
          if (!c) throw InvalidGraph("node '" + n.id + "': MatchProperty needs comparative entities");
          out.push_back(*c);
        }
        return out;
      };
      return elements(match_properties(comps(0), comps(1)));
    }
    if (op == "QGwithAns" || op == "QGwithEnt") {
      const Element& e = as<Element>(in[1], n, 1);
      const bool ans = op == "QGwithAns";
      if (sigs[idx].inputs[0] == ValueKind::Table) {
        const Table& t = as<const LinkedTableContext*>(in[0], n, 0)->table;
        const CellLocus& cell = cell_for(e, n);
        return ans ? qg_with_ans(t, cell, backend) : qg_with_ent(t, cell, backend, opts.qg_attempts);
      }
      const Passage& d = *as<const Passage*>(in[0], n, 0);
      const EntityMention& m = mention_for(e, d, n);
      return ans ? qg_with_ans(d, m, backend) : qg_with_ent(d, m, backend, opts.qg_attempts);
    }
    if (op == "DescribeEnt") {
      const auto* b = std::get_if<BridgeEntity>(&as<Element>(in[1], n, 1));
      if (!b) throw InvalidGraph("node '" + n.id + "': DescribeEnt needs a bridge entity");
      return Sentence{describe_ent(as<const LinkedTableContext*>(in[0], n, 0)->table, *b, backend)};
    }
    if (op == "QuesToSent") return Sentence{ques_to_sent(as<SingleHopQ>(in[0], n, 0))};
    if (op == "BridgeBlend") {
      const SingleHopQ& q = as<SingleHopQ>(in[0], n, 0);
      const auto* b = std::get_if<BridgeEntity>(&as<Element>(in[2], n, 2));
      if (!b) throw InvalidGraph("node '" + n.id + "': BridgeBlend needs a bridge entity");
      return QaPair{bridge_blend(q, as<Sentence>(in[1], n, 1).text, *b, backend), q.answer};
    }
    if (op == "CompBlend") {
      const SingleHopQ& q1 = as<SingleHopQ>(in[0], n, 0);
      const SingleHopQ& q2 = as<SingleHopQ>(in[1], n, 1);
      const auto* m = std::get_if<PropertyMatch>(&as<Element>(in[2], n, 2));
      if (!m) throw InvalidGraph("node '" + n.id + "': CompBlend needs a property match");
      const auto& e1 = m->first.subject;
      const auto& e2 = m->second.subject;
      auto options = comp_blend(q1, q2, m->first.property, e1, e2, q1.answer, q2.answer, templates);
      const std::string key = e1 + '\x1f' + e2 + '\x1f' + std::string(to_string(m->first.property));
      const std::size_t pick = fnv1a64(key, fnv1a64(std::to_string(opts.seed))) % options.size();
      return QaPair{options[pick].question, options[pick].answer};
    }
    throw InvalidGraph("unknown operator '" + op + "'");
  }

  void emit() {
    const Value& v = *values[sink];
    std::string q, a;
    if (const auto* s = std::get_if<SingleHopQ>(&v)) {
      q = s->question;
      a = s->answer;
    } else if (const auto* p = std::get_if<QaPair>(&v)) {
      q = p->question;
      a = p->answer;
    }
    q = trim(q);
    a = trim(a);
    if (q.empty() || q.back() != '?' || q.find("[MASK]") != std::string::npos || a.empty()) {
      ++stats.rejected;
      return;
    }
    CandidateQA c;
    c.question = std::move(q);
    c.answer = std::move(a);
    c.kind = g.name;
    c.sources = sources;
    c.provenance = trail;
    c.id = candidate_id(c.kind, c.question, c.answer, c.sources);
    out->push_back(std::move(c));
  }

  void step(std::size_t ti) {
    if (ti == order.size()) {
      emit();
      return;
    }
    const std::size_t idx = order[ti];
    for (std::size_t p = 0; p < inputs[idx].size(); ++p) {
      if (!fanout[idx][p]) continue;
      const std::size_t prod = *producer[idx][p];
      if (bound.count(prod)) continue;
      const auto& set = std::get<std::vector<Element>>(*values[prod]);
      for (std::size_t k = 0; k < set.size() && budget > 0; ++k) {
        --budget;
        ++stats.branches;
        bound[prod] = k;
        step(ti);
      }
      bound.erase(prod);
      return;
    }

    std::vector<Value> in;
    std::vector<std::string> in_digests;
    for (std::size_t p = 0; p < inputs[idx].size(); ++p) {
      in.push_back(input_value(idx, p));
      in_digests.push_back(value_digest(in.back()));
    }
    Value result;
    try {
      result = apply(idx, in);
    } catch (const RejectedGeneration&) {
      ++stats.rejected;
      return;
    } catch (const ProtocolError&) {
      ++stats.rejected;
      return;
    } catch (const UnsupportedQuestionForm&) {
      ++stats.unsupported;
      return;
    } catch (const UndecidableAnswer&) {
      ++stats.undecidable;
      return;
    }
    trail.push_back({g.nodes[idx].id, g.nodes[idx].op, std::move(in_digests), value_digest(result)});
    values[idx] = std::move(result);
    step(ti + 1);
    values[idx].reset();
    trail.pop_back();
  }

  void run(std::vector<CandidateQA>& sink_out) {
    out = &sink_out;
    values.assign(g.nodes.size(), std::nullopt);
    bound.clear();
    trail.clear();
    step(0);
  }
};

}  // namespace

std::vector<CandidateQA> execute(const ReasoningGraph& g, GraphInput input, const Backend& backend,
                                 const ExecOptions& opts, ExecStats* stats_out) {
  if (auto v = validate(g); !v.empty()) {
    std::string msg = "graph " + std::string(to_string(g.name)) + " is invalid:";
    for (const auto& s : v) msg += "\n  " + s;
    throw InvalidGraph(msg);
  }
  if (opts.max_fanout < 1) throw PreconditionError("max_fanout must be >= 1");

  bool wants_table = false;
  bool wants_pair = false;
  bool wants_text = false;
  bool wants_text1 = false;
  bool wants_text2 = false;
  for (const Edge& e : g.edges) {
    if (e.from == kInputTable) wants_table = true;
    if (e.from == kInputText) wants_text = true;
    if (e.from == kInputText1) wants_text1 = true;
    if (e.from == kInputText2) wants_text2 = true;
  }
  wants_table = wants_table || wants_text;
  wants_pair = wants_text1 || wants_text2;
  if (!wants_table && !wants_pair) {
    wants_table = is_table_kind(g.name);
    wants_pair = !wants_table;
  }

  ExecStats local;
  Executor ex{g,
              backend,
              opts,
              opts.tagger ? *opts.tagger : default_tagger(),
              opts.gazetteers ? *opts.gazetteers : default_gazetteers(),
              opts.templates ? *opts.templates : default_comparison_templates(),
              local};
  ex.prepare();
  ex.budget = opts.max_fanout;

  std::vector<CandidateQA> out;
  if (const auto* const* ctx = std::get_if<const LinkedTableContext*>(&input)) {
    if (!wants_table || wants_pair) {
      throw ModalityMismatch("graph " + std::string(to_string(g.name)) + " needs a passage pair, got a table");
    }
    ex.reserved[std::string(kInputTable)] = *ctx;
    if (wants_text) {
      for (const Passage* p : (*ctx)->linked_passages()) {
        ex.reserved[std::string(kInputText)] = p;
        ex.sources = {(*ctx)->table.id, p->id};
        ex.run(out);
      }
    } else {
      ex.sources = {(*ctx)->table.id};
      ex.run(out);
    }
  } else {
    const PassagePair* pair = std::get<const PassagePair*>(input);
    if (!wants_pair || wants_table) {
      throw ModalityMismatch("graph " + std::string(to_string(g.name)) + " needs a linked table, got a passage pair");
    }
    ex.reserved[std::string(kInputText1)] = &pair->first;
    ex.reserved[std::string(kInputText2)] = &pair->second;
    if (wants_text1) ex.sources.push_back(pair->first.id);
    if (wants_text2) ex.sources.push_back(pair->second.id);
    ex.run(out);
  }
  if (stats_out) *stats_out += local;
  return out;
}

std::vector<CandidateQA> generate_dataset(const std::vector<GraphKind>& kinds, const Corpus& corpus,
                                          const Backend& backend, const GenerateOptions& opts, ExecStats* stats) {
  if (kinds.empty()) throw PreconditionError("generate_dataset: no graph kinds");
  std::vector<ReasoningGraph> graphs;
  for (GraphKind k : kinds) graphs.push_back(builtin(k));

  const std::size_t n_items = corpus.size();
  struct ItemResult {
    std::vector<CandidateQA> cands;
    ExecStats stats;
    std::string log;
  };
  auto run_item = [&](std::size_t i) {
    ItemResult r;
    GraphInput input = i < corpus.tables.size() ? GraphInput(&corpus.tables[i])
                                                : GraphInput(&corpus.pairs[i - corpus.tables.size()]);
    const bool is_table = i < corpus.tables.size();
    for (std::size_t k = 0; k < graphs.size(); ++k) {
      if (is_table_kind(kinds[k]) != is_table) continue;
      try {
        auto c = execute(graphs[k], input, backend, opts.exec, &r.stats);
        r.cands.insert(r.cands.end(), std::make_move_iterator(c.begin()), std::make_move_iterator(c.end()));
      } catch (const BackendUnavailable&) {
        throw;
      } catch (const Error& e) {
        r.log += "item " + std::to_string(i) + " " + std::string(to_string(kinds[k])) + ": " + e.what() + "\n";
      }
    }
    return r;
  };

  std::vector<ItemResult> results(n_items);
  const unsigned threads = std::max(1u, opts.threads);
  if (threads == 1 || n_items < 2) {
    for (std::size_t i = 0; i < n_items; ++i) results[i] = run_item(i);
  } else {
    for (std::size_t start = 0; start < n_items; start += threads) {
      std::vector<std::future<ItemResult>> futures;
      for (std::size_t i = start; i < std::min(n_items, start + threads); ++i) {
        futures.push_back(std::async(std::launch::async, run_item, i));
      }
      for (std::size_t j = 0; j < futures.size(); ++j) results[start + j] = futures[j].get();
    }
  }

  std::vector<CandidateQA> out;
  for (auto& r : results) {
    if (opts.log && !r.log.empty()) *opts.log << r.log;
    if (stats) *stats += r.stats;
    out.insert(out.end(), std::make_move_iterator(r.cands.begin()), std::make_move_iterator(r.cands.end()));
  }
  return out;
}

}  // namespace mhqg
