#pragma once

// Instance JSON format:
//
//   {
//     "nodes":   [{"name": "X1", "domain": 2}, ...],
//     "edges":   [[parent, child], ...],
//     "cpts":    [{"parents": [p, ...], "rows": [[...], ...]}, ...],
//     "reward":  {"node": 6, "means": [0.0, 1.0]},
//     "actions": {"first": 0, "count": 2}
//   }
//
// A CPT may also be given as a bare list of rows; its parents are then the
// node's parents in topological order. Rows follow the mixed-radix parent
// configuration, first parent most significant. "actions" is optional.

#include <cstddef>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "causal_model.hpp"
#include "errors.hpp"
#include "instance_gen.hpp"

namespace cbandit {

using Json = nlohmann::json;

namespace detail {

inline std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t offset) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

/// Byte offset of every value, keyed by JSON pointer. Assumes the text
/// already parsed successfully.
class PositionIndex {
 public:
  explicit PositionIndex(std::string_view text) : text_(text) {
    skip();
    value("");
  }

  /// Offset of the deepest indexed prefix of `pointer`.
  std::size_t offset(std::string pointer) const {
    for (;;) {
      auto it = offsets_.find(pointer);
      if (it != offsets_.end()) return it->second;
      if (pointer.empty()) return 0;
      pointer.erase(pointer.rfind('/'));
    }
  }

 private:
  void skip() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\n' || text_[pos_] == '\r'))
      ++pos_;
  }

  std::string string_token() {
    std::string out;
    ++pos_;
    while (pos_ < text_.size() && text_[pos_] != '"') {
      if (text_[pos_] == '\\') ++pos_;
      if (pos_ < text_.size()) out += text_[pos_++];
    }
    ++pos_;
    return out;
  }

  void value(const std::string& ptr) {
    skip();
    offsets_[ptr] = pos_;
    if (pos_ >= text_.size()) return;
    const char c = text_[pos_];
    if (c == '{') {
      ++pos_;
      skip();
      if (pos_ < text_.size() && text_[pos_] == '}') {
        ++pos_;
        return;
      }
      for (;;) {
        skip();
        const std::string key = string_token();
        skip();
        ++pos_;  // ':'
        value(ptr + "/" + key);
        skip();
        if (pos_ < text_.size() && text_[pos_] == ',') {
          ++pos_;
          continue;
        }
        ++pos_;  // '}'
        return;
      }
    }
    if (c == '[') {
      ++pos_;
      skip();
      if (pos_ < text_.size() && text_[pos_] == ']') {
        ++pos_;
        return;
      }
      for (std::size_t i = 0;; ++i) {
        value(ptr + "/" + std::to_string(i));
        skip();
        if (pos_ < text_.size() && text_[pos_] == ',') {
          ++pos_;
          continue;
        }
        ++pos_;  // ']'
        return;
      }
    }
    if (c == '"') {
      string_token();
      return;
    }
    while (pos_ < text_.size() && std::string_view(",]} \t\r\n").find(text_[pos_]) == std::string_view::npos) ++pos_;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::map<std::string, std::size_t> offsets_;
};

/// Parses text into JSON, mapping syntax errors to line/column.
inline Json parse_json_text(std::string_view text) {
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    const std::size_t at = e.byte > 0 ? e.byte - 1 : 0;
    auto [line, col] = line_column(text, at);
    std::string what = e.what();
    if (auto p = what.find("syntax error"); p != std::string::npos) what = what.substr(p);
    throw ParseError(what, line, col);
  }
}

/// Schema validation helper: every failure names the JSON pointer and the
/// position of the offending value.
class SchemaReader {
 public:
  explicit SchemaReader(std::string_view text) : text_(text), index_(text) {}

  [[noreturn]] void fail(const std::string& pointer, const std::string& msg) const {
    auto [line, col] = line_column(text_, index_.offset(pointer));
    throw ParseError(msg + " (at " + (pointer.empty() ? "/" : pointer) + ")", line, col);
  }

  const Json& field(const Json& obj, const std::string& ptr, const char* key, bool required = true) const {
    static const Json null_json;
    if (!obj.is_object()) fail(ptr, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) {
      if (required) fail(ptr, std::string("missing field \"") + key + "\"");
      return null_json;
    }
    return *it;
  }

  const Json& array(const Json& j, const std::string& ptr) const {
    if (!j.is_array()) fail(ptr, "expected an array");
    return j;
  }

  int integer(const Json& j, const std::string& ptr, int lo, int hi) const {
    if (!j.is_number_integer()) fail(ptr, "expected an integer");
    const auto v = j.get<long long>();
    if (v < lo || v > hi) fail(ptr, "integer " + std::to_string(v) + " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return static_cast<int>(v);
  }

  double number(const Json& j, const std::string& ptr) const {
    if (!j.is_number()) fail(ptr, "expected a number");
    return j.get<double>();
  }

 private:
  std::string_view text_;
  PositionIndex index_;
};

}  // namespace detail

inline Json instance_to_json(const CausalInstance& inst) {
  Json j;
  j["nodes"] = Json::array();
  for (int v = 0; v < inst.size(); ++v) j["nodes"].push_back({{"name", inst.dag().name(v)}, {"domain", inst.domain(v)}});
  j["edges"] = Json::array();
  for (auto [p, c] : inst.dag().edges()) j["edges"].push_back({p, c});
  j["cpts"] = Json::array();
  for (const Cpt& c : inst.cpts()) {
    Json rows = Json::array();
    for (std::size_t r = 0; r < c.rows(); ++r) {
      const auto row = c.row(r);
      rows.push_back(Json(std::vector<double>(row.begin(), row.end())));
    }
    j["cpts"].push_back({{"parents", c.parents}, {"rows", std::move(rows)}});
  }
  j["reward"] = {{"node", inst.reward().node}, {"means", inst.reward().value_means}};
  j["actions"] = {{"first", inst.actions().first}, {"count", inst.actions().count}};
  return j;
}

inline std::string instance_to_string(const CausalInstance& inst) { return instance_to_json(inst).dump(2) + "\n"; }

/// Parses and validates an instance. Syntax and schema problems raise
/// ParseError with the line/column of the offending value; semantic
/// problems (cycles, bad rows) raise the causal-model errors.
inline CausalInstance instance_from_string(std::string_view text) {
  const Json j = detail::parse_json_text(text);
  detail::SchemaReader rd(text);
  if (!j.is_object()) rd.fail("", "instance must be a JSON object");

  const Json& nodes = rd.array(rd.field(j, "", "nodes"), "/nodes");
  const int n = static_cast<int>(nodes.size());
  if (n < 1) rd.fail("/nodes", "at least one node is required");
  std::vector<std::string> names;
  std::vector<int> domains;
  for (int v = 0; v < n; ++v) {
    const std::string p = "/nodes/" + std::to_string(v);
    const Json& node = nodes[static_cast<std::size_t>(v)];
    const Json& name = rd.field(node, p, "name", false);
    if (!name.is_null() && !name.is_string()) rd.fail(p + "/name", "expected a string");
    names.push_back(name.is_string() ? name.get<std::string>() : "X" + std::to_string(v + 1));
    domains.push_back(rd.integer(rd.field(node, p, "domain"), p + "/domain", 1, 1 << 20));
  }

  CausalDag dag(n, names);
  const Json& edges = rd.array(rd.field(j, "", "edges"), "/edges");
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const std::string p = "/edges/" + std::to_string(e);
    const Json& pair = rd.array(edges[e], p);
    if (pair.size() != 2) rd.fail(p, "an edge is a [parent, child] pair");
    const int a = rd.integer(pair[0], p + "/0", 0, n - 1);
    const int b = rd.integer(pair[1], p + "/1", 0, n - 1);
    try {
      dag.add_edge(a, b);
    } catch (const InvalidInstance& err) {
      rd.fail(p, err.what());
    }
  }
  std::vector<int> order;
  try {
    order = topological_order(dag);
  } catch (const CycleDetected& err) {
    rd.fail("/edges", err.what());
  }

  const Json& cpts = rd.array(rd.field(j, "", "cpts"), "/cpts");
  if (static_cast<int>(cpts.size()) != n) rd.fail("/cpts", "expected one CPT per node");
  std::vector<Cpt> tables;
  for (int v = 0; v < n; ++v) {
    const std::string p = "/cpts/" + std::to_string(v);
    const Json& entry = cpts[static_cast<std::size_t>(v)];
    Cpt c;
    c.node = v;
    c.domain_size = domains[static_cast<std::size_t>(v)];
    const Json* rows = &entry;
    std::string rows_ptr = p;
    if (entry.is_object()) {
      const Json& pa = rd.array(rd.field(entry, p, "parents"), p + "/parents");
      for (std::size_t i = 0; i < pa.size(); ++i) c.parents.push_back(rd.integer(pa[i], p + "/parents/" + std::to_string(i), 0, n - 1));
      std::vector<int> sorted = c.parents;
      std::sort(sorted.begin(), sorted.end());
      if (sorted != dag.parents(v)) rd.fail(p + "/parents", "parents do not match the edge list");
      rows = &rd.field(entry, p, "rows");
      rows_ptr = p + "/rows";
    } else {
      c.parents = topological_parent_order(dag, v, order);
    }
    for (int pa : c.parents) c.parent_domains.push_back(domains[static_cast<std::size_t>(pa)]);
    rd.array(*rows, rows_ptr);
    if (rows->size() != c.rows())
      rd.fail(rows_ptr, "expected " + std::to_string(c.rows()) + " rows, found " + std::to_string(rows->size()));
    for (std::size_t r = 0; r < rows->size(); ++r) {
      const std::string rp = rows_ptr + "/" + std::to_string(r);
      const Json& row = rd.array((*rows)[r], rp);
      if (static_cast<int>(row.size()) != c.domain_size)
        rd.fail(rp, "expected " + std::to_string(c.domain_size) + " probabilities");
      double s = 0;
      for (std::size_t x = 0; x < row.size(); ++x) {
        const double pr = rd.number(row[x], rp + "/" + std::to_string(x));
        if (!(pr >= 0.0 && pr <= 1.0)) rd.fail(rp + "/" + std::to_string(x), "probability outside [0, 1]");
        s += pr;
        c.table.push_back(pr);
      }
      if (std::abs(s - 1.0) > kProbTolerance) rd.fail(rp, "row sums to " + std::to_string(s));
    }
    tables.push_back(std::move(c));
  }

  const Json& reward = rd.field(j, "", "reward");
  RewardModel rm;
  rm.node = rd.integer(rd.field(reward, "/reward", "node"), "/reward/node", 0, n - 1);
  const Json& means = rd.array(rd.field(reward, "/reward", "means"), "/reward/means");
  if (static_cast<int>(means.size()) != domains[static_cast<std::size_t>(rm.node)])
    rd.fail("/reward/means", "expected one mean per value of the reward node");
  for (std::size_t k = 0; k < means.size(); ++k) {
    const double m = rd.number(means[k], "/reward/means/" + std::to_string(k));
    if (!(m >= 0.0 && m <= 1.0)) rd.fail("/reward/means/" + std::to_string(k), "mean outside [0, 1]");
    rm.value_means.push_back(m);
  }

  std::optional<ActionDomain> actions;
  const Json& act = rd.field(j, "", "actions", false);
  if (!act.is_null()) {
    ActionDomain a;
    a.first = rd.integer(rd.field(act, "/actions", "first"), "/actions/first", 0, 1 << 20);
    a.count = rd.integer(rd.field(act, "/actions", "count"), "/actions/count", 1, 1 << 20);
    for (int d : domains)
      if (a.first + a.count > d) rd.fail("/actions", "action domain exceeds a node domain");
    actions = a;
  }
  return CausalInstance(std::move(dag), std::move(tables), std::move(rm), actions);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  out << content;
}

inline CausalInstance load_instance(const std::string& path) { return instance_from_string(read_file(path)); }

inline Json ground_truth_to_json(const GroundTruth& t) {
  Json j;
  j["reward_node"] = t.reward_node;
  j["edges"] = Json::array();
  for (auto [p, c] : t.edges) j["edges"].push_back({p, c});
  j["max_degree"] = t.max_degree;
  j["depth"] = t.depth;
  j["components"] = t.components;
  j["cliques"] = t.cliques;
  j["intersection_incomparable"] = t.intersection_incomparable;
  j["reward_clique_size"] = t.reward_clique_size;
  if (!t.directed_clique_tree.cliques.empty()) {
    Json dct;
    dct["cliques"] = t.directed_clique_tree.cliques;
    dct["edges"] = Json::array();
    for (auto [a, b] : t.directed_clique_tree.tree.edges()) dct["edges"].push_back({a, b});
    dct["arrows"] = Json::array();
    for (auto [a, b] : t.directed_clique_tree.arrows) dct["arrows"].push_back({a, b});
    j["directed_clique_tree"] = std::move(dct);
  }
  j["attempts_used"] = t.attempts_used;
  return j;
}

}  // namespace cbandit
