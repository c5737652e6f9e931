#pragma once

// JSON files: graphs, points, move scripts and reports.

#include "pk/poisson_lab.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

namespace pk {

using Json = nlohmann::ordered_json;

namespace detail {

inline std::string line_col(const std::string& text, std::size_t byte) {
  int line = 1, col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

// Schema errors carry the JSON pointer of the offending value.
[[noreturn]] inline void schema_error(const std::string& where, const std::string& what) {
  throw Error(Errc::parse_error, (where.empty() ? std::string("/") : where) + ": " + what);
}

inline const Json& member(const Json& j, const std::string& key, const std::string& where) {
  if (!j.is_object()) schema_error(where, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) schema_error(where, "missing key '" + key + "'");
  return *it;
}

inline const Json& array_member(const Json& j, const std::string& key, const std::string& where) {
  const Json& a = member(j, key, where);
  if (!a.is_array()) schema_error(where + "/" + key, "expected an array");
  return a;
}

inline std::string string_value(const Json& j, const std::string& where) {
  if (!j.is_string()) schema_error(where, "expected a string");
  return j.get<std::string>();
}

inline std::string string_member(const Json& j, const std::string& key, const std::string& where) {
  return string_value(member(j, key, where), where + "/" + key);
}

// [id, tag] pairs used by vertex ends and face paths.
inline std::pair<std::string, std::string> tagged(const Json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2) schema_error(where, "expected a two-element array");
  return {string_value(j[0], where + "/0"), string_value(j[1], where + "/1")};
}

// One compact element per line inside each top-level array.
inline std::string dump_lines(const Json& obj) {
  std::string out = "{\n";
  std::size_t k = 0;
  for (auto it = obj.begin(); it != obj.end(); ++it, ++k) {
    out += "  " + Json(it.key()).dump() + ": ";
    if (it->is_array() && !it->empty()) {
      out += "[\n";
      for (std::size_t i = 0; i < it->size(); ++i)
        out += "    " + (*it)[i].dump() + (i + 1 < it->size() ? ",\n" : "\n");
      out += "  ]";
    } else {
      out += it->dump();
    }
    out += k + 1 < obj.size() ? ",\n" : "\n";
  }
  return out + "}\n";
}

}  // namespace detail

inline Json parse_json(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(Errc::parse_error, "malformed JSON at " + detail::line_col(text, e.byte));
  }
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::parse_error, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::parse_error, "cannot write '" + path + "'");
  out << text;
}

// ---------------------------------------------------------------------------
// Graphs

inline GraphDesc graph_desc_from_json(const Json& j) {
  using namespace detail;
  GraphDesc d;
  const Json& vs = array_member(j, "vertices", "");
  for (std::size_t i = 0; i < vs.size(); ++i) {
    const std::string w = "/vertices/" + std::to_string(i);
    VertexDesc v{string_member(vs[i], "id", w), {}};
    const Json& ends = array_member(vs[i], "ends", w);
    for (std::size_t k = 0; k < ends.size(); ++k) {
      const std::string wk = w + "/ends/" + std::to_string(k);
      auto [e, tag] = tagged(ends[k], wk);
      if (tag != "s" && tag != "t") schema_error(wk + "/1", "end tag must be \"s\" or \"t\"");
      v.ends.push_back({e, tag == "s" ? End::source : End::target});
    }
    d.vertices.push_back(std::move(v));
  }
  const Json& es = array_member(j, "edges", "");
  for (std::size_t i = 0; i < es.size(); ++i) {
    const std::string w = "/edges/" + std::to_string(i);
    d.edges.push_back({string_member(es[i], "id", w), string_member(es[i], "source", w), string_member(es[i], "target", w)});
  }
  const Json& fs = array_member(j, "faces", "");
  for (std::size_t i = 0; i < fs.size(); ++i) {
    const std::string w = "/faces/" + std::to_string(i);
    FaceDesc f{string_member(fs[i], "id", w), {}};
    const Json& path = array_member(fs[i], "path", w);
    for (std::size_t k = 0; k < path.size(); ++k) {
      const std::string wk = w + "/path/" + std::to_string(k);
      auto [e, tag] = tagged(path[k], wk);
      if (tag != "+" && tag != "-") schema_error(wk + "/1", "side tag must be \"+\" or \"-\"");
      f.steps.push_back({e, tag == "+" ? Dir::plus : Dir::minus});
    }
    d.faces.push_back(std::move(f));
  }
  return d;
}

inline Json graph_desc_to_json(const GraphDesc& d) {
  Json j = Json::object();
  j["vertices"] = Json::array();
  for (const auto& v : d.vertices) {
    Json ends = Json::array();
    for (const auto& e : v.ends) ends.push_back({e.edge, e.end == End::source ? "s" : "t"});
    j["vertices"].push_back({{"id", v.id}, {"ends", ends}});
  }
  j["edges"] = Json::array();
  for (const auto& e : d.edges) j["edges"].push_back({{"id", e.id}, {"source", e.source}, {"target", e.target}});
  j["faces"] = Json::array();
  for (const auto& f : d.faces) {
    Json path = Json::array();
    for (const auto& s : f.steps) path.push_back({s.edge, s.dir == Dir::plus ? "+" : "-"});
    j["faces"].push_back({{"id", f.id}, {"path", path}});
  }
  return j;
}

// Canonical text: fixed key order, one vertex, edge or face per line.
inline std::string graph_to_string(const RibbonGraph& g) { return detail::dump_lines(graph_desc_to_json(g.desc())); }

inline RibbonGraph graph_from_string(const std::string& text) {
  return validate_graph(graph_desc_from_json(parse_json(text)));
}

inline RibbonGraph load_graph(const std::string& path) { return graph_from_string(read_file(path)); }

// ---------------------------------------------------------------------------
// Points

template <class B>
Json point_to_json(const DoubleGroup<B>& G, const RibbonGraph& g, const Point<B>& x) {
  if (static_cast<int>(x.size()) != g.num_edges()) throw Error(Errc::dimension_mismatch, "point does not cover edges");
  Json edges = Json::object();
  for (int e = 0; e < g.num_edges(); ++e) edges[g.edge_id(e)] = G.to_floats(x[e]);
  return Json{{"backend", G.name()}, {"edges", edges}};
}

template <class B>
std::string point_to_string(const DoubleGroup<B>& G, const RibbonGraph& g, const Point<B>& x) {
  return detail::dump_lines(point_to_json(G, g, x));
}

template <class B>
Point<B> point_from_json(const DoubleGroup<B>& G, const RibbonGraph& g, const Json& j) {
  using namespace detail;
  const std::string backend = string_member(j, "backend", "");
  if (backend != G.name()) schema_error("/backend", "point is for '" + backend + "', expected '" + G.name() + "'");
  const Json& edges = member(j, "edges", "");
  if (!edges.is_object()) schema_error("/edges", "expected an object");
  for (auto it = edges.begin(); it != edges.end(); ++it)
    if (!g.has_edge(it.key())) throw Error(Errc::unknown_reference, "point names unknown edge '" + it.key() + "'");
  Point<B> x;
  for (int e = 0; e < g.num_edges(); ++e) {
    const std::string w = "/edges/" + g.edge_id(e);
    auto it = edges.find(g.edge_id(e));
    if (it == edges.end()) schema_error("/edges", "missing edge '" + g.edge_id(e) + "'");
    if (!it->is_array()) schema_error(w, "expected an array of numbers");
    std::vector<double> f;
    for (const auto& v : *it) {
      if (!v.is_number()) schema_error(w, "expected an array of numbers");
      f.push_back(v.get<double>());
    }
    x.push_back(G.from_floats(f));
  }
  return x;
}

template <class B>
Point<B> point_from_string(const DoubleGroup<B>& G, const RibbonGraph& g, const std::string& text) {
  return point_from_json(G, g, parse_json(text));
}

// Backend name stored in a point file, without decoding the elements.
inline std::string point_backend(const std::string& text) {
  return detail::string_member(parse_json(text), "backend", "");
}

// ---------------------------------------------------------------------------
// Move scripts

inline MoveKind move_kind_from_name(const std::string& s) {
  for (auto k : {MoveKind::reverse, MoveKind::split_edge, MoveKind::glue_bivalent, MoveKind::double_edge,
                 MoveKind::glue_face, MoveKind::erase, MoveKind::shift_cilium, MoveKind::pair})
    if (s == move_kind_name(k)) return k;
  throw Error(Errc::parse_error, "unknown move '" + s + "'");
}

inline Json move_to_json(const MoveRecord& m) {
  Json j{{"move", move_kind_name(m.kind)}};
  if (m.kind != MoveKind::pair) j["target"] = m.target;
  if (!m.ids.empty()) j["ids"] = m.ids;
  if (m.kind == MoveKind::shift_cilium) {
    j["on_face"] = m.on_face;
    j["steps"] = m.steps;
  }
  if (m.kind == MoveKind::pair) {
    Json sites = Json::array();
    for (const auto& [v, f] : m.sites) sites.push_back({v, f});
    j["sites"] = sites;
  }
  return j;
}

inline MoveRecord move_from_json(const Json& j, const std::string& where) {
  using namespace detail;
  MoveRecord m;
  m.kind = move_kind_from_name(string_member(j, "move", where));
  if (m.kind == MoveKind::pair) {
    const Json& sites = array_member(j, "sites", where);
    for (std::size_t i = 0; i < sites.size(); ++i) m.sites.push_back(tagged(sites[i], where + "/sites/" + std::to_string(i)));
  } else {
    m.target = string_member(j, "target", where);
  }
  if (j.contains("ids")) {
    const Json& ids = array_member(j, "ids", where);
    for (std::size_t i = 0; i < ids.size(); ++i) m.ids.push_back(string_value(ids[i], where + "/ids/" + std::to_string(i)));
  }
  if (m.kind == MoveKind::shift_cilium) {
    const Json& of = member(j, "on_face", where);
    const Json& st = member(j, "steps", where);
    if (!of.is_boolean()) schema_error(where + "/on_face", "expected a boolean");
    if (!st.is_number_integer()) schema_error(where + "/steps", "expected an integer");
    m.on_face = of.get<bool>();
    m.steps = st.get<int>();
  }
  return m;
}

inline std::string script_to_string(const std::vector<MoveRecord>& script) {
  std::string out = "[\n";
  for (std::size_t i = 0; i < script.size(); ++i)
    out += "  " + move_to_json(script[i]).dump() + (i + 1 < script.size() ? ",\n" : "\n");
  return out + "]\n";
}

inline std::vector<MoveRecord> script_from_string(const std::string& text) {
  const Json j = parse_json(text);
  if (!j.is_array()) detail::schema_error("", "a move script is a JSON array");
  std::vector<MoveRecord> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(move_from_json(j[i], "/" + std::to_string(i)));
  return out;
}

// ---------------------------------------------------------------------------
// Reports

inline Json check_to_json(const CheckRecord& c) {
  Json j{{"name", c.name},
         {"statement", c.statement},
         {"samples", c.samples},
         {"max_residual", std::isfinite(c.max_residual) ? Json(c.max_residual) : Json(nullptr)},
         {"tolerance", c.tolerance},
         {"pass", c.pass},
         {"skipped", c.skipped},
         {"runtime_ms", c.runtime_ms}};
  if (c.bracket_scale) j["bracket_scale"] = *c.bracket_scale;
  if (!c.note.empty()) j["note"] = c.note;
  return j;
}

inline std::string report_to_string(const Report& r) {
  Json checks = Json::array();
  for (const auto& c : r.checks) checks.push_back(check_to_json(c));
  const Json j{{"backend", r.backend}, {"graph", r.graph},   {"seed", r.seed},
               {"samples", r.samples}, {"fd_step", r.fd_step}, {"checks", checks}};
  return detail::dump_lines(j);
}

}  // namespace pk
