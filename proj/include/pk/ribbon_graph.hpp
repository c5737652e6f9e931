#pragma once

// Doubly ciliated ribbon graphs.
//
// Vertex ends are listed counterclockwise starting after the cilium; face paths
// are listed clockwise starting after the face cilium. In the thickened graph a
// vertex of valence m has m corners, corner k sitting just before end k, so
// corner 0 carries the vertex cilium. The thickened edges run between corners:
//
//   r(e): (s, ks)     -> (t, kt + 1)      f(e): (t, kt + 1) -> (t, kt)
//   l(e): (s, ks + 1) -> (t, kt)          b(e): (s, ks)     -> (s, ks + 1)
//
// where ks, kt are the positions of b(e) at s(e) and of f(e) at t(e), taken
// modulo the valence. A face path enters a vertex through the corner after some
// end and leaves along the side that starts at that corner.

#include "pk/errors.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace pk {

enum class End { source, target };
enum class Dir { plus, minus };  // plus traverses r(e), minus traverses l(e)^{-1}
enum class Gen { r, l, f, b };

struct EdgeEnd {
  std::string edge;
  End end;
  bool operator==(const EdgeEnd&) const = default;
};
struct FaceStep {
  std::string edge;
  Dir dir;
  bool operator==(const FaceStep&) const = default;
};
struct VertexDesc {
  std::string id;
  std::vector<EdgeEnd> ends;
  bool operator==(const VertexDesc&) const = default;
};
struct EdgeDesc {
  std::string id, source, target;
  bool operator==(const EdgeDesc&) const = default;
};
struct FaceDesc {
  std::string id;
  std::vector<FaceStep> steps;
  bool operator==(const FaceDesc&) const = default;
};
struct GraphDesc {
  std::vector<VertexDesc> vertices;
  std::vector<EdgeDesc> edges;
  std::vector<FaceDesc> faces;
  bool operator==(const GraphDesc&) const = default;
};

struct EndRef {
  int edge;
  End end;
  bool operator==(const EndRef&) const = default;
};
struct StepRef {
  int edge;
  Dir dir;
  bool operator==(const StepRef&) const = default;
  auto operator<=>(const StepRef&) const = default;
};
struct Corner {
  int vertex;
  int k;
  bool operator==(const Corner&) const = default;
};

struct Letter {
  Gen gen;
  int edge;
  int exp;  // +1 or -1
  bool operator==(const Letter&) const = default;
};

// Word in the free groupoid of the thickened graph. word[0] is the leftmost
// factor, so it is traversed last.
struct Path {
  std::vector<Letter> word;
  bool empty() const { return word.empty(); }
  bool operator==(const Path&) const = default;
};

inline Path compose(const Path& p, const Path& q) {
  Path out = p;
  out.word.insert(out.word.end(), q.word.begin(), q.word.end());
  return out;
}
inline Path compose(std::initializer_list<Path> ps) {
  Path out;
  for (const auto& p : ps) out = compose(out, p);
  return out;
}
inline Path inverse(const Path& p) {
  Path out;
  for (auto it = p.word.rbegin(); it != p.word.rend(); ++it) out.word.push_back({it->gen, it->edge, -it->exp});
  return out;
}
inline Path letter(Gen g, int edge, int exp = 1) { return Path{{Letter{g, edge, exp}}}; }

inline Path reduce(const Path& p) {
  std::vector<Letter> st;
  for (const auto& a : p.word) {
    if (!st.empty() && st.back().gen == a.gen && st.back().edge == a.edge && st.back().exp == -a.exp)
      st.pop_back();
    else
      st.push_back(a);
  }
  return Path{st};
}

class RibbonGraph;
RibbonGraph validate_graph(GraphDesc desc);

class RibbonGraph {
 public:
  const GraphDesc& desc() const { return desc_; }

  int num_vertices() const { return static_cast<int>(desc_.vertices.size()); }
  int num_edges() const { return static_cast<int>(desc_.edges.size()); }
  int num_faces() const { return static_cast<int>(desc_.faces.size()); }

  const std::string& vertex_id(int v) const { return desc_.vertices.at(v).id; }
  const std::string& edge_id(int e) const { return desc_.edges.at(e).id; }
  const std::string& face_id(int f) const { return desc_.faces.at(f).id; }

  int vertex_index(const std::string& id) const { return lookup(vidx_, id, "vertex"); }
  int edge_index(const std::string& id) const { return lookup(eidx_, id, "edge"); }
  int face_index(const std::string& id) const { return lookup(fidx_, id, "face"); }
  bool has_vertex(const std::string& id) const { return vidx_.count(id) != 0; }
  bool has_edge(const std::string& id) const { return eidx_.count(id) != 0; }
  bool has_face(const std::string& id) const { return fidx_.count(id) != 0; }

  int source(int e) const { return src_.at(e); }
  int target(int e) const { return tgt_.at(e); }
  bool is_loop(int e) const { return src_.at(e) == tgt_.at(e); }
  int valence(int v) const { return static_cast<int>(ends_.at(v).size()); }
  const std::vector<EndRef>& ends(int v) const { return ends_.at(v); }
  const std::vector<StepRef>& steps(int f) const { return steps_.at(f); }

  // Position of b(e) (End::source) or f(e) (End::target) in its vertex list.
  int end_pos(int e, End end) const { return end == End::source ? bpos_.at(e) : fpos_.at(e); }
  int end_vertex(int e, End end) const { return end == End::source ? src_.at(e) : tgt_.at(e); }
  // Face containing the side and the position of the side in its path.
  int side_face(int e, Dir d) const { return d == Dir::plus ? rface_.at(e) : lface_.at(e); }
  int side_pos(int e, Dir d) const { return d == Dir::plus ? rpos_.at(e) : lpos_.at(e); }
  int right_face(int e) const { return rface_.at(e); }
  int left_face(int e) const { return lface_.at(e); }

  // (start corner, end corner) of a generator traversed forwards.
  std::pair<Corner, Corner> generator_corners(Gen g, int e) const {
    const int s = src_[e], t = tgt_[e];
    const int ms = valence(s), mt = valence(t);
    const int ks = bpos_[e], kt = fpos_[e];
    switch (g) {
      case Gen::r: return {{s, ks}, {t, (kt + 1) % mt}};
      case Gen::l: return {{s, (ks + 1) % ms}, {t, kt}};
      case Gen::f: return {{t, (kt + 1) % mt}, {t, kt}};
      case Gen::b: return {{s, ks}, {s, (ks + 1) % ms}};
    }
    return {};
  }
  std::pair<Corner, Corner> letter_corners(const Letter& a) const {
    auto c = generator_corners(a.gen, a.edge);
    if (a.exp < 0) std::swap(c.first, c.second);
    return c;
  }
  // Start corner of a face, i.e. where its cilium sits.
  Corner face_corner(int f) const {
    const StepRef& s = steps_.at(f).front();
    return letter_corners(step_letter(s)).first;
  }
  static Letter step_letter(const StepRef& s) {
    return s.dir == Dir::plus ? Letter{Gen::r, s.edge, 1} : Letter{Gen::l, s.edge, -1};
  }

 private:
  friend RibbonGraph validate_graph(GraphDesc desc);

  static int lookup(const std::map<std::string, int>& m, const std::string& id, const char* what) {
    auto it = m.find(id);
    if (it == m.end()) throw Error(Errc::unknown_reference, std::string("unknown ") + what + " '" + id + "'");
    return it->second;
  }

  GraphDesc desc_;
  std::map<std::string, int> vidx_, eidx_, fidx_;
  std::vector<int> src_, tgt_, bpos_, fpos_, rface_, lface_, rpos_, lpos_;
  std::vector<std::vector<EndRef>> ends_;
  std::vector<std::vector<StepRef>> steps_;
};

namespace detail {

// Successor of a face step under the maximal right turn rule.
inline StepRef next_step(const std::vector<std::vector<EndRef>>& ends, const std::vector<int>& src,
                         const std::vector<int>& tgt, const std::vector<int>& bpos,
                         const std::vector<int>& fpos, const StepRef& s) {
  int v, k;
  if (s.dir == Dir::plus) {
    v = tgt[s.edge];
    k = fpos[s.edge] + 1;
  } else {
    v = src[s.edge];
    k = bpos[s.edge] + 1;
  }
  const auto& list = ends[v];
  const EndRef& nxt = list[k % list.size()];
  return StepRef{nxt.edge, nxt.end == End::source ? Dir::plus : Dir::minus};
}

inline std::vector<std::vector<StepRef>> trace_cycles(const std::vector<std::vector<EndRef>>& ends,
                                                      const std::vector<int>& src, const std::vector<int>& tgt,
                                                      const std::vector<int>& bpos, const std::vector<int>& fpos) {
  const int E = static_cast<int>(src.size());
  std::set<StepRef> seen;
  std::vector<std::vector<StepRef>> out;
  for (int e = 0; e < E; ++e)
    for (Dir d : {Dir::plus, Dir::minus}) {
      StepRef s{e, d};
      if (seen.count(s)) continue;
      std::vector<StepRef> cyc;
      while (!seen.count(s)) {
        seen.insert(s);
        cyc.push_back(s);
        s = next_step(ends, src, tgt, bpos, fpos, s);
      }
      out.push_back(std::move(cyc));
    }
  return out;
}

}  // namespace detail

inline RibbonGraph validate_graph(GraphDesc desc) {
  RibbonGraph g;
  const int V = static_cast<int>(desc.vertices.size());
  const int E = static_cast<int>(desc.edges.size());
  const int F = static_cast<int>(desc.faces.size());
  if (E == 0) throw Error(Errc::precondition_violated, "graph has no edges");

  auto index = [](auto& m, const std::string& id, int i, const char* what) {
    if (!m.emplace(id, i).second)
      throw Error(Errc::precondition_violated, std::string("duplicate ") + what + " id '" + id + "'");
  };
  for (int v = 0; v < V; ++v) index(g.vidx_, desc.vertices[v].id, v, "vertex");
  for (int e = 0; e < E; ++e) index(g.eidx_, desc.edges[e].id, e, "edge");
  for (int f = 0; f < F; ++f) index(g.fidx_, desc.faces[f].id, f, "face");

  g.src_.resize(E);
  g.tgt_.resize(E);
  for (int e = 0; e < E; ++e) {
    g.src_[e] = RibbonGraph::lookup(g.vidx_, desc.edges[e].source, "vertex");
    g.tgt_[e] = RibbonGraph::lookup(g.vidx_, desc.edges[e].target, "vertex");
  }

  g.bpos_.assign(E, -1);
  g.fpos_.assign(E, -1);
  g.ends_.resize(V);
  for (int v = 0; v < V; ++v) {
    const auto& vd = desc.vertices[v];
    for (int k = 0; k < static_cast<int>(vd.ends.size()); ++k) {
      const int e = RibbonGraph::lookup(g.eidx_, vd.ends[k].edge, "edge");
      const End end = vd.ends[k].end;
      const int owner = end == End::source ? g.src_[e] : g.tgt_[e];
      if (owner != v)
        throw Error(Errc::precondition_violated, "end of edge '" + vd.ends[k].edge + "' listed at vertex '" +
                                                     vd.id + "' but the edge is attached elsewhere");
      int& pos = end == End::source ? g.bpos_[e] : g.fpos_[e];
      if (pos != -1)
        throw Error(Errc::precondition_violated, "end of edge '" + vd.ends[k].edge + "' listed twice");
      pos = k;
      g.ends_[v].push_back({e, end});
    }
  }
  for (int e = 0; e < E; ++e)
    if (g.bpos_[e] < 0 || g.fpos_[e] < 0)
      throw Error(Errc::precondition_violated, "edge '" + desc.edges[e].id + "' has an end missing from vertex orderings");

  // Connectivity.
  {
    std::vector<std::vector<int>> adj(V);
    for (int e = 0; e < E; ++e) {
      adj[g.src_[e]].push_back(g.tgt_[e]);
      adj[g.tgt_[e]].push_back(g.src_[e]);
    }
    std::vector<char> seen(V, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (int w : adj[v])
        if (!seen[w]) seen[w] = 1, stack.push_back(w);
    }
    for (int v = 0; v < V; ++v)
      if (!seen[v]) throw Error(Errc::disconnected, "vertex '" + desc.vertices[v].id + "' is not reachable");
  }

  g.rface_.assign(E, -1);
  g.lface_.assign(E, -1);
  g.rpos_.assign(E, -1);
  g.lpos_.assign(E, -1);
  g.steps_.resize(F);
  for (int f = 0; f < F; ++f) {
    const auto& fd = desc.faces[f];
    if (fd.steps.empty()) throw Error(Errc::not_a_face_path, "face '" + fd.id + "' has an empty path");
    for (const auto& s : fd.steps) g.steps_[f].push_back({RibbonGraph::lookup(g.eidx_, s.edge, "edge"), s.dir});
    const auto& st = g.steps_[f];
    const int n = static_cast<int>(st.size());
    for (int i = 0; i < n; ++i) {
      const StepRef want = detail::next_step(g.ends_, g.src_, g.tgt_, g.bpos_, g.fpos_, st[i]);
      if (!(want == st[(i + 1) % n]))
        throw Error(Errc::not_a_face_path, "face '" + fd.id + "' does not turn maximally right after step " +
                                               std::to_string(i));
    }
    for (int i = 0; i < n; ++i) {
      const auto& s = st[i];
      int& face = s.dir == Dir::plus ? g.rface_[s.edge] : g.lface_[s.edge];
      int& pos = s.dir == Dir::plus ? g.rpos_[s.edge] : g.lpos_[s.edge];
      if (face != -1)
        throw Error(Errc::not_a_face_path, "side of edge '" + desc.edges[s.edge].id + "' appears twice in face paths");
      face = f;
      pos = i;
    }
  }
  for (int e = 0; e < E; ++e) {
    if (g.rface_[e] < 0)
      throw Error(Errc::uncovered_edge_side, "right side of edge '" + desc.edges[e].id + "' is in no face");
    if (g.lface_[e] < 0)
      throw Error(Errc::uncovered_edge_side, "left side of edge '" + desc.edges[e].id + "' is in no face");
  }
  g.desc_ = std::move(desc);
  return g;
}

// Face cycles traced from vertex data alone; face lists in `desc` are ignored.
// Each cycle starts at its lexicographically smallest step.
inline std::vector<std::vector<FaceStep>> trace_faces(const GraphDesc& desc) {
  GraphDesc bare = desc;
  std::map<std::string, int> vidx, eidx;
  for (int v = 0; v < static_cast<int>(bare.vertices.size()); ++v) vidx[bare.vertices[v].id] = v;
  for (int e = 0; e < static_cast<int>(bare.edges.size()); ++e) eidx[bare.edges[e].id] = e;
  const int E = static_cast<int>(bare.edges.size());
  std::vector<int> src(E), tgt(E), bpos(E, 0), fpos(E, 0);
  std::vector<std::vector<EndRef>> ends(bare.vertices.size());
  auto find = [](const std::map<std::string, int>& m, const std::string& id) {
    auto it = m.find(id);
    if (it == m.end()) throw Error(Errc::unknown_reference, "unknown id '" + id + "'");
    return it->second;
  };
  for (int e = 0; e < E; ++e) {
    src[e] = find(vidx, bare.edges[e].source);
    tgt[e] = find(vidx, bare.edges[e].target);
  }
  for (int v = 0; v < static_cast<int>(bare.vertices.size()); ++v)
    for (int k = 0; k < static_cast<int>(bare.vertices[v].ends.size()); ++k) {
      const auto& ee = bare.vertices[v].ends[k];
      const int e = find(eidx, ee.edge);
      (ee.end == End::source ? bpos : fpos)[e] = k;
      ends[v].push_back({e, ee.end});
    }
  auto cycles = detail::trace_cycles(ends, src, tgt, bpos, fpos);
  std::vector<std::vector<FaceStep>> out;
  for (auto& c : cycles) {
    std::rotate(c.begin(), std::min_element(c.begin(), c.end()), c.end());
    std::vector<FaceStep> fc;
    for (const auto& s : c) fc.push_back({bare.edges[s.edge].id, s.dir});
    out.push_back(std::move(fc));
  }
  return out;
}

// Rebuilds the face list of `desc` from a trace, naming faces f0, f1, ...
inline GraphDesc with_traced_faces(GraphDesc desc, const std::string& prefix = "f") {
  desc.faces.clear();
  int i = 0;
  for (auto& c : trace_faces(desc)) desc.faces.push_back({prefix + std::to_string(i++), std::move(c)});
  return desc;
}

// p_k(v) = i_1^{e_1} o ... o i_k^{e_k}; k < 0 means the full valence.
inline Path vertex_path(const RibbonGraph& g, int v, int k = -1) {
  const auto& ends = g.ends(v);
  if (k < 0) k = static_cast<int>(ends.size());
  if (k > static_cast<int>(ends.size())) throw Error(Errc::invalid_path, "vertex path longer than valence");
  Path p;
  for (int j = 0; j < k; ++j)
    p.word.push_back(ends[j].end == End::target ? Letter{Gen::f, ends[j].edge, 1} : Letter{Gen::b, ends[j].edge, -1});
  return p;
}

// p_k(f) = i_k^{e_k} o ... o i_1^{e_1}.
inline Path face_path(const RibbonGraph& g, int f, int k = -1) {
  const auto& st = g.steps(f);
  if (k < 0) k = static_cast<int>(st.size());
  if (k > static_cast<int>(st.size())) throw Error(Errc::invalid_path, "face path longer than face");
  Path p;
  for (int j = k - 1; j >= 0; --j) p.word.push_back(RibbonGraph::step_letter(st[j]));
  return p;
}

// Throws InvalidPath unless consecutive letters meet at the same corner.
inline void check_path(const RibbonGraph& g, const Path& p) {
  for (const auto& a : p.word)
    if (a.edge < 0 || a.edge >= g.num_edges() || (a.exp != 1 && a.exp != -1))
      throw Error(Errc::invalid_path, "bad letter");
  for (std::size_t i = 0; i + 1 < p.word.size(); ++i)
    if (!(g.letter_corners(p.word[i]).first == g.letter_corners(p.word[i + 1]).second))
      throw Error(Errc::invalid_path, "letters " + std::to_string(i) + " and " + std::to_string(i + 1) +
                                          " do not meet at a corner");
}
inline bool is_valid_path(const RibbonGraph& g, const Path& p) {
  try {
    check_path(g, p);
    return true;
  } catch (const Error&) {
    return false;
  }
}
// (start, end) corners of a nonempty path.
inline std::pair<Corner, Corner> path_corners(const RibbonGraph& g, const Path& p) {
  if (p.empty()) throw Error(Errc::invalid_path, "empty path has no corners");
  return {g.letter_corners(p.word.back()).first, g.letter_corners(p.word.front()).second};
}

inline int associated_face(const RibbonGraph& g, int v) {
  const EndRef& i = g.ends(v).front();
  return i.end == End::source ? g.right_face(i.edge) : g.left_face(i.edge);
}
inline int associated_vertex(const RibbonGraph& g, int f) {
  const StepRef& s = g.steps(f).front();
  return s.dir == Dir::plus ? g.source(s.edge) : g.target(s.edge);
}
inline bool is_site(const RibbonGraph& g, int v, int f) {
  if (associated_face(g, v) != f || associated_vertex(g, f) != v) return false;
  const EndRef& i = g.ends(v).front();
  const StepRef& s = g.steps(f).front();
  if (i.edge != s.edge) return false;
  return (i.end == End::source && s.dir == Dir::plus) || (i.end == End::target && s.dir == Dir::minus);
}
inline bool is_paired(const RibbonGraph& g) {
  for (int e = 0; e < g.num_edges(); ++e)
    if (g.is_loop(e) || g.left_face(e) == g.right_face(e)) return false;
  for (int v = 0; v < g.num_vertices(); ++v)
    if (!is_site(g, v, associated_face(g, v))) return false;
  for (int f = 0; f < g.num_faces(); ++f)
    if (!is_site(g, associated_vertex(g, f), f)) return false;
  return true;
}
inline std::vector<std::pair<int, int>> sites(const RibbonGraph& g) {
  std::vector<std::pair<int, int>> out;
  for (int v = 0; v < g.num_vertices(); ++v) {
    const int f = associated_face(g, v);
    if (is_site(g, v, f)) out.emplace_back(v, f);
  }
  return out;
}

struct SurfaceSignature {
  int genus;
  int boundary_count;
  bool operator==(const SurfaceSignature&) const = default;
};

inline SurfaceSignature surface_signature(const RibbonGraph& g, const std::set<std::string>& annulus_faces) {
  if (annulus_faces.empty()) throw Error(Errc::precondition_violated, "no marked faces");
  for (const auto& f : annulus_faces) g.face_index(f);
  const int b = static_cast<int>(annulus_faces.size());
  const int chi = g.num_vertices() - g.num_edges() + (g.num_faces() - b);
  const int twice_g = 2 - b - chi;
  if (twice_g < 0 || twice_g % 2 != 0)
    throw Error(Errc::non_integer_genus, "Euler characteristic " + std::to_string(chi) + " with " +
                                             std::to_string(b) + " boundary components");
  return {twice_g / 2, b};
}

// ---------------------------------------------------------------------------
// Combinatorial moves

enum class MoveKind { reverse, split_edge, glue_bivalent, double_edge, glue_face, erase, shift_cilium, pair };

inline const char* move_kind_name(MoveKind k) {
  switch (k) {
    case MoveKind::reverse: return "reverse_edge";
    case MoveKind::split_edge: return "split_edge";
    case MoveKind::glue_bivalent: return "glue_bivalent";
    case MoveKind::double_edge: return "double_edge";
    case MoveKind::glue_face: return "glue_face";
    case MoveKind::erase: return "erase_edge";
    case MoveKind::shift_cilium: return "shift_cilium";
    case MoveKind::pair: return "pair";
  }
  return "?";
}

// `target` is the edge, vertex or face the move acts on. `ids` holds the names
// of created elements (split: {e2, v_m}; double: {e2, f_m}; glue: {new edge};
// erase: {surviving face}) so that a replay reproduces the same graph.
struct MoveRecord {
  MoveKind kind = MoveKind::reverse;
  std::string target;
  bool on_face = false;
  int steps = 0;
  std::vector<std::string> ids;
  std::vector<std::pair<std::string, std::string>> sites;
  bool operator==(const MoveRecord&) const = default;
};

struct MoveResult {
  RibbonGraph graph;
  std::vector<MoveRecord> records;
};

namespace detail {

inline std::string fresh_id(const std::set<std::string>& used, const std::string& base) {
  if (!used.count(base)) return base;
  for (int i = 2;; ++i) {
    std::string c = base + "_" + std::to_string(i);
    if (!used.count(c)) return c;
  }
}
inline std::set<std::string> edge_ids(const GraphDesc& d) {
  std::set<std::string> s;
  for (const auto& e : d.edges) s.insert(e.id);
  return s;
}
inline std::set<std::string> vertex_ids(const GraphDesc& d) {
  std::set<std::string> s;
  for (const auto& v : d.vertices) s.insert(v.id);
  return s;
}
inline std::set<std::string> face_ids(const GraphDesc& d) {
  std::set<std::string> s;
  for (const auto& f : d.faces) s.insert(f.id);
  return s;
}
inline int find_edge(const GraphDesc& d, const std::string& id) {
  for (int i = 0; i < static_cast<int>(d.edges.size()); ++i)
    if (d.edges[i].id == id) return i;
  throw Error(Errc::unknown_reference, "unknown edge '" + id + "'");
}
inline int find_vertex(const GraphDesc& d, const std::string& id) {
  for (int i = 0; i < static_cast<int>(d.vertices.size()); ++i)
    if (d.vertices[i].id == id) return i;
  throw Error(Errc::unknown_reference, "unknown vertex '" + id + "'");
}
inline int find_face(const GraphDesc& d, const std::string& id) {
  for (int i = 0; i < static_cast<int>(d.faces.size()); ++i)
    if (d.faces[i].id == id) return i;
  throw Error(Errc::unknown_reference, "unknown face '" + id + "'");
}

// Replace the single occurrence of `old` in `list` by `repl`.
template <class T>
void replace_one(std::vector<T>& list, const T& old, const std::vector<T>& repl) {
  auto it = std::find(list.begin(), list.end(), old);
  if (it == list.end()) throw Error(Errc::precondition_violated, "internal: entry not found");
  const auto pos = it - list.begin();
  list.erase(it);
  list.insert(list.begin() + pos, repl.begin(), repl.end());
}
// Replace the consecutive pair (a, b) by `repl`; false if the pair is not
// consecutive in linear order.
template <class T>
bool replace_pair(std::vector<T>& list, const T& a, const T& b, const T& repl) {
  for (std::size_t i = 0; i + 1 < list.size(); ++i)
    if (list[i] == a && list[i + 1] == b) {
      list[i] = repl;
      list.erase(list.begin() + i + 1);
      return true;
    }
  return false;
}

}  // namespace detail

inline MoveResult reverse_edge(const RibbonGraph& g, const std::string& e) {
  GraphDesc d = g.desc();
  auto& ed = d.edges[detail::find_edge(d, e)];
  std::swap(ed.source, ed.target);
  for (auto& v : d.vertices)
    for (auto& end : v.ends)
      if (end.edge == e) end.end = end.end == End::source ? End::target : End::source;
  for (auto& f : d.faces)
    for (auto& s : f.steps)
      if (s.edge == e) s.dir = s.dir == Dir::plus ? Dir::minus : Dir::plus;
  return {validate_graph(std::move(d)), {MoveRecord{MoveKind::reverse, e}}};
}

// e: s -> t becomes e1: s -> v_m and e2: v_m -> t, with e1 keeping the name
// of e. The new vertex is appended with ordering f(e1) < b(e2).
inline MoveResult split_edge(const RibbonGraph& g, const std::string& e, std::string e2 = "", std::string vm = "") {
  GraphDesc d = g.desc();
  const int ei = detail::find_edge(d, e);
  if (e2.empty()) e2 = detail::fresh_id(detail::edge_ids(d), e + "_s");
  if (vm.empty()) vm = detail::fresh_id(detail::vertex_ids(d), "v_" + e);
  if (detail::edge_ids(d).count(e2) || detail::vertex_ids(d).count(vm))
    throw Error(Errc::precondition_violated, "split_edge: requested id already in use");
  const std::string t = d.edges[ei].target;
  d.edges[ei].target = vm;
  d.edges.insert(d.edges.begin() + ei + 1, EdgeDesc{e2, vm, t});
  for (auto& v : d.vertices)
    for (auto& end : v.ends)
      if (end.edge == e && end.end == End::target) end.edge = e2;
  d.vertices.push_back({vm, {{e, End::target}, {e2, End::source}}});
  for (auto& f : d.faces) {
    for (std::size_t i = 0; i < f.steps.size(); ++i) {
      if (f.steps[i].edge != e) continue;
      if (f.steps[i].dir == Dir::plus) {
        f.steps.insert(f.steps.begin() + i + 1, FaceStep{e2, Dir::plus});
      } else {
        f.steps[i].edge = e2;
        f.steps.insert(f.steps.begin() + i + 1, FaceStep{e, Dir::minus});
      }
      ++i;
    }
  }
  return {validate_graph(std::move(d)), {MoveRecord{MoveKind::split_edge, e, false, 0, {e2, vm}}}};
}

// Edges (e1, e2) meeting at a bivalent vertex with ordering f(e1) < b(e2).
inline std::pair<int, int> bivalent_edges(const RibbonGraph& g, int vm) {
  const auto& ends = g.ends(vm);
  if (ends.size() != 2) throw Error(Errc::precondition_violated, "glue_bivalent: vertex is not bivalent");
  if (ends[0].edge == ends[1].edge) throw Error(Errc::precondition_violated, "glue_bivalent: vertex carries a loop");
  if (ends[0].end != End::target || ends[1].end != End::source)
    throw Error(Errc::precondition_violated, "glue_bivalent: ordering at vertex must be f(e1) < b(e2)");
  return {ends[0].edge, ends[1].edge};
}

// Inverse of split_edge. Edges are reversed first when needed so that the
// ordering at v_m reads f(e1) < b(e2); those reversals are recorded.
inline MoveResult glue_bivalent(const RibbonGraph& g0, const std::string& vm, std::string new_id = "") {
  std::vector<MoveRecord> recs;
  RibbonGraph g = g0;
  {
    const int v = g.vertex_index(vm);
    const auto ends = g.ends(v);
    if (ends.size() != 2) throw Error(Errc::precondition_violated, "glue_bivalent: vertex is not bivalent");
    if (ends[0].edge == ends[1].edge) throw Error(Errc::precondition_violated, "glue_bivalent: vertex carries a loop");
    const std::string a = g.edge_id(ends[0].edge), c = g.edge_id(ends[1].edge);
    if (ends[0].end != End::target) {
      auto r = reverse_edge(g, a);
      g = r.graph;
      recs.push_back(r.records[0]);
    }
    if (ends[1].end != End::source) {
      auto r = reverse_edge(g, c);
      g = r.graph;
      recs.push_back(r.records[0]);
    }
  }
  const int v = g.vertex_index(vm);
  for (int f = 0; f < g.num_faces(); ++f)
    if (associated_vertex(g, f) == v)
      throw Error(Errc::precondition_violated, "glue_bivalent: face '" + g.face_id(f) + "' has its cilium at the vertex");
  const auto [i1, i2] = bivalent_edges(g, v);
  const std::string e1 = g.edge_id(i1), e2 = g.edge_id(i2);
  if (new_id.empty()) new_id = e1;
  GraphDesc d = g.desc();
  auto ids = detail::edge_ids(d);
  ids.erase(e1);
  ids.erase(e2);
  if (ids.count(new_id)) throw Error(Errc::precondition_violated, "glue_bivalent: id '" + new_id + "' in use");
  const std::string t = d.edges[i2].target;
  d.edges[i1].id = new_id;
  d.edges[i1].target = t;
  d.edges.erase(d.edges.begin() + i2);
  d.vertices.erase(d.vertices.begin() + v);
  for (auto& vx : d.vertices)
    for (auto& end : vx.ends) {
      if (end.edge == e1 && end.end == End::source) end.edge = new_id;
      if (end.edge == e2 && end.end == End::target) end.edge = new_id;
    }
  for (auto& f : d.faces) {
    bool ok = true;
    const bool has_r = std::count(f.steps.begin(), f.steps.end(), FaceStep{e1, Dir::plus});
    const bool has_l = std::count(f.steps.begin(), f.steps.end(), FaceStep{e1, Dir::minus});
    if (has_r) ok = ok && detail::replace_pair(f.steps, FaceStep{e1, Dir::plus}, FaceStep{e2, Dir::plus}, FaceStep{new_id, Dir::plus});
    if (has_l) ok = ok && detail::replace_pair(f.steps, FaceStep{e2, Dir::minus}, FaceStep{e1, Dir::minus}, FaceStep{new_id, Dir::minus});
    if (!ok) throw Error(Errc::precondition_violated, "glue_bivalent: face '" + f.id + "' has its cilium at the vertex");
  }
  recs.push_back(MoveRecord{MoveKind::glue_bivalent, vm, false, 0, {new_id}});
  return {validate_graph(std::move(d)), recs};
}

// e becomes the parallel pair e1 (left, keeps the name) and e2 (right), with
// the new face f_m = [(e1,+), (e2,-)] appended to the face list.
inline MoveResult double_edge(const RibbonGraph& g, const std::string& e, std::string e2 = "", std::string fm = "") {
  GraphDesc d = g.desc();
  const int ei = detail::find_edge(d, e);
  if (e2.empty()) e2 = detail::fresh_id(detail::edge_ids(d), e + "_d");
  if (fm.empty()) fm = detail::fresh_id(detail::face_ids(d), "f_" + e);
  if (detail::edge_ids(d).count(e2) || detail::face_ids(d).count(fm))
    throw Error(Errc::precondition_violated, "double_edge: requested id already in use");
  d.edges.insert(d.edges.begin() + ei + 1, EdgeDesc{e2, d.edges[ei].source, d.edges[ei].target});
  for (auto& v : d.vertices) {
    for (std::size_t k = 0; k < v.ends.size(); ++k) {
      if (v.ends[k].edge != e) continue;
      if (v.ends[k].end == End::source) {
        v.ends[k].edge = e2;
        v.ends.insert(v.ends.begin() + k + 1, EdgeEnd{e, End::source});
      } else {
        v.ends.insert(v.ends.begin() + k + 1, EdgeEnd{e2, End::target});
      }
      ++k;
    }
  }
  for (auto& f : d.faces)
    for (auto& s : f.steps)
      if (s.edge == e && s.dir == Dir::plus) s.edge = e2;
  d.faces.push_back({fm, {{e, Dir::plus}, {e2, Dir::minus}}});
  return {validate_graph(std::move(d)), {MoveRecord{MoveKind::double_edge, e, false, 0, {e2, fm}}}};
}

// Inverse of double_edge; f_m must read [(e1,+), (e2,-)] after normalizing
// orientations, and no vertex cilium may sit inside f_m.
inline MoveResult glue_two_edge_face(const RibbonGraph& g0, const std::string& fm, std::string new_id = "") {
  std::vector<MoveRecord> recs;
  RibbonGraph g = g0;
  {
    const int f = g.face_index(fm);
    const auto st = g.steps(f);
    if (st.size() != 2) throw Error(Errc::precondition_violated, "glue_face: face does not have two sides");
    if (st[0].edge == st[1].edge) throw Error(Errc::precondition_violated, "glue_face: face bounded by one edge");
    const std::string a = g.edge_id(st[0].edge), c = g.edge_id(st[1].edge);
    if (st[0].dir != Dir::plus) {
      auto r = reverse_edge(g, a);
      g = r.graph;
      recs.push_back(r.records[0]);
    }
    if (st[1].dir != Dir::minus) {
      auto r = reverse_edge(g, c);
      g = r.graph;
      recs.push_back(r.records[0]);
    }
  }
  const int f = g.face_index(fm);
  for (int v = 0; v < g.num_vertices(); ++v)
    if (associated_face(g, v) == f)
      throw Error(Errc::precondition_violated, "glue_face: vertex '" + g.vertex_id(v) + "' has its cilium in the face");
  const int i1 = g.steps(f)[0].edge, i2 = g.steps(f)[1].edge;
  if (g.is_loop(i1) || g.is_loop(i2)) throw Error(Errc::precondition_violated, "glue_face: loops cannot be glued");
  const std::string e1 = g.edge_id(i1), e2 = g.edge_id(i2);
  if (new_id.empty()) new_id = e1;
  GraphDesc d = g.desc();
  auto ids = detail::edge_ids(d);
  ids.erase(e1);
  ids.erase(e2);
  if (ids.count(new_id)) throw Error(Errc::precondition_violated, "glue_face: id '" + new_id + "' in use");
  d.edges[i1].id = new_id;
  d.edges.erase(d.edges.begin() + i2);
  d.faces.erase(d.faces.begin() + f);
  for (auto& v : d.vertices) {
    bool ok = true;
    const bool at_s = std::count(v.ends.begin(), v.ends.end(), EdgeEnd{e1, End::source});
    const bool at_t = std::count(v.ends.begin(), v.ends.end(), EdgeEnd{e1, End::target});
    if (at_s) ok = ok && detail::replace_pair(v.ends, EdgeEnd{e2, End::source}, EdgeEnd{e1, End::source}, EdgeEnd{new_id, End::source});
    if (at_t) ok = ok && detail::replace_pair(v.ends, EdgeEnd{e1, End::target}, EdgeEnd{e2, End::target}, EdgeEnd{new_id, End::target});
    if (!ok) throw Error(Errc::precondition_violated, "glue_face: vertex '" + v.id + "' has its cilium in the face");
  }
  for (auto& fc : d.faces)
    for (auto& s : fc.steps) {
      if (s.edge == e2 && s.dir == Dir::plus) s.edge = new_id;
      if (s.edge == e1 && s.dir == Dir::minus) s.edge = new_id;
    }
  recs.push_back(MoveRecord{MoveKind::glue_face, fm, false, 0, {new_id}});
  return {validate_graph(std::move(d)), recs};
}

// Removes e, merging its two faces. The surviving face keeps its id and its
// cilium corner; by default it is the face to the right of e.
inline MoveResult erase_edge(const RibbonGraph& g, const std::string& e, std::string keep = "") {
  const int ei = g.edge_index(e);
  const int fr = g.right_face(ei), fl = g.left_face(ei);
  if (fr == fl) throw Error(Errc::precondition_violated, "erase_edge: faces to the left and right of the edge coincide");
  if (keep.empty()) keep = g.face_id(fr);
  const int fk = g.face_index(keep);
  if (fk != fr && fk != fl) throw Error(Errc::precondition_violated, "erase_edge: kept face is not adjacent to the edge");
  GraphDesc d = g.desc();
  auto rotated_after = [&](int f, Dir dir) {
    const auto& st = d.faces[f].steps;
    const auto it = std::find(st.begin(), st.end(), FaceStep{e, dir});
    std::vector<FaceStep> out(it + 1, st.end());
    out.insert(out.end(), st.begin(), it);
    return out;
  };
  const auto Y = rotated_after(fl, Dir::minus);  // left face after l(e)^{-1}
  const auto Q = rotated_after(fr, Dir::plus);   // right face after r(e)
  std::vector<FaceStep> merged = Y;
  merged.insert(merged.end(), Q.begin(), Q.end());
  if (merged.empty()) throw Error(Errc::precondition_violated, "erase_edge: endpoints would become isolated");
  FaceStep start;
  const auto& kst = d.faces[fk].steps;
  const Dir kdir = fk == fr ? Dir::plus : Dir::minus;
  if (!(kst.front() == FaceStep{e, kdir})) {
    start = kst.front();
  } else if (fk == fr) {
    start = Y.empty() ? Q.front() : Y.front();
  } else {
    start = Q.empty() ? Y.front() : Q.front();
  }
  std::rotate(merged.begin(), std::find(merged.begin(), merged.end(), start), merged.end());
  const std::string kept_id = d.faces[fk].id;
  d.faces[fk].steps = merged;
  d.faces.erase(d.faces.begin() + (fk == fr ? fl : fr));
  for (auto& v : d.vertices)
    v.ends.erase(std::remove_if(v.ends.begin(), v.ends.end(), [&](const EdgeEnd& x) { return x.edge == e; }),
                 v.ends.end());
  for (const auto& v : d.vertices)
    if (v.ends.empty()) throw Error(Errc::precondition_violated, "erase_edge: vertex '" + v.id + "' would become isolated");
  d.edges.erase(d.edges.begin() + ei);
  return {validate_graph(std::move(d)), {MoveRecord{MoveKind::erase, e, false, 0, {kept_id}}}};
}

// Moves the cilium forward by `steps` positions (the list rotates left).
inline MoveResult shift_cilium(const RibbonGraph& g, const std::string& id, bool on_face, int steps) {
  GraphDesc d = g.desc();
  auto rot = [&](auto& list) {
    const int n = static_cast<int>(list.size());
    const int s = ((steps % n) + n) % n;
    std::rotate(list.begin(), list.begin() + s, list.end());
  };
  if (on_face)
    rot(d.faces[detail::find_face(d, id)].steps);
  else
    rot(d.vertices[detail::find_vertex(d, id)].ends);
  return {validate_graph(std::move(d)), {MoveRecord{MoveKind::shift_cilium, id, on_face, steps}}};
}

// Produces a paired graph in which the given (vertex, face) sites survive:
// loops are split, edges with one face on both sides are doubled, every other
// vertex gets a new face by doubling its first edge, and every remaining face
// gets a new vertex by splitting its first edge.
inline MoveResult pair_graph(const RibbonGraph& g0, const std::vector<std::pair<std::string, std::string>>& chosen) {
  if (chosen.empty()) throw Error(Errc::invalid_site, "pair_graph needs at least one site");
  std::set<std::string> cv, cf;
  for (const auto& [v, f] : chosen) {
    if (!is_site(g0, g0.vertex_index(v), g0.face_index(f)))
      throw Error(Errc::invalid_site, "(" + v + ", " + f + ") is not a site");
    if (!cv.insert(v).second || !cf.insert(f).second) throw Error(Errc::invalid_site, "sites are not disjoint");
  }
  RibbonGraph g = g0;
  std::vector<MoveRecord> recs;
  auto run = [&](MoveResult r) {
    g = std::move(r.graph);
    recs.insert(recs.end(), r.records.begin(), r.records.end());
    return recs.back();
  };

  std::vector<std::string> loops;
  for (int e = 0; e < g.num_edges(); ++e)
    if (g.is_loop(e)) loops.push_back(g.edge_id(e));
  for (const auto& e : loops) run(split_edge(g, e));

  std::vector<std::string> one_sided;
  for (int e = 0; e < g.num_edges(); ++e)
    if (g.left_face(e) == g.right_face(e)) one_sided.push_back(g.edge_id(e));
  for (const auto& e : one_sided) run(double_edge(g, e));

  std::set<std::string> vertex_faces;
  std::vector<std::string> others;
  for (int v = 0; v < g.num_vertices(); ++v)
    if (!cv.count(g.vertex_id(v))) others.push_back(g.vertex_id(v));
  for (const auto& v : others) {
    const EndRef first = g.ends(g.vertex_index(v)).front();
    const std::string e = g.edge_id(first.edge);
    const auto rec = run(double_edge(g, e));
    const std::string fm = rec.ids[1];
    vertex_faces.insert(fm);
    run(shift_cilium(g, v, false, 1));
    if (first.end == End::target) run(shift_cilium(g, fm, true, 1));
  }

  std::vector<std::string> rest;
  for (int f = 0; f < g.num_faces(); ++f)
    if (!cf.count(g.face_id(f)) && !vertex_faces.count(g.face_id(f))) rest.push_back(g.face_id(f));
  for (const auto& f : rest) {
    const StepRef first = g.steps(g.face_index(f)).front();
    const auto rec = run(split_edge(g, g.edge_id(first.edge)));
    run(shift_cilium(g, f, true, 1));
    if (first.dir == Dir::plus) run(shift_cilium(g, rec.ids[1], false, 1));
  }
  return {g, recs};
}

// Replays one record; a pair record expands into its primitive moves.
inline MoveResult apply_move(const RibbonGraph& g, const MoveRecord& m) {
  auto id_at = [&](std::size_t i) { return i < m.ids.size() ? m.ids[i] : std::string(); };
  switch (m.kind) {
    case MoveKind::reverse: return reverse_edge(g, m.target);
    case MoveKind::split_edge: return split_edge(g, m.target, id_at(0), id_at(1));
    case MoveKind::glue_bivalent: return glue_bivalent(g, m.target, id_at(0));
    case MoveKind::double_edge: return double_edge(g, m.target, id_at(0), id_at(1));
    case MoveKind::glue_face: return glue_two_edge_face(g, m.target, id_at(0));
    case MoveKind::erase: return erase_edge(g, m.target, id_at(0));
    case MoveKind::shift_cilium: return shift_cilium(g, m.target, m.on_face, m.steps);
    case MoveKind::pair: return pair_graph(g, m.sites);
  }
  throw Error(Errc::move_replay, "unknown move");
}

inline MoveResult apply_moves(const RibbonGraph& g0, const std::vector<MoveRecord>& script) {
  MoveResult out{g0, {}};
  for (std::size_t i = 0; i < script.size(); ++i) {
    try {
      auto r = apply_move(out.graph, script[i]);
      out.graph = std::move(r.graph);
      out.records.insert(out.records.end(), r.records.begin(), r.records.end());
    } catch (const Error& err) {
      throw Error(Errc::move_replay, "step " + std::to_string(i) + " (" + move_kind_name(script[i].kind) + "): " + err.what());
    }
  }
  return out;
}

}  // namespace pk
