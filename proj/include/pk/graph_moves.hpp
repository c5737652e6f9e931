#pragma once

// Point maps that accompany the combinatorial moves of ribbon_graph.

#include "pk/fock_rosly.hpp"

namespace pk {

// Forward map along one primitive record applied to `before`.
//   split_edge:    e1 = g, e2 = pi_-(g)
//   double_edge:   e1 = g, e2 = pi_+(g)
//   glue_bivalent: e' = g_{e2} pi_+(g_{e1})
//   glue_face:     e' = pi_-(g_{e1}) g_{e2}
//   reverse:       g^{-1};  erase: drop;  shift_cilium: identity
template <class B>
Transported<B> forward_point_map(const DoubleGroup<B>& G, const RibbonGraph& before, const MoveRecord& rec,
                                 const Point<B>& x) {
  if (rec.kind == MoveKind::pair) throw Error(Errc::move_replay, "pair records must be expanded");
  auto res = apply_move(before, rec);
  const RibbonGraph& after = res.graph;
  Point<B> y = carry_by_id(G, before, x, after);
  switch (rec.kind) {
    case MoveKind::reverse: {
      const int e = after.edge_index(rec.target);
      y[e] = G.inv(y[e]);
      break;
    }
    case MoveKind::split_edge: {
      const auto& g = x[before.edge_index(rec.target)];
      y[after.edge_index(rec.target)] = g;
      y[after.edge_index(rec.ids.at(0))] = G.pi_minus(g);
      break;
    }
    case MoveKind::double_edge: {
      const auto& g = x[before.edge_index(rec.target)];
      y[after.edge_index(rec.target)] = g;
      y[after.edge_index(rec.ids.at(0))] = G.pi_plus(g);
      break;
    }
    case MoveKind::glue_bivalent: {
      const auto [i1, i2] = bivalent_edges(before, before.vertex_index(rec.target));
      y[after.edge_index(rec.ids.at(0))] = G.mul(x[i2], G.pi_plus(x[i1]));
      break;
    }
    case MoveKind::glue_face: {
      const auto& st = before.steps(before.face_index(rec.target));
      y[after.edge_index(rec.ids.at(0))] = G.mul(G.pi_minus(x[st[0].edge]), x[st[1].edge]);
      break;
    }
    case MoveKind::erase:
    case MoveKind::shift_cilium:
    case MoveKind::pair:
      break;
  }
  return {after, y, res.records};
}

template <class B>
Transported<B> forward_point_map(const DoubleGroup<B>& G, const RibbonGraph& g, const std::vector<MoveRecord>& recs,
                                 const Point<B>& x) {
  Transported<B> t{g, x, {}};
  for (std::size_t i = 0; i < recs.size(); ++i) {
    try {
      auto s = forward_point_map(G, t.graph, recs[i], t.point);
      t.graph = std::move(s.graph);
      t.point = std::move(s.point);
      t.records.insert(t.records.end(), s.records.begin(), s.records.end());
    } catch (const Error& err) {
      if (err.code() == Errc::move_replay) throw;
      throw Error(Errc::move_replay, "step " + std::to_string(i) + " (" + move_kind_name(recs[i].kind) + "): " + err.what());
    }
  }
  return t;
}

// Undoes one record: maps a point on `after` to a point on `before`. Split and
// double records are undone by the corresponding glue maps.
template <class B>
Point<B> backward_point_map(const DoubleGroup<B>& G, const RibbonGraph& before, const RibbonGraph& after,
                            const MoveRecord& rec, const Point<B>& y) {
  Point<B> x = carry_by_id(G, after, y, before);
  switch (rec.kind) {
    case MoveKind::reverse: {
      const int e = before.edge_index(rec.target);
      x[e] = G.inv(x[e]);
      break;
    }
    case MoveKind::split_edge:
      x[before.edge_index(rec.target)] =
          G.mul(y[after.edge_index(rec.ids.at(0))], G.pi_plus(y[after.edge_index(rec.target)]));
      break;
    case MoveKind::double_edge:
      x[before.edge_index(rec.target)] =
          G.mul(G.pi_minus(y[after.edge_index(rec.target)]), y[after.edge_index(rec.ids.at(0))]);
      break;
    case MoveKind::shift_cilium:
      break;
    default:
      throw Error(Errc::move_replay, std::string("no backward map for ") + move_kind_name(rec.kind));
  }
  return x;
}

template <class B>
Transported<B> split_vertex_map(const DoubleGroup<B>& G, const RibbonGraph& g, const std::string& e,
                                const Point<B>& x) {
  return forward_point_map(G, g, split_edge(g, e).records, x);
}

template <class B>
Transported<B> split_face_map(const DoubleGroup<B>& G, const RibbonGraph& g, const std::string& e,
                              const Point<B>& x) {
  return forward_point_map(G, g, double_edge(g, e).records, x);
}

template <class B>
Transported<B> glue_vertex_map(const DoubleGroup<B>& G, const RibbonGraph& g, const std::string& vm,
                               const Point<B>& x) {
  return forward_point_map(G, g, glue_bivalent(g, vm).records, x);
}

template <class B>
Transported<B> glue_face_map(const DoubleGroup<B>& G, const RibbonGraph& g, const std::string& fm,
                             const Point<B>& x) {
  return forward_point_map(G, g, glue_two_edge_face(g, fm).records, x);
}

// The chain of graphs produced by pair_graph, with the records between them.
struct PairingChain {
  std::vector<RibbonGraph> graphs;  // graphs[0] original, graphs.back() paired
  std::vector<MoveRecord> records;  // records[i] takes graphs[i] to graphs[i+1]
};

inline PairingChain pairing_chain(const RibbonGraph& g, const std::vector<std::pair<std::string, std::string>>& sites) {
  PairingChain c;
  c.records = pair_graph(g, sites).records;
  c.graphs.push_back(g);
  for (const auto& r : c.records) c.graphs.push_back(apply_move(c.graphs.back(), r).graph);
  return c;
}

// psi: K' -> K from the paired graph back to the original one.
template <class B>
Point<B> pair_graph_map(const DoubleGroup<B>& G, const PairingChain& c, const Point<B>& y) {
  if (static_cast<int>(y.size()) != c.graphs.back().num_edges())
    throw Error(Errc::dimension_mismatch, "point does not match the paired graph");
  Point<B> x = y;
  for (std::size_t i = c.records.size(); i-- > 0;) {
    try {
      x = backward_point_map(G, c.graphs[i], c.graphs[i + 1], c.records[i], x);
    } catch (const Error& err) {
      throw Error(Errc::move_replay, "step " + std::to_string(i) + ": " + err.what());
    }
  }
  return x;
}

template <class B>
Point<B> pair_graph_map(const DoubleGroup<B>& G, const RibbonGraph& g,
                        const std::vector<std::pair<std::string, std::string>>& sites, const Point<B>& y) {
  return pair_graph_map(G, pairing_chain(g, sites), y);
}

// Distance between the action at v after moving its cilium one step and
// pi_+(alpha Hol(p_1(v))^{-1}) acting with the original cilium.
template <class B>
double cilium_shift_residual_vertex(const DoubleGroup<B>& G, const RibbonGraph& g, int v,
                                    const typename B::Element& alpha, const Point<B>& x, double flat_tol = 1e-9) {
  if (G.distance(vertex_holonomy(G, g, v, x), G.identity()) > flat_tol)
    throw Error(Errc::not_flat, "point is not flat at vertex '" + g.vertex_id(v) + "'");
  const RibbonGraph shifted = shift_cilium(g, g.vertex_id(v), false, 1).graph;
  const auto h1 = hol_unchecked(G, vertex_path(g, v, 1), x);
  const auto a2 = G.pi_plus(G.mul(alpha, G.inv(h1)));
  return point_distance(G, vertex_action(G, shifted, v, alpha, x), vertex_action(G, g, v, a2, x));
}

// Face version: x acting after the shift equals pi_-((x Hol(p_1(f)))^{-1})^{-1}
// acting with the original cilium.
template <class B>
double cilium_shift_residual_face(const DoubleGroup<B>& G, const RibbonGraph& g, int f,
                                  const typename B::Element& xm, const Point<B>& x, double flat_tol = 1e-9) {
  if (G.distance(face_holonomy(G, g, f, x), G.identity()) > flat_tol)
    throw Error(Errc::not_flat, "point is not flat at face '" + g.face_id(f) + "'");
  const RibbonGraph shifted = shift_cilium(g, g.face_id(f), true, 1).graph;
  const auto h1 = hol_unchecked(G, face_path(g, f, 1), x);
  const auto x2 = G.inv(G.pi_minus(G.inv(G.mul(xm, h1))));
  return point_distance(G, face_action(G, shifted, f, xm, x), face_action(G, g, f, x2, x));
}

}  // namespace pk
