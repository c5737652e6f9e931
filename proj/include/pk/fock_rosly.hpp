#pragma once

// Fock-Rosly spaces FR = G^E with r(v) = r at every vertex.

#include "pk/kitaev_space.hpp"

namespace pk {

// Global bivector in the right-trivialized frame, edge blocks of size d.
// At a vertex with ends i < j the term -M_i (r_a + s_ij r_s) M_j^T is added to
// block (e_i, e_j), where M = -1 for an incoming end, M = Ad(g_e) for an
// outgoing end, and s_ij = sign(i - j).
template <class B>
Mat fr_bivector(const DoubleGroup<B>& G, const RibbonGraph& g, const Point<B>& x) {
  const int d = G.dim(), E = g.num_edges();
  Mat W = Mat::Zero(E * d, E * d);
  std::vector<Mat> Ad(E);
  for (int e = 0; e < E; ++e) Ad[e] = G.adjoint(x[e]);
  const Mat I = Mat::Identity(d, d);
  for (int v = 0; v < g.num_vertices(); ++v) {
    const auto& ends = g.ends(v);
    const int m = static_cast<int>(ends.size());
    for (int i = 0; i < m; ++i) {
      const Mat Mi = ends[i].end == End::target ? Mat(-I) : Ad[ends[i].edge];
      for (int j = 0; j < m; ++j) {
        const Mat Mj = ends[j].end == End::target ? Mat(-I) : Ad[ends[j].edge];
        const double s = i > j ? 1.0 : (i < j ? -1.0 : 0.0);
        W.block(ends[i].edge * d, ends[j].edge * d, d, d) -= Mi * (G.ra() + s * G.rs()) * Mj.transpose();
      }
    }
  }
  return W;
}

// Gauge action at v: h g h^-1 on loops, h g on incoming edges, g h^-1 on
// outgoing edges.
template <class B>
Point<B> fr_vertex_action(const DoubleGroup<B>& G, const RibbonGraph& g, int v, const typename B::Element& h,
                          Point<B> x) {
  const auto hi = G.inv(h);
  for (int e = 0; e < g.num_edges(); ++e) {
    const bool in = g.target(e) == v, out = g.source(e) == v;
    if (in && out)
      x[e] = G.mul(h, x[e], hi);
    else if (in)
      x[e] = G.mul(h, x[e]);
    else if (out)
      x[e] = G.mul(x[e], hi);
  }
  return x;
}

// Hol_FR(r(e)) = Hol_FR(l(e)) = g_e; edge ends carry the identity.
template <class B>
typename B::Element hol_fr_unchecked(const DoubleGroup<B>& G, const Path& p, const Point<B>& x) {
  return path_product(G, p, [&](Gen gen, int e) {
    return (gen == Gen::r || gen == Gen::l) ? x[e] : G.identity();
  });
}

template <class B>
typename B::Element hol_fr(const DoubleGroup<B>& G, const RibbonGraph& g, const Path& p, const Point<B>& x) {
  check_path(g, p);
  if (static_cast<int>(x.size()) != g.num_edges()) throw Error(Errc::dimension_mismatch, "point does not cover edges");
  return hol_fr_unchecked(G, p, x);
}

template <class B>
struct Transported {
  RibbonGraph graph;
  Point<B> point;
  std::vector<MoveRecord> records;
};

template <class B>
Point<B> fr_reverse_edge(const DoubleGroup<B>& G, int e, Point<B> x) {
  x.at(e) = G.inv(x[e]);
  return x;
}

// Copies values by edge id from one graph to another; ids missing in `from`
// are left at the identity.
template <class B>
Point<B> carry_by_id(const DoubleGroup<B>& G, const RibbonGraph& from, const Point<B>& x, const RibbonGraph& to) {
  Point<B> y(to.num_edges(), G.identity());
  for (int e = 0; e < to.num_edges(); ++e)
    if (from.has_edge(to.edge_id(e))) y[e] = x[from.edge_index(to.edge_id(e))];
  return y;
}

// Glues the two edges at a bivalent vertex: g' = g_{e2} g_{e1}.
template <class B>
Transported<B> fr_glue_edges(const DoubleGroup<B>& G, const RibbonGraph& g, const std::string& vm, const Point<B>& x) {
  auto res = glue_bivalent(g, vm);
  RibbonGraph cur = g;
  Point<B> y = x;
  for (const auto& rec : res.records) {
    if (rec.kind == MoveKind::reverse) {
      y = fr_reverse_edge(G, cur.edge_index(rec.target), y);
      cur = reverse_edge(cur, rec.target).graph;
      continue;
    }
    const auto [i1, i2] = bivalent_edges(cur, cur.vertex_index(vm));
    Point<B> z = carry_by_id(G, cur, y, res.graph);
    z[res.graph.edge_index(rec.ids[0])] = G.mul(y[i2], y[i1]);
    y = std::move(z);
  }
  return {res.graph, y, res.records};
}

template <class B>
Transported<B> fr_erase_edge(const DoubleGroup<B>& G, const RibbonGraph& g, const std::string& e, const Point<B>& x,
                             const std::string& keep = "") {
  auto res = erase_edge(g, e, keep);
  return {res.graph, carry_by_id(G, g, x, res.graph), res.records};
}

// Right inverse of fr_erase_edge on points flat at f_flat: reinserts e with the
// unique value that makes the holonomy of f_flat trivial.
template <class B>
Point<B> fr_flat_section(const DoubleGroup<B>& G, const RibbonGraph& full, const std::string& e_id,
                         const std::string& f_flat, const RibbonGraph& reduced, const Point<B>& xr) {
  const int e = full.edge_index(e_id);
  const int f = full.face_index(f_flat);
  if (full.left_face(e) == full.right_face(e))
    throw Error(Errc::no_unique_solution, "edge has the same face on both sides");
  if (full.left_face(e) != f && full.right_face(e) != f)
    throw Error(Errc::precondition_violated, "edge is not adjacent to the flat face");
  Point<B> x = carry_by_id(G, reduced, xr, full);
  const StepRef mine{e, full.right_face(e) == f ? Dir::plus : Dir::minus};
  auto lower = G.identity(), upper = G.identity();
  bool seen = false;
  for (const auto& s : full.steps(f)) {
    if (s == mine) {
      seen = true;
      continue;
    }
    const auto w = s.dir == Dir::plus ? x[s.edge] : G.inv(x[s.edge]);
    if (seen)
      upper = G.mul(w, upper);
    else
      lower = G.mul(w, lower);
  }
  const auto wp = G.mul(G.inv(upper), G.inv(lower));
  x[e] = mine.dir == Dir::plus ? wp : G.inv(wp);
  return x;
}

// One step of the reduction to a single face: erase `edge`, absorbing the flat
// face `flat` into its neighbour.
struct ReductionStep {
  RibbonGraph before;
  RibbonGraph after;
  std::string edge;
  std::string flat;
};

// Erases edges until only `keep_face` remains; every other face is absorbed
// while it is flat. The face absorbed at each step is adjacent to the edge and
// different from the face on the other side.
inline std::vector<ReductionStep> moduli_reduction_plan(const RibbonGraph& g, const std::string& keep_face) {
  g.face_index(keep_face);
  std::vector<ReductionStep> plan;
  RibbonGraph cur = g;
  while (cur.num_faces() > 1) {
    bool done = false;
    for (int e = 0; e < cur.num_edges() && !done; ++e) {
      const int fl = cur.left_face(e), fr = cur.right_face(e);
      if (fl == fr) continue;
      // Absorb a face other than keep_face, preferring to keep the neighbour.
      int absorbed = -1, survivor = -1;
      if (cur.face_id(fl) != keep_face) absorbed = fl, survivor = fr;
      else if (cur.face_id(fr) != keep_face) absorbed = fr, survivor = fl;
      if (absorbed < 0) continue;
      const std::string flat = cur.face_id(absorbed);
      auto res = erase_edge(cur, cur.edge_id(e), cur.face_id(survivor));
      plan.push_back({cur, res.graph, cur.edge_id(e), flat});
      cur = res.graph;
      done = true;
    }
    if (!done) throw Error(Errc::precondition_violated, "no erasable edge between distinct faces");
  }
  return plan;
}

}  // namespace pk
