#pragma once

// Phase space K = G_H^E: holonomies along thickened-graph paths, flatness,
// vertex/face/site actions and sampling of flat points.

#include "pk/double_group.hpp"
#include "pk/ribbon_graph.hpp"

#include <set>
#include <string>
#include <vector>

namespace pk {

template <class B>
using Point = std::vector<typename B::Element>;

template <class B>
Point<B> identity_point(const DoubleGroup<B>& G, const RibbonGraph& g) {
  return Point<B>(g.num_edges(), G.identity());
}

template <class B>
Point<B> random_point(const DoubleGroup<B>& G, const RibbonGraph& g, Rng& rng, double radius = 0.5) {
  Point<B> p;
  for (int e = 0; e < g.num_edges(); ++e) p.push_back(G.random(rng, radius));
  return p;
}

template <class B>
double point_distance(const DoubleGroup<B>& G, const Point<B>& a, const Point<B>& b) {
  if (a.size() != b.size()) throw Error(Errc::dimension_mismatch, "points on different edge sets");
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, G.distance(a[i], b[i]));
  return m;
}

// Hol(r) = pi_+(g), Hol(l) = pi_+(g^-1)^-1, Hol(f) = pi_-(g), Hol(b) = pi_-(g^-1)^-1.
template <class B>
typename B::Element generator_hol(const DoubleGroup<B>& G, Gen gen, const typename B::Element& g) {
  switch (gen) {
    case Gen::r: return G.pi_plus(g);
    case Gen::l: return G.inv(G.pi_plus(G.inv(g)));
    case Gen::f: return G.pi_minus(g);
    case Gen::b: return G.inv(G.pi_minus(G.inv(g)));
  }
  return G.identity();
}

// Ordered product of generator values; shared by the Kitaev and Fock-Rosly
// holonomy functors.
template <class B, class GenFn>
typename B::Element path_product(const DoubleGroup<B>& G, const Path& p, GenFn&& gen_value) {
  auto prod = G.identity();
  int count = 0;
  for (const auto& a : p.word) {
    auto h = gen_value(a.gen, a.edge);
    if (a.exp < 0) h = G.inv(h);
    prod = G.mul(prod, h);
    if (++count % 32 == 0) prod = G.normalize(prod);
  }
  return prod;
}

template <class B>
typename B::Element hol_unchecked(const DoubleGroup<B>& G, const Path& p, const Point<B>& x) {
  return path_product(G, p, [&](Gen gen, int e) { return generator_hol(G, gen, x[e]); });
}

template <class B>
typename B::Element hol(const DoubleGroup<B>& G, const RibbonGraph& g, const Path& p, const Point<B>& x) {
  check_path(g, p);
  if (static_cast<int>(x.size()) != g.num_edges()) throw Error(Errc::dimension_mismatch, "point does not cover edges");
  return hol_unchecked(G, p, x);
}

template <class B>
typename B::Element vertex_holonomy(const DoubleGroup<B>& G, const RibbonGraph& g, int v, const Point<B>& x) {
  return hol_unchecked(G, vertex_path(g, v), x);
}
template <class B>
typename B::Element face_holonomy(const DoubleGroup<B>& G, const RibbonGraph& g, int f, const Point<B>& x) {
  return hol_unchecked(G, face_path(g, f), x);
}
template <class B>
typename B::Element site_holonomy(const DoubleGroup<B>& G, const RibbonGraph& g, int v, int f, const Point<B>& x) {
  if (!is_site(g, v, f))
    throw Error(Errc::not_a_site, "(" + g.vertex_id(v) + ", " + g.face_id(f) + ")");
  return G.mul(vertex_holonomy(G, g, v, x), face_holonomy(G, g, f, x));
}

struct FlatnessSpec {
  std::set<int> vertices;
  std::set<int> faces;

  static FlatnessSpec from_ids(const RibbonGraph& g, const std::vector<std::string>& vs,
                               const std::vector<std::string>& fs) {
    FlatnessSpec s;
    for (const auto& v : vs) s.vertices.insert(g.vertex_index(v));
    for (const auto& f : fs) s.faces.insert(g.face_index(f));
    return s;
  }
  // Everything except the given sites.
  static FlatnessSpec all_but(const RibbonGraph& g, const std::vector<std::pair<int, int>>& free_sites) {
    FlatnessSpec s;
    for (int v = 0; v < g.num_vertices(); ++v) s.vertices.insert(v);
    for (int f = 0; f < g.num_faces(); ++f) s.faces.insert(f);
    for (auto [v, f] : free_sites) {
      s.vertices.erase(v);
      s.faces.erase(f);
    }
    return s;
  }
};

template <class B>
double flatness_residual(const DoubleGroup<B>& G, const RibbonGraph& g, const Point<B>& x, const FlatnessSpec& L) {
  double m = 0;
  for (int v : L.vertices) m = std::max(m, G.distance(vertex_holonomy(G, g, v, x), G.identity()));
  for (int f : L.faces) m = std::max(m, G.distance(face_holonomy(G, g, f, x), G.identity()));
  return m;
}

template <class B>
bool is_flat(const DoubleGroup<B>& G, const RibbonGraph& g, const Point<B>& x, const FlatnessSpec& L,
             double tol = 1e-9) {
  return flatness_residual(G, g, x, L) < tol;
}

template <class B>
Point<B> vertex_action(const DoubleGroup<B>& G, const RibbonGraph& g, int v, const typename B::Element& alpha,
                       Point<B> x) {
  if (!G.in_plus(alpha)) throw Error(Errc::not_in_plus_subgroup, "vertex action parameter");
  const auto& ends = g.ends(v);
  for (int k = static_cast<int>(ends.size()) - 1; k >= 0; --k) {
    const auto c = hol_unchecked(G, vertex_path(g, v, k), x);
    const auto a = G.pi_plus(G.mul(alpha, c));
    auto& ge = x[ends[k].edge];
    ge = ends[k].end == End::target ? G.mul(a, ge) : G.mul(ge, G.inv(a));
  }
  return x;
}

template <class B>
Point<B> face_action(const DoubleGroup<B>& G, const RibbonGraph& g, int f, const typename B::Element& xm,
                     Point<B> x) {
  if (!G.in_minus(xm)) throw Error(Errc::not_in_minus_subgroup, "face action parameter");
  const auto& st = g.steps(f);
  const auto xinv = G.inv(xm);
  for (int k = static_cast<int>(st.size()) - 1; k >= 0; --k) {
    const auto d = hol_unchecked(G, face_path(g, f, k), x);
    const auto a = G.pi_minus(G.mul(d, xinv));
    auto& ge = x[st[k].edge];
    ge = st[k].dir == Dir::plus ? G.mul(ge, a) : G.mul(G.inv(a), ge);
  }
  return x;
}

template <class B>
Point<B> site_action(const DoubleGroup<B>& G, const RibbonGraph& g, int v, int f, const typename B::Element& h,
                     const Point<B>& x) {
  if (!is_site(g, v, f)) throw Error(Errc::not_a_site, "(" + g.vertex_id(v) + ", " + g.face_id(f) + ")");
  const auto [hm, hp] = G.factorize(h);
  return face_action(G, g, f, hm, vertex_action(G, g, v, hp, x));
}

// Point map that accompanies reverse_edge: inverts the element on e.
template <class B>
Point<B> reverse_edge_point_map(const DoubleGroup<B>& G, int e, Point<B> x) {
  x.at(e) = G.inv(x[e]);
  return x;
}

// Image of a path under the functor I_e attached to reversing e.
inline Path reverse_edge_path(const Path& p, int e) {
  Path out;
  for (const auto& a : p.word) {
    if (a.edge != e) {
      out.word.push_back(a);
      continue;
    }
    Gen g = a.gen;
    switch (a.gen) {
      case Gen::r: g = Gen::l; break;
      case Gen::l: g = Gen::r; break;
      case Gen::f: g = Gen::b; break;
      case Gen::b: g = Gen::f; break;
    }
    out.word.push_back({g, e, -a.exp});
  }
  return out;
}

// Flat sampling. Edges are ordered by a growth process started at a free
// vertex and an adjacent free face. Each edge is oriented away from the grown
// region; if its far vertex or its right face is flat and not yet reached, the
// edge is the one that closes that constraint. Elements are then assigned in
// reverse order, so every constraint sees all its other edges already fixed.
// An edge oriented s -> t is written g = X Y with X = pi_-(g) (its f-end) and
// Y = pi_+(g) (its r-side); a flipped edge uses g^{-1} = X Y, i.e. its b-end
// and l-side.
template <class B>
Point<B> sample_flat(const DoubleGroup<B>& G, const RibbonGraph& g, const FlatnessSpec& L, Rng& rng,
                     double radius = 0.5) {
  using El = typename B::Element;
  const int V = g.num_vertices(), E = g.num_edges(), F = g.num_faces();
  auto face_at_corner = [&](int v, int k) {
    const auto& ends = g.ends(v);
    const EndRef& i = ends[k % ends.size()];
    return i.end == End::source ? g.right_face(i.edge) : g.left_face(i.edge);
  };

  int v0 = -1, f0 = -1;
  for (int v = 0; v < V && v0 < 0; ++v) {
    if (L.vertices.count(v)) continue;
    for (int k = 0; k < g.valence(v); ++k) {
      const int f = face_at_corner(v, k + 1);
      if (!L.faces.count(f)) {
        v0 = v;
        f0 = f;
        break;
      }
    }
  }
  if (v0 < 0) throw Error(Errc::no_free_site, "no free vertex with an adjacent free face");

  struct Step {
    int edge;
    bool flipped;
    bool solve_vertex;
    bool solve_face;
  };
  std::vector<Step> order;
  std::vector<char> edone(E, 0), vdone(V, 0), fdone(F, 0);
  std::vector<int> vlist{v0};
  vdone[v0] = 1;
  fdone[f0] = 1;
  for (int n = 0; n < E; ++n) {
    bool found = false;
    for (std::size_t wi = 0; wi < vlist.size() && !found; ++wi) {
      const int w = vlist[wi];
      const auto& ends = g.ends(w);
      for (int k = 0; k < static_cast<int>(ends.size()) && !found; ++k) {
        const int e = ends[k].edge;
        if (edone[e] || !fdone[face_at_corner(w, k + 1)]) continue;
        const bool flipped = ends[k].end == End::target;
        const int far = flipped ? g.source(e) : g.target(e);
        const int rf = flipped ? g.left_face(e) : g.right_face(e);
        Step s{e, flipped, !vdone[far] && L.vertices.count(far) != 0, !fdone[rf] && L.faces.count(rf) != 0};
        order.push_back(s);
        edone[e] = 1;
        if (!vdone[far]) vdone[far] = 1, vlist.push_back(far);
        fdone[g.left_face(e)] = fdone[g.right_face(e)] = 1;
        found = true;
      }
    }
    if (!found) throw Error(Errc::disconnected, "flat sampling could not reach every edge");
  }

  Point<B> x(E, G.identity());
  std::vector<char> assigned(E, 0);
  auto end_quarter = [&](const EndRef& i) {
    const El& h = x[i.edge];
    return i.end == End::target ? G.pi_minus(h) : G.pi_minus(G.inv(h));
  };
  auto side_quarter = [&](const StepRef& s) {
    const El& h = x[s.edge];
    return s.dir == Dir::plus ? G.pi_plus(h) : G.pi_plus(G.inv(h));
  };
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const int e = it->edge;
    El X = G.random_minus(rng, radius);
    El Y = G.random_plus(rng, radius);
    if (it->solve_vertex) {
      const int u = it->flipped ? g.source(e) : g.target(e);
      const EndRef mine{e, it->flipped ? End::source : End::target};
      const auto& ends = g.ends(u);
      El before = G.identity(), after = G.identity();
      bool seen = false;
      for (const auto& i : ends) {
        if (i == mine) {
          seen = true;
          continue;
        }
        if (!assigned[i.edge]) throw Error(Errc::precondition_violated, "internal: flat sampling order");
        (seen ? after : before) = G.mul(seen ? after : before, end_quarter(i));
      }
      X = G.mul(G.inv(before), G.inv(after));
    }
    if (it->solve_face) {
      const int f = it->flipped ? g.left_face(e) : g.right_face(e);
      const StepRef mine{e, it->flipped ? Dir::minus : Dir::plus};
      const auto& st = g.steps(f);
      // Hol^f = w_n ... w_1; split around our own side w_p.
      El lower = G.identity(), upper = G.identity();  // w_{p-1}..w_1 and w_n..w_{p+1}
      bool seen = false;
      for (const auto& s : st) {
        if (s == mine) {
          seen = true;
          continue;
        }
        if (!assigned[s.edge]) throw Error(Errc::precondition_violated, "internal: flat sampling order");
        if (seen)
          upper = G.mul(side_quarter(s), upper);
        else
          lower = G.mul(side_quarter(s), lower);
      }
      Y = G.mul(G.inv(upper), G.inv(lower));
    }
    const El XY = G.mul(X, Y);
    x[e] = it->flipped ? G.inv(XY) : XY;
    assigned[e] = 1;
  }
  return x;
}

}  // namespace pk
