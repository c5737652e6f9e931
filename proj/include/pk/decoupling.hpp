#pragma once

// The decoupling isomorphism Phi: K -> FR and its inverse Psi on paired graphs.

#include "pk/fock_rosly.hpp"

namespace pk {

// p(e) = p_f(e) o f(e) o r(e) o p_b(e)^{-1}, running from the cilium of s(e)
// to the cilium of t(e).
inline Path edge_path(const RibbonGraph& g, int e) {
  const Path pb = vertex_path(g, g.source(e), g.end_pos(e, End::source));
  const Path pf = vertex_path(g, g.target(e), g.end_pos(e, End::target));
  return compose({pf, letter(Gen::f, e), letter(Gen::r, e), inverse(pb)});
}

class DecouplingPaths {
 public:
  explicit DecouplingPaths(const RibbonGraph& g) : g_(g) {
    if (!is_paired(g)) throw Error(Errc::not_paired, "run pair_graph first");
    const int E = g.num_edges();
    for (int e = 0; e < E; ++e) {
      pe_.push_back(pk::edge_path(g, e));
      pl_.push_back(face_path(g, g.left_face(e), g.side_pos(e, Dir::minus)));
      pr_.push_back(face_path(g, g.right_face(e), g.side_pos(e, Dir::plus)));
      check_path(g, pe_.back());
    }
  }

  const RibbonGraph& graph() const { return g_; }
  const Path& edge_path(int e) const { return pe_.at(e); }
  const Path& left_path(int e) const { return pl_.at(e); }
  const Path& right_path(int e) const { return pr_.at(e); }

  template <class B>
  Point<B> phi(const DoubleGroup<B>& G, const Point<B>& x) const {
    Point<B> y;
    for (int e = 0; e < g_.num_edges(); ++e) y.push_back(hol_unchecked(G, pe_[e], x));
    return y;
  }

  template <class B>
  Point<B> psi(const DoubleGroup<B>& G, const Point<B>& y) const {
    Point<B> x;
    for (int e = 0; e < g_.num_edges(); ++e) {
      const auto a = G.pi_minus(hol_fr_unchecked(G, pl_[e], y));
      const auto c = G.pi_minus(hol_fr_unchecked(G, pr_[e], y));
      x.push_back(G.mul(G.inv(a), y[e], c));
    }
    return x;
  }

 private:
  RibbonGraph g_;
  std::vector<Path> pe_, pl_, pr_;
};

template <class B>
Point<B> phi(const DoubleGroup<B>& G, const RibbonGraph& g, const Point<B>& x) {
  return DecouplingPaths(g).phi(G, x);
}

template <class B>
Point<B> psi(const DoubleGroup<B>& G, const RibbonGraph& g, const Point<B>& y) {
  return DecouplingPaths(g).psi(G, y);
}

// g acting at v on Phi(x) against Phi(pi_-(g) at f after pi_+(g) at v), for a
// site (v, f).
template <class B>
double equivariance_residual(const DoubleGroup<B>& G, const DecouplingPaths& dp, int v, int f,
                             const typename B::Element& h, const Point<B>& x) {
  const RibbonGraph& g = dp.graph();
  const auto [hm, hp] = G.factorize(h);
  const auto lhs = fr_vertex_action(G, g, v, h, dp.phi(G, x));
  const auto rhs = dp.phi(G, face_action(G, g, f, hm, vertex_action(G, g, v, hp, x)));
  return point_distance(G, lhs, rhs);
}

// Hol_FR(p(v) o p(f)) o Phi against Hol(p(v) o p(f)) for a site (v, f).
template <class B>
double intertwining_residual(const DoubleGroup<B>& G, const DecouplingPaths& dp, int v, int f, const Point<B>& x) {
  const RibbonGraph& g = dp.graph();
  const Path p = compose(vertex_path(g, v), face_path(g, f));
  return G.distance(hol_fr_unchecked(G, p, dp.phi(G, x)), hol_unchecked(G, p, x));
}

// Reversing e before or after Phi.
template <class B>
double reversal_residual(const DoubleGroup<B>& G, const DecouplingPaths& dp, int e, const Point<B>& x) {
  const RibbonGraph& g = dp.graph();
  const DecouplingPaths rev(reverse_edge(g, g.edge_id(e)).graph);
  return point_distance(G, rev.phi(G, reverse_edge_point_map(G, e, x)), fr_reverse_edge(G, e, dp.phi(G, x)));
}

}  // namespace pk
