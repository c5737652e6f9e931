#include "support.hpp"

using namespace pk;
using pk::test::BackendTest;
namespace ref = pk::reference;

TYPED_TEST_SUITE(BackendTest, pk::test::Backends);

namespace {

std::vector<ref::Named> move_graphs() {
  return {{"square", ref::square()}, {"theta", ref::theta()}, {"loop", ref::loop()}, {"torus", ref::torus()}};
}

struct VertexSplit {
  RibbonGraph graph;
  std::string vm;
};

struct FaceSplit {
  RibbonGraph graph;
  std::string fm;
};

VertexSplit split_at(const RibbonGraph& g, int e) {
  return {split_edge(g, g.edge_id(e), "new_e", "vm").graph, "vm"};
}

FaceSplit double_at(const RibbonGraph& g, int e) {
  return {double_edge(g, g.edge_id(e), "new_e", "fm").graph, "fm"};
}

// Edges into and out of a bivalent vertex: t(e1) = v = s(e2).
std::pair<int, int> in_out(const RibbonGraph& g, int v) {
  int in = -1, out = -1;
  for (const auto& end : g.ends(v)) (end.end == End::target ? in : out) = end.edge;
  return {in, out};
}

}  // namespace

TYPED_TEST(BackendTest, IdentityPointIsPreserved) {
  const auto& G = this->G;
  const auto g = ref::square();
  const auto x = identity_point(G, g);
  const auto s = split_vertex_map(G, g, "e2", x);
  EXPECT_EQ(point_distance(G, s.point, identity_point(G, s.graph)), 0.0);
  const auto d = split_face_map(G, g, "e2", x);
  EXPECT_EQ(point_distance(G, d.point, identity_point(G, d.graph)), 0.0);
  const auto sv = split_at(g, 0);
  EXPECT_EQ(point_distance(G, glue_vertex_map(G, sv.graph, sv.vm, identity_point(G, sv.graph)).point, x), 0.0);
  const auto sf = double_at(g, 0);
  EXPECT_EQ(point_distance(G, glue_face_map(G, sf.graph, sf.fm, identity_point(G, sf.graph)).point, x), 0.0);
}

TYPED_TEST(BackendTest, SplitOutputsAreFlatAndGlueBack) {
  const auto& G = this->G;
  for (const auto& [name, g] : move_graphs()) {
    SCOPED_TRACE(name);
    Rng rng(1);
    double flat = 0, back = 0;
    for (int i = 0; i < 20; ++i) {
      const auto x = random_point(G, g, rng);
      for (int e = 0; e < g.num_edges(); ++e) {
        const auto s = split_vertex_map(G, g, g.edge_id(e), x);
        const int created = s.graph.num_vertices() - 1;
        flat = std::max(flat, G.distance(vertex_holonomy(G, s.graph, created, s.point), G.identity()));
        back = std::max(back, point_distance(G, glue_vertex_map(G, s.graph, s.graph.vertex_id(created), s.point).point, x));
        if (g.is_loop(e)) continue;
        const auto d = split_face_map(G, g, g.edge_id(e), x);
        const int fcreated = d.graph.num_faces() - 1;
        flat = std::max(flat, G.distance(face_holonomy(G, d.graph, fcreated, d.point), G.identity()));
        back = std::max(back, point_distance(G, glue_face_map(G, d.graph, d.graph.face_id(fcreated), d.point).point, x));
      }
    }
    EXPECT_LT(flat, 1e-10);
    EXPECT_LT(back, 1e-10);
  }
}

TYPED_TEST(BackendTest, GlueVertexEdgeIsPathHolonomy) {
  // The new edge carries Hol(f(e2) r(e2) r(e1)) of the input.
  const auto& G = this->G;
  for (const auto& [name, g] : move_graphs()) {
    SCOPED_TRACE(name);
    Rng rng(2);
    for (int e = 0; e < g.num_edges(); ++e) {
      const auto s = split_at(g, e);
      const int v = s.graph.vertex_index(s.vm);
      const auto [e1, e2] = in_out(s.graph, v);
      ASSERT_GE(e1, 0);
      ASSERT_GE(e2, 0);
      const auto y = random_point(G, s.graph, rng);
      const auto glued = glue_vertex_map(G, s.graph, s.vm, y);
      const Path p = compose({letter(Gen::f, e2), letter(Gen::r, e2), letter(Gen::r, e1)});
      const int ne = glued.graph.edge_index(s.graph.edge_id(e1));
      EXPECT_LT(G.distance(glued.point[ne], hol_unchecked(G, p, y)), pk::test::exact_tol<TypeParam>());
      for (int k = 0; k < s.graph.num_edges(); ++k) {
        if (k == e1 || k == e2) continue;
        EXPECT_EQ(G.distance(glued.point[glued.graph.edge_index(s.graph.edge_id(k))], y[k]), 0.0);
      }
    }
  }
}

TYPED_TEST(BackendTest, GlueFaceEdgeIsPathHolonomy) {
  // p(f_m) = l(e2)^{-1} r(e1); the new edge carries Hol(f(e1) f(e2) r(e2)).
  const auto& G = this->G;
  for (const auto& [name, g] : move_graphs()) {
    SCOPED_TRACE(name);
    Rng rng(3);
    for (int e = 0; e < g.num_edges(); ++e) {
      if (g.is_loop(e)) continue;
      const auto s = double_at(g, e);
      const auto& st = s.graph.steps(s.graph.face_index(s.fm));
      ASSERT_EQ(st.size(), 2u);
      ASSERT_EQ(st[0].dir, Dir::plus);
      ASSERT_EQ(st[1].dir, Dir::minus);
      const int e1 = st[0].edge, e2 = st[1].edge;
      const auto y = random_point(G, s.graph, rng);
      const auto glued = glue_face_map(G, s.graph, s.fm, y);
      const Path p = compose({letter(Gen::f, e1), letter(Gen::f, e2), letter(Gen::r, e2)});
      EXPECT_LT(G.distance(glued.point[glued.graph.edge_index(s.graph.edge_id(e1))], hol_unchecked(G, p, y)),
                pk::test::exact_tol<TypeParam>());
    }
  }
}

TEST(GraphMoves, DoubledLoopCannotBeGlued) {
  const auto g = ref::loop();
  const auto s = double_at(g, 0);
  EXPECT_THROW(glue_two_edge_face(s.graph, s.fm), Error);
}

TYPED_TEST(BackendTest, GlueMapsForgetTheGluedAction) {
  const auto& G = this->G;
  for (const auto& [name, g] : move_graphs()) {
    SCOPED_TRACE(name);
    Rng rng(4);
    double m = 0;
    for (int e = 0; e < g.num_edges(); ++e) {
      const auto sv = split_at(g, e);
      const auto sf = double_at(g, e);
      for (int i = 0; i < 10; ++i) {
        const auto y = random_point(G, sv.graph, rng);
        const auto ay = vertex_action(G, sv.graph, sv.graph.vertex_index(sv.vm), G.random_plus(rng), y);
        m = std::max(m, point_distance(G, glue_vertex_map(G, sv.graph, sv.vm, ay).point,
                                       glue_vertex_map(G, sv.graph, sv.vm, y).point));
        if (g.is_loop(e)) continue;
        const auto z = random_point(G, sf.graph, rng);
        const auto xz = face_action(G, sf.graph, sf.graph.face_index(sf.fm), G.random_minus(rng), z);
        m = std::max(m, point_distance(G, glue_face_map(G, sf.graph, sf.fm, xz).point,
                                       glue_face_map(G, sf.graph, sf.fm, z).point));
      }
    }
    EXPECT_LT(m, 1e-10);
  }
}

TYPED_TEST(BackendTest, GlueMapsIntertwineSurvivingActionsOnFlatPoints) {
  const auto& G = this->G;
  for (const auto& [name, g] : move_graphs()) {
    SCOPED_TRACE(name);
    Rng rng(5);
    double m = 0;
    for (int e = 0; e < g.num_edges(); ++e) {
      const auto sv = split_at(g, e);
      const auto Lv = FlatnessSpec::from_ids(sv.graph, {sv.vm}, {});
      const auto sf = double_at(g, e);
      const auto Lf = FlatnessSpec::from_ids(sf.graph, {}, {sf.fm});
      for (int i = 0; i < 5; ++i) {
        const auto y = sample_flat(G, sv.graph, Lv, rng);
        const auto gy = glue_vertex_map(G, sv.graph, sv.vm, y);
        for (int w = 0; w < g.num_vertices(); ++w) {
          const auto a = G.random_plus(rng);
          const auto& id = g.vertex_id(w);
          const auto lhs = glue_vertex_map(G, sv.graph, sv.vm, vertex_action(G, sv.graph, sv.graph.vertex_index(id), a, y)).point;
          m = std::max(m, point_distance(G, lhs, vertex_action(G, gy.graph, gy.graph.vertex_index(id), a, gy.point)));
        }
        for (int f = 0; f < g.num_faces(); ++f) {
          const auto xm = G.random_minus(rng);
          const auto& id = g.face_id(f);
          const auto lhs = glue_vertex_map(G, sv.graph, sv.vm, face_action(G, sv.graph, sv.graph.face_index(id), xm, y)).point;
          m = std::max(m, point_distance(G, lhs, face_action(G, gy.graph, gy.graph.face_index(id), xm, gy.point)));
        }
        if (g.is_loop(e)) continue;
        const auto z = sample_flat(G, sf.graph, Lf, rng);
        const auto gz = glue_face_map(G, sf.graph, sf.fm, z);
        for (int w = 0; w < g.num_vertices(); ++w) {
          const auto a = G.random_plus(rng);
          const auto& id = g.vertex_id(w);
          const auto lhs = glue_face_map(G, sf.graph, sf.fm, vertex_action(G, sf.graph, sf.graph.vertex_index(id), a, z)).point;
          m = std::max(m, point_distance(G, lhs, vertex_action(G, gz.graph, gz.graph.vertex_index(id), a, gz.point)));
        }
        for (int f = 0; f < g.num_faces(); ++f) {
          const auto xm = G.random_minus(rng);
          const auto& id = g.face_id(f);
          const auto lhs = glue_face_map(G, sf.graph, sf.fm, face_action(G, sf.graph, sf.graph.face_index(id), xm, z)).point;
          m = std::max(m, point_distance(G, lhs, face_action(G, gz.graph, gz.graph.face_index(id), xm, gz.point)));
        }
      }
    }
    EXPECT_LT(m, 1e-10);
  }
}

TYPED_TEST(BackendTest, GlueMapsPreserveHolonomiesOnFlatPoints) {
  const auto& G = this->G;
  for (const auto& [name, g] : move_graphs()) {
    SCOPED_TRACE(name);
    Rng rng(6);
    double m = 0;
    for (int e = 0; e < g.num_edges(); ++e) {
      const auto sv = split_at(g, e);
      const auto sf = double_at(g, e);
      for (int i = 0; i < 5; ++i) {
        const auto y = sample_flat(G, sv.graph, FlatnessSpec::from_ids(sv.graph, {sv.vm}, {}), rng);
        const auto gy = glue_vertex_map(G, sv.graph, sv.vm, y);
        for (int w = 0; w < g.num_vertices(); ++w) {
          const auto& id = g.vertex_id(w);
          m = std::max(m, G.distance(vertex_holonomy(G, gy.graph, gy.graph.vertex_index(id), gy.point),
                                     vertex_holonomy(G, sv.graph, sv.graph.vertex_index(id), y)));
        }
        for (int f = 0; f < g.num_faces(); ++f) {
          const auto& id = g.face_id(f);
          m = std::max(m, G.distance(face_holonomy(G, gy.graph, gy.graph.face_index(id), gy.point),
                                     face_holonomy(G, sv.graph, sv.graph.face_index(id), y)));
        }
        if (g.is_loop(e)) continue;
        const auto z = sample_flat(G, sf.graph, FlatnessSpec::from_ids(sf.graph, {}, {sf.fm}), rng);
        const auto gz = glue_face_map(G, sf.graph, sf.fm, z);
        for (int w = 0; w < g.num_vertices(); ++w) {
          const auto& id = g.vertex_id(w);
          m = std::max(m, G.distance(vertex_holonomy(G, gz.graph, gz.graph.vertex_index(id), gz.point),
                                     vertex_holonomy(G, sf.graph, sf.graph.vertex_index(id), z)));
        }
        for (int f = 0; f < g.num_faces(); ++f) {
          const auto& id = g.face_id(f);
          m = std::max(m, G.distance(face_holonomy(G, gz.graph, gz.graph.face_index(id), gz.point),
                                     face_holonomy(G, sf.graph, sf.graph.face_index(id), z)));
        }
      }
    }
    EXPECT_LT(m, 1e-10);
  }
}

TYPED_TEST(BackendTest, PairGraphMapRoundtripAndFlatness) {
  const auto& G = this->G;
  for (const auto& [name, g] : move_graphs()) {
    SCOPED_TRACE(name);
    const auto [v0, f0] = sites(g).front();
    const std::vector<std::pair<std::string, std::string>> st{{g.vertex_id(v0), g.face_id(f0)}};
    const auto chain = pairing_chain(g, st);
    const auto& paired = chain.graphs.back();
    EXPECT_EQ(point_distance(G, pair_graph_map(G, chain, identity_point(G, paired)), identity_point(G, g)), 0.0);
    Rng rng(7);
    const auto L = FlatnessSpec::all_but(g, {{v0, f0}});
    // Flat on the paired graph at every vertex and face except the kept site.
    const auto Lp = FlatnessSpec::all_but(paired, {{paired.vertex_index(g.vertex_id(v0)), paired.face_index(g.face_id(f0))}});
    double back = 0, flat = 0;
    for (int i = 0; i < 20; ++i) {
      const auto x = random_point(G, g, rng);
      const auto fwd = forward_point_map(G, g, chain.records, x);
      back = std::max(back, point_distance(G, pair_graph_map(G, chain, fwd.point), x));
      const auto y = sample_flat(G, paired, Lp, rng);
      flat = std::max(flat, flatness_residual(G, g, pair_graph_map(G, chain, y), L));
    }
    EXPECT_LT(back, 1e-10);
    EXPECT_LT(flat, 1e-9);
    EXPECT_THROW(pair_graph_map(G, chain, identity_point(G, g)), Error);
  }
  // Already paired: nothing to undo.
  const auto p = ref::square_paired();
  Rng rng(8);
  const auto y = random_point(G, p, rng);
  std::vector<std::pair<std::string, std::string>> all;
  for (auto [v, f] : sites(p)) all.push_back({p.vertex_id(v), p.face_id(f)});
  EXPECT_TRUE(pairing_chain(p, all).records.empty());
  EXPECT_EQ(point_distance(G, pair_graph_map(G, p, all, y), y), 0.0);
}

TYPED_TEST(BackendTest, CiliumShiftResiduals) {
  const auto& G = this->G;
  for (const auto& [name, g] : move_graphs()) {
    SCOPED_TRACE(name);
    Rng rng(9);
    double m = 0;
    for (int i = 0; i < 20; ++i) {
      for (int v = 0; v < g.num_vertices() && g.num_vertices() > 1; ++v) {
        const auto x = sample_flat(G, g, FlatnessSpec::from_ids(g, {g.vertex_id(v)}, {}), rng);
        EXPECT_LT(cilium_shift_residual_vertex(G, g, v, G.identity(), x), 1e-12);
        m = std::max(m, cilium_shift_residual_vertex(G, g, v, G.random_plus(rng), x));
      }
      for (int f = 0; f < g.num_faces() && g.num_faces() > 1; ++f) {
        const auto x = sample_flat(G, g, FlatnessSpec::from_ids(g, {}, {g.face_id(f)}), rng);
        m = std::max(m, cilium_shift_residual_face(G, g, f, G.random_minus(rng), x));
      }
    }
    EXPECT_LT(m, 1e-9);
  }
  const auto g = ref::square();
  Rng rng(10);
  const auto x = random_point(G, g, rng);
  try {
    cilium_shift_residual_vertex(G, g, 0, G.random_plus(rng), x);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::not_flat);
  }
}

TYPED_TEST(BackendTest, ReverseAndShiftPointMaps) {
  const auto& G = this->G;
  const auto g = ref::theta();
  Rng rng(11);
  const auto x = random_point(G, g, rng);
  const MoveRecord rev{MoveKind::reverse, "e2"};
  const auto t = forward_point_map(G, g, rev, x);
  EXPECT_LT(G.distance(t.point[1], G.inv(x[1])), 1e-14);
  EXPECT_LT(point_distance(G, backward_point_map(G, g, t.graph, rev, t.point), x), 1e-14);
  const MoveRecord shift{MoveKind::shift_cilium, "u", false, 1};
  const auto s = forward_point_map(G, g, shift, x);
  EXPECT_EQ(point_distance(G, s.point, x), 0.0);
  EXPECT_THROW(forward_point_map(G, g, MoveRecord{MoveKind::pair, "u"}, x), Error);
}
