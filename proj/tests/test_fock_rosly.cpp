#include "support.hpp"

using namespace pk;
using pk::test::BackendTest;
namespace ref = pk::reference;

TYPED_TEST_SUITE(BackendTest, pk::test::Backends);

namespace {

// c with two outgoing edges p (first) and q; leaves x and y.
RibbonGraph fork_graph() {
  GraphDesc d;
  d.vertices = {{"c", {{"p", End::source}, {"q", End::source}}}, {"x", {{"p", End::target}}}, {"y", {{"q", End::target}}}};
  d.edges = {{"p", "c", "x"}, {"q", "c", "y"}};
  return validate_graph(with_traced_faces(d));
}

// Same shape with both edges incoming at c.
RibbonGraph cherry_graph() {
  GraphDesc d;
  d.vertices = {{"c", {{"p", End::target}, {"q", End::target}}}, {"x", {{"p", End::source}}}, {"y", {{"q", End::source}}}};
  d.edges = {{"p", "x", "c"}, {"q", "y", "c"}};
  return validate_graph(with_traced_faces(d));
}

Mat block(const Mat& W, int d, int i, int j) { return W.block(i * d, j * d, d, d); }

double max_abs(const Mat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

TYPED_TEST(BackendTest, DiagonalBlockIsHeisenbergDouble) {
  // -(TL (x) TL + TR (x) TR) r_a with TL = Ad(g), TR = 1 in the right frame.
  const auto& G = this->G;
  const int d = G.dim();
  Rng rng(1);
  for (const auto& g : {ref::square(), ref::theta(), fork_graph()}) {
    const auto x = random_point(G, g, rng);
    const Mat W = fr_bivector(G, g, x);
    for (int e = 0; e < g.num_edges(); ++e) {
      const Mat A = G.adjoint(x[e]);
      const Mat want = -(A * G.ra() * A.transpose() + G.ra());
      EXPECT_LT(max_abs(block(W, d, e, e) - want), 1e-12);
    }
  }
}

TYPED_TEST(BackendTest, OutgoingPairBlockIsTlTlR21) {
  const auto& G = this->G;
  const int d = G.dim();
  const auto g = fork_graph();
  Rng rng(2);
  const auto x = random_point(G, g, rng);
  const Mat W = fr_bivector(G, g, x);
  const int p = g.edge_index("p"), q = g.edge_index("q");
  const Mat want = G.adjoint(x[p]) * G.r().transpose() * G.adjoint(x[q]).transpose();
  EXPECT_LT(max_abs(block(W, d, p, q) - want), 1e-12);
  EXPECT_LT(max_abs(block(W, d, q, p) + want.transpose()), 1e-12);
}

TYPED_TEST(BackendTest, BivectorIsAntisymmetricWithDisjointBlocksZero) {
  const auto& G = this->G;
  const int d = G.dim();
  Rng rng(3);
  for (const auto& [name, g] : ref::all()) {
    SCOPED_TRACE(name);
    const auto x = random_point(G, g, rng);
    const Mat W = fr_bivector(G, g, x);
    EXPECT_LT(max_abs(W + W.transpose()), 1e-12);
    for (int a = 0; a < g.num_edges(); ++a)
      for (int b = 0; b < g.num_edges(); ++b) {
        const std::set<int> va{g.source(a), g.target(a)};
        if (va.count(g.source(b)) || va.count(g.target(b))) continue;
        EXPECT_EQ(max_abs(block(W, d, a, b)), 0.0);
      }
  }
}

TEST(FockRosly, AbelianBlocksMatchHandComputation) {
  const auto G = pk::test::abelian(2);
  const int d = 4;
  Mat Ra = Mat::Zero(d, d), R21 = Mat::Zero(d, d);
  Ra.block(0, 2, 2, 2) = 0.5 * Mat::Identity(2, 2);
  Ra.block(2, 0, 2, 2) = -0.5 * Mat::Identity(2, 2);
  R21.block(2, 0, 2, 2) = Mat::Identity(2, 2);
  Rng rng(4);
  {
    const auto g = fork_graph();
    const Mat W = fr_bivector(G, g, random_point(G, g, rng));
    const int p = g.edge_index("p"), q = g.edge_index("q");
    EXPECT_EQ(max_abs(block(W, d, p, p) + 2 * Ra), 0.0);
    EXPECT_EQ(max_abs(block(W, d, p, q) - R21), 0.0);
  }
  {
    // Incoming ends carry -1 on both sides: the same r_21 coupling.
    const auto g = cherry_graph();
    const Mat W = fr_bivector(G, g, random_point(G, g, rng));
    EXPECT_EQ(max_abs(block(W, d, g.edge_index("p"), g.edge_index("q")) - R21), 0.0);
  }
  {
    // Square vertex a = [in e4, out e1]: -(-1)(r_a - r_s)(1) = -r_21.
    const auto g = ref::square();
    const Mat W = fr_bivector(G, g, random_point(G, g, rng));
    EXPECT_EQ(max_abs(block(W, d, g.edge_index("e4"), g.edge_index("e1")) + R21), 0.0);
  }
}

TYPED_TEST(BackendTest, BivectorComponentsComeFromGaugeGenerators) {
  // Summing the per-end fields M_i xi over a vertex gives minus the derivative
  // of the gauge action along exp(t xi).
  const auto& G = this->G;
  const int d = G.dim();
  const auto g = ref::theta();
  Rng rng(5);
  const auto x = random_point(G, g, rng);
  const double t = 1e-6;
  for (int v = 0; v < g.num_vertices(); ++v)
    for (int a = 0; a < d; ++a) {
      const auto y = fr_vertex_action(G, g, v, G.exp(t * Vec::Unit(d, a)), x);
      for (int e = 0; e < g.num_edges(); ++e) {
        const Vec fd = G.log(G.mul(y[e], G.inv(x[e]))) / t;
        Vec want = Vec::Zero(d);
        for (const auto& end : g.ends(v))
          if (end.edge == e) want += end.end == End::target ? Vec(-Vec::Unit(d, a)) : Vec(G.adjoint(x[e]) * Vec::Unit(d, a));
        EXPECT_LT((fd + want).cwiseAbs().maxCoeff(), 1e-5);
      }
    }
}

TYPED_TEST(BackendTest, GaugeActionLaws) {
  const auto& G = this->G;
  Rng rng(6);
  for (const auto& [name, g] : ref::all()) {
    SCOPED_TRACE(name);
    const auto x = random_point(G, g, rng);
    double m = 0;
    for (int v = 0; v < g.num_vertices(); ++v) {
      EXPECT_EQ(point_distance(G, fr_vertex_action(G, g, v, G.identity(), x), x), 0.0);
      const auto a = G.random(rng), b = G.random(rng);
      m = std::max(m, point_distance(G, fr_vertex_action(G, g, v, a, fr_vertex_action(G, g, v, b, x)),
                                     fr_vertex_action(G, g, v, G.mul(a, b), x)));
    }
    EXPECT_LT(m, 1e-12);
  }
  // Square: a and c share no edge.
  const auto g = ref::square();
  const auto x = random_point(G, g, rng);
  const auto a = G.random(rng), c = G.random(rng);
  const int va = g.vertex_index("a"), vc = g.vertex_index("c");
  EXPECT_EQ(point_distance(G, fr_vertex_action(G, g, va, a, fr_vertex_action(G, g, vc, c, x)),
                           fr_vertex_action(G, g, vc, c, fr_vertex_action(G, g, va, a, x))),
            0.0);
  // Loops are conjugated.
  const auto l = ref::loop();
  const auto y = random_point(G, l, rng);
  const auto h = G.random(rng);
  EXPECT_LT(G.distance(fr_vertex_action(G, l, 0, h, y)[0], G.mul(h, y[0], G.inv(h))), 1e-14);
}

TYPED_TEST(BackendTest, HolonomyFunctor) {
  const auto& G = this->G;
  Rng rng(7);
  const auto g = ref::square();
  const auto x = random_point(G, g, rng);
  EXPECT_EQ(G.distance(hol_fr(G, g, Path{}, x), G.identity()), 0.0);
  EXPECT_EQ(G.distance(hol_fr(G, g, face_path(g, 0), identity_point(G, g)), G.identity()), 0.0);
  EXPECT_EQ(G.distance(hol_fr(G, g, letter(Gen::r, 1), x), x[1]), 0.0);
  EXPECT_EQ(G.distance(hol_fr(G, g, letter(Gen::f, 1), x), G.identity()), 0.0);
  // f0 is traversed e1, e2, e3, e4.
  const auto want = G.mul(G.mul(x[3], x[2]), G.mul(x[1], x[0]));
  EXPECT_LT(G.distance(hol_fr(G, g, face_path(g, 0), x), want), 1e-12);
  for (const auto& p : {ref::square_paired(), ref::loop_paired(), ref::torus_paired()}) {
    const auto y = random_point(G, p, rng);
    for (auto [v, f] : sites(p))
      EXPECT_LT(G.distance(hol_fr(G, p, compose(vertex_path(p, v), face_path(p, f)), y), hol_fr(G, p, face_path(p, f), y)),
                1e-14);
  }
}

TYPED_TEST(BackendTest, GlueEraseReverseAreEquivariant) {
  const auto& G = this->G;
  Rng rng(8);
  {
    const auto g = split_edge(ref::square(), "e2", "e2b", "m").graph;
    const auto x = random_point(G, g, rng);
    EXPECT_EQ(point_distance(G, fr_glue_edges(G, g, "m", identity_point(G, g)).point, identity_point(G, ref::square())), 0.0);
    const auto t = fr_glue_edges(G, g, "m", x);
    const auto [i1, i2] = std::pair{g.edge_index("e2"), g.edge_index("e2b")};
    const int ne = t.graph.edge_index("e2");
    EXPECT_LT(G.distance(t.point[ne], G.mul(x[i2], x[i1])), 1e-14);
    // (g, 1) glues to g.
    auto y = x;
    y[i2] = G.identity();
    EXPECT_EQ(G.distance(fr_glue_edges(G, g, "m", y).point[ne], x[i1]), 0.0);
    double m = 0;
    for (const auto& id : {"a", "b", "c", "d"}) {
      const auto h = G.random(rng);
      const auto lhs = fr_glue_edges(G, g, "m", fr_vertex_action(G, g, g.vertex_index(id), h, x)).point;
      m = std::max(m, point_distance(G, lhs, fr_vertex_action(G, t.graph, t.graph.vertex_index(id), h, t.point)));
    }
    EXPECT_LT(m, 1e-12);
  }
  {
    const auto g = ref::theta();
    const auto x = random_point(G, g, rng);
    const auto t = fr_erase_edge(G, g, "e2", x);
    double m = 0;
    for (const auto& id : {"u", "w"}) {
      const auto h = G.random(rng);
      const auto lhs = fr_erase_edge(G, g, "e2", fr_vertex_action(G, g, g.vertex_index(id), h, x)).point;
      m = std::max(m, point_distance(G, lhs, fr_vertex_action(G, t.graph, t.graph.vertex_index(id), h, t.point)));
    }
    EXPECT_LT(m, 1e-12);
    for (int e = 0; e < g.num_edges(); ++e) {
      const auto r = reverse_edge(g, g.edge_id(e)).graph;
      const auto h = G.random(rng);
      const auto lhs = fr_reverse_edge(G, e, fr_vertex_action(G, g, 0, h, x));
      EXPECT_LT(point_distance(G, lhs, fr_vertex_action(G, r, 0, h, fr_reverse_edge(G, e, x))), 1e-12);
    }
  }
}

TYPED_TEST(BackendTest, FlatSectionInvertsErase) {
  const auto& G = this->G;
  Rng rng(9);
  for (const auto& [name, g] : std::vector<ref::Named>{{"square", ref::square()}, {"theta", ref::theta()}}) {
    SCOPED_TRACE(name);
    const auto plan = moduli_reduction_plan(g, g.face_id(0));
    ASSERT_FALSE(plan.empty());
    const auto& st = plan.front();
    const int f = st.before.face_index(st.flat);
    EXPECT_EQ(point_distance(G, fr_flat_section(G, st.before, st.edge, st.flat, st.after, identity_point(G, st.after)),
                             identity_point(G, st.before)),
              0.0);
    double flat = 0, inv = 0, equi = 0, others = 0;
    for (int i = 0; i < 20; ++i) {
      const auto xr = random_point(G, st.after, rng);
      const auto x = fr_flat_section(G, st.before, st.edge, st.flat, st.after, xr);
      flat = std::max(flat, G.distance(hol_fr(G, st.before, face_path(st.before, f), x), G.identity()));
      inv = std::max(inv, point_distance(G, fr_erase_edge(G, st.before, st.edge, x, "").point, xr));
      const auto back = fr_flat_section(G, st.before, st.edge, st.flat, st.after,
                                        fr_erase_edge(G, st.before, st.edge, x).point);
      inv = std::max(inv, point_distance(G, back, x));
      for (int v = 0; v < st.before.num_vertices(); ++v) {
        const auto h = G.random(rng);
        const auto& id = st.before.vertex_id(v);
        const auto lhs = fr_flat_section(G, st.before, st.edge, st.flat, st.after,
                                         fr_vertex_action(G, st.after, st.after.vertex_index(id), h, xr));
        equi = std::max(equi, point_distance(G, lhs, fr_vertex_action(G, st.before, v, h, x)));
      }
      for (int h = 0; h < st.after.num_faces(); ++h) {
        const auto& id = st.after.face_id(h);
        if (!st.before.has_face(id) || id == st.flat) continue;
        others = std::max(others, G.distance(hol_fr(G, st.after, face_path(st.after, h), xr),
                                             hol_fr(G, st.before, face_path(st.before, st.before.face_index(id)), x)));
      }
    }
    EXPECT_LT(flat, 1e-10);
    EXPECT_LT(inv, 1e-10);
    EXPECT_LT(equi, 1e-10);
    EXPECT_LT(others, 1e-10);
  }
  // Both sides of the edge in the same face.
  const auto t = ref::torus();
  try {
    fr_flat_section(G, t, "a", t.face_id(0), t, identity_point(G, t));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::no_unique_solution);
  }
}
