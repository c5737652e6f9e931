#pragma once

// Finite-difference Poisson geometry on products of copies of G, and the
// catalog of named checks run by `pkctl verify`.
//
// All derivatives are taken in the right-trivialized frame: the direction c of
// a factor g is the curve t -> exp(t x_c) g, and a displacement of an image
// point y is read off as log(y(t) y^{-1}). Central differences throughout.

#include "pk/decoupling.hpp"
#include "pk/graph_moves.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <type_traits>

namespace pk {

// Per factor, the algebra coordinates that are perturbed.
using Dirs = std::vector<std::vector<int>>;

inline int dirs_size(const Dirs& d) {
  int n = 0;
  for (const auto& v : d) n += static_cast<int>(v.size());
  return n;
}

inline std::vector<int> coord_range(int from, int n) {
  std::vector<int> v(n);
  for (int i = 0; i < n; ++i) v[i] = from + i;
  return v;
}

template <class B>
std::vector<int> all_coords(const DoubleGroup<B>& G) { return coord_range(0, G.dim()); }
template <class B>
std::vector<int> minus_coords(const DoubleGroup<B>& G) { return coord_range(0, G.dim_minus()); }
template <class B>
std::vector<int> plus_coords(const DoubleGroup<B>& G) { return coord_range(G.dim_minus(), G.dim_plus()); }

template <class B>
Dirs full_dirs(const DoubleGroup<B>& G, int factors) { return Dirs(factors, all_coords(G)); }

template <class B>
typename B::Element nudge(const DoubleGroup<B>& G, const typename B::Element& g, int c, double t) {
  Vec v = Vec::Zero(G.dim());
  v[c] = t;
  return G.mul(G.exp(v), g);
}

// Jacobian of a map between products, rows = all coordinates of every output
// factor, columns = the perturbed directions.
template <class B, class Map>
Mat jacobian(const DoubleGroup<B>& G, Map&& map, const Point<B>& x, const Dirs& dirs, double h) {
  if (dirs.size() != x.size()) throw Error(Errc::dimension_mismatch, "directions do not match the point");
  const Point<B> y0 = map(x);
  const int d = G.dim();
  std::vector<typename B::Element> y0inv;
  for (const auto& y : y0) y0inv.push_back(G.inv(y));
  Mat J(static_cast<int>(y0.size()) * d, dirs_size(dirs));
  int col = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (int c : dirs[i]) {
      Point<B> xp = x, xm = x;
      xp[i] = nudge(G, x[i], c, h);
      xm[i] = nudge(G, x[i], c, -h);
      const Point<B> yp = map(xp), ym = map(xm);
      for (std::size_t j = 0; j < y0.size(); ++j)
        J.block(static_cast<int>(j) * d, col, d, 1) =
            (G.log(G.mul(yp[j], y0inv[j])) - G.log(G.mul(ym[j], y0inv[j]))) / (2 * h);
      ++col;
    }
  return J;
}

template <class B, class Fn>
Vec gradient(const DoubleGroup<B>& G, Fn&& f, const Point<B>& x, const Dirs& dirs, double h) {
  Vec g(dirs_size(dirs));
  int col = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (int c : dirs[i]) {
      Point<B> xp = x, xm = x;
      xp[i] = nudge(G, x[i], c, h);
      xm[i] = nudge(G, x[i], c, -h);
      g[col++] = (f(xp) - f(xm)) / (2 * h);
    }
  return g;
}

// Right-trivialized derivative of a function on G.
template <class B, class Fn>
Vec group_gradient(const DoubleGroup<B>& G, Fn&& f, const typename B::Element& g, double h) {
  Vec out(G.dim());
  for (int c = 0; c < G.dim(); ++c) out[c] = (f(nudge(G, g, c, h)) - f(nudge(G, g, c, -h))) / (2 * h);
  return out;
}

// A bivector field on a product of copies of G, written in the perturbed
// directions.
template <class B>
struct Engine {
  Dirs dirs;
  std::function<Mat(const Point<B>&)> bivector;
  int factors() const { return static_cast<int>(dirs.size()); }
};

enum class GroupBivector { sklyanin, heisenberg, dual };

template <class B>
Engine<B> group_engine(const DoubleGroup<B>& G, GroupBivector kind) {
  return {full_dirs(G, 1), [&G, kind](const Point<B>& x) {
            switch (kind) {
              case GroupBivector::sklyanin: return G.w(x[0]);
              case GroupBivector::heisenberg: return G.w_h(x[0]);
              case GroupBivector::dual: return G.w_gstar(x[0]);
            }
            return Mat();
          }};
}

// Sklyanin bivector restricted to the subgroup G_+ (plus = true) or G_-.
template <class B>
Engine<B> subgroup_engine(const DoubleGroup<B>& G, bool plus) {
  const auto idx = plus ? plus_coords(G) : minus_coords(G);
  return {Dirs{idx}, [&G, idx](const Point<B>& x) -> Mat { return G.w(x[0])(idx, idx); }};
}

template <class B>
Mat k_bivector(const DoubleGroup<B>& G, const Point<B>& x) {
  const int d = G.dim(), n = static_cast<int>(x.size());
  Mat W = Mat::Zero(n * d, n * d);
  for (int e = 0; e < n; ++e) W.block(e * d, e * d, d, d) = G.w_h(x[e]);
  return W;
}

template <class B>
Engine<B> k_engine(const DoubleGroup<B>& G, int edges) {
  return {full_dirs(G, edges), [&G](const Point<B>& x) { return k_bivector(G, x); }};
}

template <class B>
Engine<B> fr_engine(const DoubleGroup<B>& G, const RibbonGraph& g) {
  return {full_dirs(G, g.num_edges()), [&G, g](const Point<B>& x) { return fr_bivector(G, g, x); }};
}

template <class B>
Engine<B> product(const Engine<B>& a, const Engine<B>& b) {
  Dirs dirs = a.dirs;
  dirs.insert(dirs.end(), b.dirs.begin(), b.dirs.end());
  const int na = a.factors();
  return {dirs, [a, b, na](const Point<B>& x) {
            const Mat Wa = a.bivector(Point<B>(x.begin(), x.begin() + na));
            const Mat Wb = b.bivector(Point<B>(x.begin() + na, x.end()));
            Mat W = Mat::Zero(Wa.rows() + Wb.rows(), Wa.cols() + Wb.cols());
            W.topLeftCorner(Wa.rows(), Wa.cols()) = Wa;
            W.bottomRightCorner(Wb.rows(), Wb.cols()) = Wb;
            return W;
          }};
}

template <class B, class F1, class F2>
double bracket(const DoubleGroup<B>& G, const Engine<B>& eng, F1&& f1, F2&& f2, const Point<B>& x, double h) {
  if (static_cast<int>(x.size()) != eng.factors()) throw Error(Errc::dimension_mismatch, "point does not match engine");
  const Vec g1 = gradient(G, f1, x, eng.dirs, h), g2 = gradient(G, f2, x, eng.dirs, h);
  return g1.dot(eng.bivector(x) * g2);
}

inline std::vector<int> selected_rows(const Dirs& dirs, int d) {
  std::vector<int> rows;
  for (std::size_t i = 0; i < dirs.size(); ++i)
    for (int c : dirs[i]) rows.push_back(static_cast<int>(i) * d + c);
  return rows;
}

// max |J W_src J^T - W_dst(map(x))|, with J restricted to the target's
// directions.
template <class B, class Map>
double poisson_map_residual(const DoubleGroup<B>& G, Map&& map, const Engine<B>& src, const Engine<B>& dst,
                            const Point<B>& x, double h) {
  const Point<B> y = map(x);
  if (static_cast<int>(y.size()) != dst.factors()) throw Error(Errc::dimension_mismatch, "image does not match target");
  const Mat Jfull = jacobian(G, map, x, src.dirs, h);
  const Mat J = Jfull(selected_rows(dst.dirs, G.dim()), Eigen::all);
  return (J * src.bivector(x) * J.transpose() - dst.bivector(y)).cwiseAbs().maxCoeff();
}

// Largest entry of the Jacobiator tensor, from the frame formula
//   J^{ijk} = sum over cyclic (ijk) of  W^{ck} D_c W^{ij} + W^{aj} W^{ck} C_{ac}^i
// with [x_a, x_c] = C_{ac}^m x_m inside one factor. D_c W is a central
// difference, so this is one finite-difference layer.
template <class B>
double jacobi_residual(const DoubleGroup<B>& G, const Engine<B>& eng, const Point<B>& x, double h) {
  const int d = G.dim(), nf = eng.factors(), n = nf * d;
  for (const auto& dir : eng.dirs)
    if (static_cast<int>(dir.size()) != d) throw Error(Errc::dimension_mismatch, "jacobi_residual needs full directions");
  const Mat W = eng.bivector(x);
  std::vector<Mat> dW(n);
  for (int i = 0; i < nf; ++i)
    for (int c = 0; c < d; ++c) {
      Point<B> xp = x, xm = x;
      xp[i] = nudge(G, x[i], c, h);
      xm[i] = nudge(G, x[i], c, -h);
      dW[i * d + c] = (eng.bivector(xp) - eng.bivector(xm)) / (2 * h);
    }
  const auto& ad = G.ad_basis();
  auto T = [&](int i, int j, int k) {
    double s = 0;
    for (int c = 0; c < n; ++c) s += W(c, k) * dW[c](i, j);
    const int p = i / d, il = i % d;
    for (int a = 0; a < d; ++a)
      for (int c = 0; c < d; ++c) {
        const double C = ad[a](il, c);
        if (C != 0) s += C * W(p * d + a, j) * W(p * d + c, k);
      }
    return s;
  };
  double m = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) m = std::max(m, std::abs(T(i, j, k) + T(j, k, i) + T(k, i, j)));
  return m;
}

// ---------------------------------------------------------------------------
// Scalar fields

enum class Invariant { re_trace, abs_trace_sq };

template <class B>
struct ScalarField {
  std::string name;
  std::function<double(const Point<B>&)> eval;
  double operator()(const Point<B>& x) const { return eval(x); }
};

template <class B>
ScalarField<B> edge_coordinate(const DoubleGroup<B>& G, int e, int k) {
  return {"edge[" + std::to_string(e) + "][" + std::to_string(k) + "]",
          [&G, e, k](const Point<B>& x) { return G.to_floats(x.at(e)).at(k); }};
}

template <class B>
ScalarField<B> holonomy_coordinate(const DoubleGroup<B>& G, const Path& p, int k) {
  return {"hol[" + std::to_string(k) + "]",
          [&G, p, k](const Point<B>& x) { return G.to_floats(hol_unchecked(G, p, x)).at(k); }};
}

template <class B>
double invariant_value(const DoubleGroup<B>& G, Invariant inv, const typename B::Element& g) {
  return inv == Invariant::re_trace ? G.re_trace(g) : G.abs_trace_sq(g);
}

// Class function of the Kitaev holonomy, or of the Fock-Rosly holonomy when
// fock_rosly is set.
template <class B>
ScalarField<B> class_function(const DoubleGroup<B>& G, const Path& p, Invariant inv, bool fock_rosly = false) {
  return {inv == Invariant::re_trace ? "re_trace" : "abs_trace_sq", [&G, p, inv, fock_rosly](const Point<B>& x) {
            return invariant_value(G, inv, fock_rosly ? hol_fr_unchecked(G, p, x) : hol_unchecked(G, p, x));
          }};
}

// Both invariants for each loop; every loop must start and end at the cilium
// corner of v0.
template <class B>
std::vector<ScalarField<B>> class_function_factory(const DoubleGroup<B>& G, const RibbonGraph& g, int v0,
                                                   const std::vector<Path>& loops, bool fock_rosly = false) {
  std::vector<ScalarField<B>> out;
  const Corner base{v0, 0};
  for (const auto& p : loops) {
    if (!p.empty()) {
      check_path(g, p);
      const auto [a, b] = path_corners(g, p);
      if (!(a == base) || !(b == base))
        throw Error(Errc::not_closed, "loop is not closed at the cilium of '" + g.vertex_id(v0) + "'");
    }
    out.push_back(class_function(G, p, Invariant::re_trace, fock_rosly));
    out.push_back(class_function(G, p, Invariant::abs_trace_sq, fock_rosly));
  }
  return out;
}

namespace detail {

struct CycleBasis {
  std::vector<std::optional<Path>> tree;  // path from the cilium of v0 to each vertex
  std::vector<char> in_tree;
};

inline CycleBasis bfs_tree(const RibbonGraph& g, int v0) {
  const int V = g.num_vertices(), E = g.num_edges();
  CycleBasis b{std::vector<std::optional<Path>>(V), std::vector<char>(E, 0)};
  b.tree[v0] = Path{};
  std::vector<int> queue{v0};
  for (std::size_t qi = 0; qi < queue.size(); ++qi) {
    const int v = queue[qi];
    for (int e = 0; e < E; ++e) {
      const int s = g.source(e), t = g.target(e);
      if (s == v && !b.tree[t]) {
        b.tree[t] = reduce(compose(edge_path(g, e), *b.tree[s]));
      } else if (t == v && !b.tree[s]) {
        b.tree[s] = reduce(compose(inverse(edge_path(g, e)), *b.tree[t]));
      } else {
        continue;
      }
      b.in_tree[e] = 1;
      queue.push_back(s == v ? t : s);
    }
  }
  return b;
}

inline Path tree_cycle(const RibbonGraph& g, const CycleBasis& b, int e) {
  return reduce(compose({inverse(*b.tree[g.target(e)]), edge_path(g, e), *b.tree[g.source(e)]}));
}

}  // namespace detail

// Fundamental cycles at the cilium of v0, built from a BFS spanning tree and
// the edge paths p(e).
inline std::vector<Path> cycle_paths(const RibbonGraph& g, int v0) {
  const auto b = detail::bfs_tree(g, v0);
  std::vector<Path> cycles;
  for (int e = 0; e < g.num_edges(); ++e)
    if (!b.in_tree[e]) cycles.push_back(detail::tree_cycle(g, b, e));
  return cycles;
}

// Tree-cotree decomposition: the edges outside a spanning tree and outside a
// spanning tree of the dual graph give 2g cycles that stay nontrivial once
// every face is flat.
inline std::vector<Path> homology_cycles(const RibbonGraph& g, int v0) {
  const auto b = detail::bfs_tree(g, v0);
  const int F = g.num_faces(), E = g.num_edges();
  std::vector<char> cotree(E, 0), fseen(F, 0);
  std::vector<int> queue{0};
  fseen[0] = 1;
  for (std::size_t qi = 0; qi < queue.size(); ++qi) {
    const int f = queue[qi];
    for (int e = 0; e < E; ++e) {
      if (b.in_tree[e]) continue;
      const int l = g.left_face(e), r = g.right_face(e);
      const int other = l == f ? r : (r == f ? l : -1);
      if (other < 0 || fseen[other]) continue;
      fseen[other] = 1;
      cotree[e] = 1;
      queue.push_back(other);
    }
  }
  std::vector<Path> cycles;
  for (int e = 0; e < E; ++e)
    if (!b.in_tree[e] && !cotree[e]) cycles.push_back(detail::tree_cycle(g, b, e));
  return cycles;
}

// Four loops from the first two homology cycles, or from the first two
// fundamental cycles on a sphere: c1, c2, c1 c2, c1 c2^{-1} (powers of c1
// when there is only one cycle).
inline std::vector<Path> invariant_loops(const RibbonGraph& g, int v0) {
  auto cs = homology_cycles(g, v0);
  if (cs.empty()) cs = cycle_paths(g, v0);
  if (cs.empty()) throw Error(Errc::hypothesis_unmet, "graph has no cycles");
  if (cs.size() == 1) {
    const Path& c = cs[0];
    return {c, compose(c, c), compose({c, c, c}), compose({c, c, c, c})};
  }
  return {cs[0], cs[1], compose(cs[0], cs[1]), compose(cs[0], inverse(cs[1]))};
}

// ---------------------------------------------------------------------------
// Catalog

struct CheckRecord {
  std::string name;
  std::string statement;
  int samples = 0;
  double max_residual = 0;
  double tolerance = 0;
  bool pass = false;
  bool skipped = false;
  double runtime_ms = 0;
  std::string note;
  std::optional<double> bracket_scale;  // size of the compared brackets, when meaningful
};

struct LabConfig {
  std::uint64_t seed = 1;
  int samples = 20;
  double h = 1e-5;
  std::optional<double> tol;
};

struct CatalogEntry {
  std::string name;
  std::string statement;
  bool two_layers;  // two nested or chained finite-difference layers
  std::optional<double> fixed_tol = {};  // same tolerance on every backend
};

inline const std::vector<CatalogEntry>& catalog() {
  static const std::vector<CatalogEntry> c = {
      {"action_poisson_v", "vertex action G+ x K -> K is Poisson, with G+ carrying the restricted Sklyanin bivector", false},
      {"action_poisson_f", "face action G- x K -> K is Poisson, with G- carrying the restricted Sklyanin bivector", false},
      {"vertex_ops_commute", "vertex operators at distinct vertices Poisson commute", false},
      {"face_ops_commute", "face operators at distinct faces Poisson commute", false},
      {"mixed_ops_commute", "vertex and face operators commute when neither cilium sits at the other", false},
      {"site_operator_poisson", "site holonomy K -> (G, w_G*) is a Poisson map", false},
      {"reidemeister_segments", "Hol(r(e2) r(e1)) and Hol(f(e1) b(e2)^-1) Poisson commute", false},
      {"opposite_sides_commute", "holonomies of opposite edge ends and of opposite edge sides commute", false},
      {"hamiltonian_field_vertex", "Hamiltonian field of g o Hol^v equals r contracted with the vertex action fields", true},
      {"hamiltonian_field_face", "Hamiltonian field of g o Hol^f equals r contracted with the face action fields", true},
      {"invariant_commutes_with_ops", "invariant functions Poisson commute with all vertex and face operators", false},
      {"bracket_well_defined_on_flat", "brackets of invariant functions on K_L depend only on their restriction to K_L", false},
      {"invariant_subalgebra_closed", "brackets of invariant functions stay invariant under site actions on K_L", false, 1e-5},
      {"moduli_reduction_brackets", "brackets of class functions are preserved by erasing flat faces and the flat section", false},
      {"glue_maps_poisson", "gluing maps for split and doubled edges are Poisson", false},
      {"decoupling_poisson", "Phi: K -> FR is a Poisson map", false},
      {"fr_action_poisson", "Fock-Rosly gauge action (G, w) x FR -> FR is Poisson", false},
      {"jacobi_heisenberg", "w_H satisfies the Jacobi identity", true},
  };
  return c;
}

inline const CatalogEntry* find_catalog_entry(const std::string& name) {
  for (const auto& e : catalog())
    if (e.name == name) return &e;
  return nullptr;
}

inline std::string fmt_residual(double v) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << v;
  return os.str();
}

template <class B>
constexpr bool is_exact_backend() { return std::is_same_v<B, AbelianDouble>; }

inline double default_tolerance(const CatalogEntry& e, bool exact) {
  if (e.fixed_tol) return *e.fixed_tol;
  if (exact) return e.two_layers ? 1e-8 : 1e-9;
  return e.two_layers ? 1e-4 : 1e-5;
}

struct Report {
  std::string backend;
  std::string graph;
  std::uint64_t seed = 0;
  int samples = 0;
  double fd_step = 0;
  std::vector<CheckRecord> checks;
  bool all_pass() const {
    for (const auto& c : checks)
      if (!c.skipped && !c.pass) return false;
    return true;
  }
};

template <class B>
class Lab {
 public:
  using El = typename B::Element;

  Lab(const DoubleGroup<B>& G, RibbonGraph g, LabConfig cfg) : G_(G), g_(std::move(g)), cfg_(cfg) {
    if (cfg_.samples < 1) throw Error(Errc::precondition_violated, "samples must be positive");
  }

  const LabConfig& config() const { return cfg_; }

  CheckRecord run(const std::string& name) {
    const CatalogEntry* entry = find_catalog_entry(name);
    if (!entry) throw Error(Errc::unknown_reference, "unknown check '" + name + "'");
    CheckRecord rec;
    rec.name = name;
    rec.statement = entry->statement;
    rec.samples = cfg_.samples;
    rec.tolerance = cfg_.tol.value_or(default_tolerance(*entry, is_exact_backend<B>()));
    note_.clear();
    last_scale_.reset();
    const auto t0 = std::chrono::steady_clock::now();
    try {
      rec.max_residual = dispatch(name);
      rec.pass = rec.max_residual < rec.tolerance;
    } catch (const Error& err) {
      if (err.code() == Errc::hypothesis_unmet) {
        rec.skipped = true;
        rec.samples = 0;
      } else {
        rec.max_residual = std::numeric_limits<double>::quiet_NaN();
      }
      note_ = err.what();
    }
    rec.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    rec.note = note_;
    rec.bracket_scale = last_scale_;
    return rec;
  }

  Report run_all(const std::vector<std::string>& names) {
    Report r;
    r.backend = G_.name();
    r.seed = cfg_.seed;
    r.samples = cfg_.samples;
    r.fd_step = cfg_.h;
    for (const auto& n : names) r.checks.push_back(run(n));
    return r;
  }

  double dispatch(const std::string& n) {
    if (n == "action_poisson_v") return action_poisson(true);
    if (n == "action_poisson_f") return action_poisson(false);
    if (n == "vertex_ops_commute") return ops_commute(0);
    if (n == "face_ops_commute") return ops_commute(1);
    if (n == "mixed_ops_commute") return ops_commute(2);
    if (n == "site_operator_poisson") return site_operator_poisson();
    if (n == "reidemeister_segments") return reidemeister_segments();
    if (n == "opposite_sides_commute") return opposite_sides_commute();
    if (n == "hamiltonian_field_vertex") return hamiltonian_field(true);
    if (n == "hamiltonian_field_face") return hamiltonian_field(false);
    if (n == "invariant_commutes_with_ops") return invariant_commutes_with_ops();
    if (n == "bracket_well_defined_on_flat") return bracket_well_defined_on_flat();
    if (n == "invariant_subalgebra_closed") return invariant_subalgebra_closed();
    if (n == "moduli_reduction_brackets") return moduli_reduction_brackets();
    if (n == "glue_maps_poisson") return glue_maps_poisson();
    if (n == "decoupling_poisson") return decoupling_poisson();
    if (n == "fr_action_poisson") return fr_action_poisson();
    if (n == "jacobi_heisenberg") return jacobi_heisenberg();
    throw Error(Errc::unknown_reference, "unknown check '" + n + "'");
  }

  // -- individual checks --------------------------------------------------

  double action_poisson(bool vertex) {
    const int E = g_.num_edges();
    const auto src = product(subgroup_engine(G_, vertex), k_engine(G_, E));
    const auto dst = k_engine(G_, E);
    double m = 0;
    for (int s = 0; s < cfg_.samples; ++s) {
      Rng rng = Rng::stream(cfg_.seed, s);
      Point<B> x{vertex ? G_.random_plus(rng) : G_.random_minus(rng)};
      const auto gamma = random_point(G_, g_, rng);
      x.insert(x.end(), gamma.begin(), gamma.end());
      const int count = vertex ? g_.num_vertices() : g_.num_faces();
      for (int l = 0; l < count; ++l) {
        auto map = [&](const Point<B>& z) {
          const Point<B> rest(z.begin() + 1, z.end());
          return vertex ? vertex_action(G_, g_, l, z[0], rest) : face_action(G_, g_, l, z[0], rest);
        };
        m = std::max(m, poisson_map_residual(G_, map, src, dst, x, cfg_.h));
      }
    }
    return m;
  }

  // kind 0: vertices, 1: faces, 2: vertex-face pairs with neither cilium at
  // the other.
  double ops_commute(int kind) {
    std::vector<std::pair<Path, Path>> pairs;
    const int V = g_.num_vertices(), F = g_.num_faces();
    if (kind == 0)
      for (int a = 0; a < V; ++a)
        for (int b = a + 1; b < V; ++b) pairs.emplace_back(vertex_path(g_, a), vertex_path(g_, b));
    if (kind == 1)
      for (int a = 0; a < F; ++a)
        for (int b = a + 1; b < F; ++b) pairs.emplace_back(face_path(g_, a), face_path(g_, b));
    if (kind == 2)
      for (int v = 0; v < V; ++v)
        for (int f = 0; f < F; ++f)
          if (associated_vertex(g_, f) != v && associated_face(g_, v) != f)
            pairs.emplace_back(vertex_path(g_, v), face_path(g_, f));
    if (pairs.empty()) throw Error(Errc::hypothesis_unmet, "no admissible pair in this graph");
    return commute_residual(g_, pairs);
  }

  double site_operator_poisson() {
    const auto st = sites(g_);
    if (st.empty()) throw Error(Errc::hypothesis_unmet, "graph has no site");
    const auto src = k_engine(G_, g_.num_edges());
    const auto dst = group_engine(G_, GroupBivector::dual);
    double m = 0;
    for (int s = 0; s < cfg_.samples; ++s) {
      Rng rng = Rng::stream(cfg_.seed, s);
      const auto x = random_point(G_, g_, rng);
      for (auto [v, f] : st) {
        auto map = [&](const Point<B>& z) { return Point<B>{site_holonomy(G_, g_, v, f, z)}; };
        m = std::max(m, poisson_map_residual(G_, map, src, dst, x, cfg_.h));
      }
    }
    return m;
  }

  // Every pair of consecutive distinct non-loop ends, with orientations
  // normalized by reversing edges so that e1 is incoming and e2 outgoing.
  double reidemeister_segments() {
    double m = 0;
    bool any = false;
    for (int v = 0; v < g_.num_vertices(); ++v) {
      const auto ends = g_.ends(v);
      for (std::size_t k = 0; k + 1 < ends.size(); ++k) {
        const int a = ends[k].edge, b = ends[k + 1].edge;
        if (a == b || g_.is_loop(a) || g_.is_loop(b)) continue;
        RibbonGraph gc = g_;
        if (ends[k].end != End::target) gc = reverse_edge(gc, g_.edge_id(a)).graph;
        if (ends[k + 1].end != End::source) gc = reverse_edge(gc, g_.edge_id(b)).graph;
        const Path p1 = compose(letter(Gen::r, b), letter(Gen::r, a));
        const Path p2 = compose(letter(Gen::f, a), letter(Gen::b, b, -1));
        check_path(gc, p1);
        check_path(gc, p2);
        m = std::max(m, commute_residual(gc, {{p1, p2}}));
        any = true;
      }
    }
    if (!any) throw Error(Errc::hypothesis_unmet, "no vertex with two distinct consecutive non-loop edges");
    return m;
  }

  double opposite_sides_commute() {
    std::vector<std::pair<Path, Path>> pairs;
    for (int e = 0; e < g_.num_edges(); ++e) {
      pairs.emplace_back(letter(Gen::f, e), letter(Gen::b, e));
      pairs.emplace_back(letter(Gen::r, e), letter(Gen::l, e));
    }
    return commute_residual(g_, pairs);
  }

  // Hamiltonian field of g o Hol^v (W^T grad) against
  //   sum_ij R^{ij} D_i g(Hol^v) V_v(x_j)                         (vertex)
  //   -sum_ij R^{ij} (Ad(Hol^f)^T D g)_j V_f(x_i)                 (face)
  // where V(b) = -d/dt (exp(t b) acting on the point). For faces the residual
  // with the overall sign of the right side reversed is recorded in the note.
  double hamiltonian_field(bool vertex) {
    const int E = g_.num_edges(), d = G_.dim();
    const auto eng = k_engine(G_, E);
    const Mat& R = G_.r();
    const auto tests = group_test_functions();
    const int count = vertex ? g_.num_vertices() : g_.num_faces();
    double m = 0, flipped = 0;
    for (int s = 0; s < cfg_.samples; ++s) {
      Rng rng = Rng::stream(cfg_.seed, s);
      const auto x = random_point(G_, g_, rng);
      const Mat W = eng.bivector(x);
      for (int l = 0; l < count; ++l) {
        const Path p = vertex ? vertex_path(g_, l) : face_path(g_, l);
        const El H = hol_unchecked(G_, p, x);
        // Action fields for every basis direction of the acting subalgebra.
        std::vector<Vec> V(d);
        const auto idx = vertex ? plus_coords(G_) : minus_coords(G_);
        for (int c : idx) {
          auto act = [&](double t) {
            const El a = G_.exp(Vec::Unit(d, c) * t);
            return vertex ? vertex_action(G_, g_, l, a, x) : face_action(G_, g_, l, a, x);
          };
          const auto xp = act(cfg_.h), xm = act(-cfg_.h);
          Vec col(E * d);
          for (int e = 0; e < E; ++e) {
            const El xi = G_.inv(x[e]);
            col.segment(e * d, d) = -(G_.log(G_.mul(xp[e], xi)) - G_.log(G_.mul(xm[e], xi))) / (2 * cfg_.h);
          }
          V[c] = col;
        }
        const Mat A = G_.adjoint(H);
        for (const auto& gfun : tests) {
          auto F = [&](const Point<B>& z) { return gfun(hol_unchecked(G_, p, z)); };
          const Vec lhs = W.transpose() * gradient(G_, F, x, eng.dirs, cfg_.h);
          const Vec Dg = group_gradient(G_, gfun, H, cfg_.h);
          Vec rhs = Vec::Zero(E * d);
          if (vertex) {
            for (int i = 0; i < d; ++i)
              for (int j : idx)
                if (R(i, j) != 0) rhs += R(i, j) * Dg[i] * V[j];
          } else {
            const Vec DL = A.transpose() * Dg;
            for (int i : idx)
              for (int j = 0; j < d; ++j)
                if (R(i, j) != 0) rhs -= R(i, j) * DL[j] * V[i];
          }
          m = std::max(m, (lhs - rhs).cwiseAbs().maxCoeff());
          flipped = std::max(flipped, (lhs + rhs).cwiseAbs().maxCoeff());
        }
      }
    }
    if (!vertex) note_ = "residual with the sign of the right side reversed: " + fmt_residual(flipped);
    return m;
  }

  double invariant_commutes_with_ops() {
    const Paired pg = paired();
    const RibbonGraph& g = pg.graph;
    const auto hs = class_function_factory(G_, g, pg.v0, invariant_loops(g, pg.v0));
    const auto eng = k_engine(G_, g.num_edges());
    double m = 0;
    for (int s = 0; s < cfg_.samples; ++s) {
      Rng rng = Rng::stream(cfg_.seed, s);
      const auto x = random_point(G_, g, rng);
      const Mat W = eng.bivector(x);
      std::vector<Mat> Js;
      for (int v = 0; v < g.num_vertices(); ++v) Js.push_back(hol_jacobian(g, vertex_path(g, v), x));
      for (int f = 0; f < g.num_faces(); ++f) Js.push_back(hol_jacobian(g, face_path(g, f), x));
      for (const auto& h : hs) {
        const Vec gh = gradient(G_, h, x, eng.dirs, cfg_.h);
        for (const auto& J : Js) m = std::max(m, (J * W.transpose() * gh).cwiseAbs().maxCoeff());
      }
    }
    return m;
  }

  // g' = h_i + u_l with u_l = Re tr(Hol^l) - Re tr(1), which vanishes on K_L
  // for l in L; compares {g', h_j} with {h_i, h_j} on flat samples.
  double bracket_well_defined_on_flat() {
    const Paired pg = paired();
    const RibbonGraph& g = pg.graph;
    const auto hs = class_function_factory(G_, g, pg.v0, invariant_loops(g, pg.v0));
    const auto eng = k_engine(G_, g.num_edges());
    const double tr1 = G_.re_trace(G_.identity());
    std::vector<Path> lpaths;
    for (int v : pg.L.vertices) lpaths.push_back(vertex_path(g, v));
    for (int f : pg.L.faces) lpaths.push_back(face_path(g, f));
    double m = 0, scale = 0;
    for (int s = 0; s < cfg_.samples; ++s) {
      Rng rng = Rng::stream(cfg_.seed, s);
      const auto x = sample_flat(G_, g, pg.L, rng);
      const Mat W = eng.bivector(x);
      std::vector<Vec> gh, gu;
      for (const auto& h : hs) gh.push_back(gradient(G_, h, x, eng.dirs, cfg_.h));
      for (const auto& p : lpaths) {
        auto u = [&](const Point<B>& z) { return G_.re_trace(hol_unchecked(G_, p, z)) - tr1; };
        gu.push_back(gradient(G_, u, x, eng.dirs, cfg_.h));
      }
      for (std::size_t i = 0; i < gh.size(); ++i)
        for (const auto& du : gu) {
          const Vec gprime = gh[i] + du;
          for (std::size_t j = 0; j < gh.size(); ++j) {
            const double b = gh[i].dot(W * gh[j]);
            scale = std::max(scale, std::abs(b));
            m = std::max(m, std::abs(gprime.dot(W * gh[j]) - b));
          }
        }
    }
    add_scale_note(scale);
    return m;
  }

  double invariant_subalgebra_closed() {
    const Paired pg = paired();
    const RibbonGraph& g = pg.graph;
    const auto hs = class_function_factory(G_, g, pg.v0, invariant_loops(g, pg.v0));
    const auto eng = k_engine(G_, g.num_edges());
    auto brackets = [&](const Point<B>& x) {
      const Mat W = eng.bivector(x);
      std::vector<Vec> gr;
      for (const auto& h : hs) gr.push_back(gradient(G_, h, x, eng.dirs, cfg_.h));
      Mat K(gr.size(), gr.size());
      for (std::size_t i = 0; i < gr.size(); ++i)
        for (std::size_t j = 0; j < gr.size(); ++j) K(i, j) = gr[i].dot(W * gr[j]);
      return K;
    };
    const auto st = sites(g);
    double m = 0, scale = 0;
    for (int s = 0; s < cfg_.samples; ++s) {
      Rng rng = Rng::stream(cfg_.seed, s);
      const auto x = sample_flat(G_, g, pg.L, rng);
      const Mat K0 = brackets(x);
      scale = std::max(scale, K0.cwiseAbs().maxCoeff());
      std::vector<Point<B>> moved;
      for (auto [v, f] : st) moved.push_back(site_action(G_, g, v, f, G_.random(rng), x));
      for (const auto& y : moved) m = std::max(m, (brackets(y) - K0).cwiseAbs().maxCoeff());
    }
    add_scale_note(scale);
    return m;
  }

  // Class functions H_i of Fock-Rosly loop holonomies on the paired graph;
  // psi is the composite flat section from the one-face reduction. Compares
  // {H_i, H_j}(psi(y)) with {H_i o psi, H_j o psi}(y) on the reduced space.
  double moduli_reduction_brackets() {
    const Paired pg = paired();
    const RibbonGraph& g = pg.graph;
    const auto plan = moduli_reduction_plan(g, g.face_id(pg.f0));
    const RibbonGraph reduced = plan.empty() ? g : plan.back().after;
    const auto hs = class_function_factory(G_, g, pg.v0, invariant_loops(g, pg.v0), true);
    auto psi = [&](const Point<B>& y) {
      Point<B> z = y;
      for (auto it = plan.rbegin(); it != plan.rend(); ++it) z = fr_flat_section(G_, it->before, it->edge, it->flat, it->after, z);
      return z;
    };
    const auto full = fr_engine(G_, g), red = fr_engine(G_, reduced);
    FlatnessSpec Lf;
    Lf.faces = pg.L.faces;
    double m = 0, scale = 0;
    for (int s = 0; s < cfg_.samples; ++s) {
      Rng rng = Rng::stream(cfg_.seed, s);
      const auto y = random_point(G_, reduced, rng);
      const auto z = psi(y);
      for (int f : Lf.faces)
        m = std::max(m, G_.distance(hol_fr_unchecked(G_, face_path(g, f), z), G_.identity()));
      const Mat Wf = full.bivector(z), Wr = red.bivector(y);
      std::vector<Vec> gf, gr;
      for (const auto& h : hs) {
        gf.push_back(gradient(G_, h, z, full.dirs, cfg_.h));
        auto hp = [&](const Point<B>& w) { return h(psi(w)); };
        gr.push_back(gradient(G_, hp, y, red.dirs, cfg_.h));
      }
      for (std::size_t i = 0; i < hs.size(); ++i)
        for (std::size_t j = i + 1; j < hs.size(); ++j) {
          const double b = gf[i].dot(Wf * gf[j]);
          scale = std::max(scale, std::abs(b));
          m = std::max(m, std::abs(b - gr[i].dot(Wr * gr[j])));
        }
    }
    add_scale_note(scale);
    return m;
  }

  double glue_maps_poisson() {
    double m = 0;
    const auto dst = k_engine(G_, g_.num_edges());
    for (int e = 0; e < g_.num_edges(); ++e) {
      const std::string id = g_.edge_id(e);
      const auto sv = split_edge(g_, id);
      const std::string vm = sv.records[0].ids[1];
      check_glue(sv.graph, dst, [&](const Point<B>& z) { return glue_vertex_map(G_, sv.graph, vm, z).point; }, m);
      if (g_.is_loop(e)) continue;
      const auto sf = double_edge(g_, id);
      const std::string fm = sf.records[0].ids[1];
      check_glue(sf.graph, dst, [&](const Point<B>& z) { return glue_face_map(G_, sf.graph, fm, z).point; }, m);
    }
    return m;
  }

  double decoupling_poisson() {
    const Paired pg = paired();
    const DecouplingPaths dp(pg.graph);
    const auto src = k_engine(G_, pg.graph.num_edges());
    const auto dst = fr_engine(G_, pg.graph);
    double m = 0;
    for (int s = 0; s < cfg_.samples; ++s) {
      Rng rng = Rng::stream(cfg_.seed, s);
      const auto x = random_point(G_, pg.graph, rng);
      m = std::max(m, poisson_map_residual(G_, [&](const Point<B>& z) { return dp.phi(G_, z); }, src, dst, x, cfg_.h));
    }
    return m;
  }

  double fr_action_poisson() {
    const auto src = product(group_engine(G_, GroupBivector::sklyanin), fr_engine(G_, g_));
    const auto dst = fr_engine(G_, g_);
    double m = 0;
    for (int s = 0; s < cfg_.samples; ++s) {
      Rng rng = Rng::stream(cfg_.seed, s);
      Point<B> x{G_.random(rng)};
      const auto gamma = random_point(G_, g_, rng);
      x.insert(x.end(), gamma.begin(), gamma.end());
      for (int v = 0; v < g_.num_vertices(); ++v) {
        auto map = [&](const Point<B>& z) { return fr_vertex_action(G_, g_, v, z[0], Point<B>(z.begin() + 1, z.end())); };
        m = std::max(m, poisson_map_residual(G_, map, src, dst, x, cfg_.h));
      }
    }
    return m;
  }

  double jacobi_heisenberg() {
    const auto eng = group_engine(G_, GroupBivector::heisenberg);
    double m = 0;
    for (int s = 0; s < cfg_.samples; ++s) {
      Rng rng = Rng::stream(cfg_.seed, s);
      m = std::max(m, jacobi_residual(G_, eng, Point<B>{G_.random(rng)}, cfg_.h));
    }
    return m;
  }

 private:
  struct Paired {
    RibbonGraph graph;
    int v0;
    int f0;
    FlatnessSpec L;  // everything except the site (v0, f0)
  };

  // The graph itself when it is paired, otherwise pair_graph keeping its first
  // site. The site (v0, f0) stays free; all else is flat.
  Paired paired() {
    const auto st = sites(g_);
    if (st.empty()) throw Error(Errc::hypothesis_unmet, "graph has no site");
    const std::string vid = g_.vertex_id(st.front().first), fid = g_.face_id(st.front().second);
    Paired p;
    if (is_paired(g_)) {
      p.graph = g_;
    } else {
      p.graph = pair_graph(g_, {{vid, fid}}).graph;
      note_ = "evaluated on pair_graph output keeping site (" + vid + ", " + fid + ")";
    }
    p.v0 = p.graph.vertex_index(vid);
    p.f0 = p.graph.face_index(fid);
    p.L = FlatnessSpec::all_but(p.graph, {{p.v0, p.f0}});
    return p;
  }

  // A residual next to a vanishing bracket says nothing, so the size of the
  // brackets being compared is reported alongside.
  void add_scale_note(double scale) {
    last_scale_ = scale;
    if (!note_.empty()) note_ += "; ";
    note_ += "bracket scale " + fmt_residual(scale);
  }

  Mat hol_jacobian(const RibbonGraph& g, const Path& p, const Point<B>& x) {
    auto map = [&](const Point<B>& z) { return Point<B>{hol_unchecked(G_, p, z)}; };
    return jacobian(G_, map, x, full_dirs(G_, g.num_edges()), cfg_.h);
  }

  // max |J_1 W J_2^T| over samples and path pairs.
  double commute_residual(const RibbonGraph& g, const std::vector<std::pair<Path, Path>>& pairs) {
    const auto eng = k_engine(G_, g.num_edges());
    double m = 0;
    for (int s = 0; s < cfg_.samples; ++s) {
      Rng rng = Rng::stream(cfg_.seed, s);
      const auto x = random_point(G_, g, rng);
      const Mat W = eng.bivector(x);
      for (const auto& [p1, p2] : pairs) {
        const Mat J1 = hol_jacobian(g, p1, x), J2 = hol_jacobian(g, p2, x);
        m = std::max(m, (J1 * W * J2.transpose()).cwiseAbs().maxCoeff());
      }
    }
    return m;
  }

  template <class Map>
  void check_glue(const RibbonGraph& split, const Engine<B>& dst, Map&& map, double& m) {
    const auto src = k_engine(G_, split.num_edges());
    for (int s = 0; s < cfg_.samples; ++s) {
      Rng rng = Rng::stream(cfg_.seed, s);
      const auto x = random_point(G_, split, rng);
      m = std::max(m, poisson_map_residual(G_, map, src, dst, x, cfg_.h));
    }
  }

  // Serialization coordinates and Re tr.
  std::vector<std::function<double(const El&)>> group_test_functions() const {
    std::vector<std::function<double(const El&)>> out;
    const int n = static_cast<int>(G_.to_floats(G_.identity()).size());
    for (int k = 0; k < n; ++k) out.push_back([this, k](const El& a) { return G_.to_floats(a)[k]; });
    out.push_back([this](const El& a) { return G_.re_trace(a); });
    return out;
  }

  const DoubleGroup<B>& G_;
  RibbonGraph g_;
  LabConfig cfg_;
  std::string note_;
  std::optional<double> last_scale_;
};

}  // namespace pk
