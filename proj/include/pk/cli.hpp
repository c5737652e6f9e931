#pragma once

// pkctl subcommands. Exit codes: 0 success, 1 a check failed or the input was
// rejected by the library, 2 usage, file or parse errors.

#include "pk/io.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <future>
#include <iomanip>
#include <iostream>

namespace pk::cli {

struct Config {
  std::string backend = "sl2c";
  std::uint64_t seed = 1;
  int samples = 20;
  std::optional<double> tol;
  double fd_step = 1e-5;
  std::string out;
};

// Calls f with the DoubleGroup named by `sel` ("sl2c" or "abelian:<n>").
template <class F>
int with_backend(const std::string& sel, F&& f) {
  if (sel == "sl2c") return f(DoubleGroup<Sl2c>(Sl2c{}));
  const std::string prefix = "abelian:";
  if (sel.rfind(prefix, 0) == 0) {
    int n = 0;
    try {
      std::size_t used = 0;
      n = std::stoi(sel.substr(prefix.size()), &used);
      if (used != sel.size() - prefix.size()) n = 0;
    } catch (const std::exception&) {
      n = 0;
    }
    if (n >= 1) return f(DoubleGroup<AbelianDouble>(AbelianDouble(n)));
  }
  throw CLI::ValidationError("--backend", "expected sl2c or abelian:<n>, got '" + sel + "'");
}

inline std::string stem(const std::string& path) { return std::filesystem::path(path).stem().string(); }

inline void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-")
    out << text;
  else
    write_file(path, text);
}

// ---------------------------------------------------------------------------

inline int check_graph(const std::string& path, std::ostream& out) {
  const RibbonGraph g = load_graph(path);
  out << "valid: " << g.num_vertices() << " vertices, " << g.num_edges() << " edges, " << g.num_faces() << " faces\n";
  const auto sig = surface_signature(g, {g.face_id(0)});
  out << "genus " << sig.genus << "\n";
  const auto st = sites(g);
  out << "sites " << st.size() << ":";
  for (auto [v, f] : st) out << " (" << g.vertex_id(v) << ", " << g.face_id(f) << ")";
  out << "\npaired " << (is_paired(g) ? "yes" : "no") << "\n";
  return 0;
}

template <class B>
Report run_suite(const DoubleGroup<B>& G, const RibbonGraph& g, const std::vector<std::string>& names,
                 const LabConfig& cfg) {
  // One Lab per check; results are collected in catalog order.
  std::vector<std::future<CheckRecord>> jobs;
  for (const auto& n : names)
    jobs.push_back(std::async(std::launch::async, [&G, &g, &cfg, n] { return Lab<B>(G, g, cfg).run(n); }));
  Report r;
  r.backend = G.name();
  r.seed = cfg.seed;
  r.samples = cfg.samples;
  r.fd_step = cfg.h;
  for (auto& j : jobs) r.checks.push_back(j.get());
  return r;
}

inline void print_summary(const Report& r, std::ostream& out) {
  for (const auto& c : r.checks) {
    out << std::left << std::setw(30) << c.name << " " << std::setw(5)
        << (c.skipped ? "SKIP" : (c.pass ? "PASS" : "FAIL")) << " residual " << std::scientific << std::setprecision(3)
        << c.max_residual << " tol " << c.tolerance << std::defaultfloat;
    if (!c.note.empty()) out << "  [" << c.note << "]";
    out << "\n";
  }
  out << (r.all_pass() ? "all checks pass\n" : "some checks FAILED\n");
}

inline int verify(const std::string& path, const std::string& suite, const Config& c, std::ostream& out) {
  std::vector<std::string> names;
  if (suite == "all") {
    for (const auto& e : catalog()) names.push_back(e.name);
  } else {
    if (!find_catalog_entry(suite)) throw CLI::ValidationError("--suite", "unknown suite '" + suite + "'");
    names.push_back(suite);
  }
  const RibbonGraph g = load_graph(path);
  LabConfig cfg;
  cfg.seed = c.seed;
  cfg.samples = c.samples;
  cfg.h = c.fd_step;
  cfg.tol = c.tol;
  return with_backend(c.backend, [&](const auto& G) {
    Report r = run_suite(G, g, names, cfg);
    r.graph = stem(path);
    print_summary(r, out);
    if (!c.out.empty()) write_file(c.out, report_to_string(r));
    return r.all_pass() ? 0 : 1;
  });
}

inline int transform(const std::string& graph_path, const std::string& script_path, const std::string& point_path,
                     const std::string& point_out, const Config& c, std::ostream& out) {
  const RibbonGraph g = load_graph(graph_path);
  const auto script = script_from_string(read_file(script_path));
  const MoveResult res = apply_moves(g, script);
  emit(c.out, graph_to_string(res.graph), out);
  if (point_path.empty()) return 0;
  const std::string text = read_file(point_path);
  return with_backend(point_backend(text), [&](const auto& G) {
    const auto x = point_from_string(G, g, text);
    const auto t = forward_point_map(G, g, res.records, x);
    emit(point_out, point_to_string(G, t.graph, t.point), out);
    return 0;
  });
}

inline int iso_roundtrip(const std::string& graph_path, const std::string& point_path, const Config& c,
                         bool backend_given, std::ostream& out) {
  const RibbonGraph g = load_graph(graph_path);
  if (!is_paired(g))
    throw Error(Errc::not_paired, "graph '" + stem(graph_path) + "' is not paired; run `pkctl transform` with a pair script first");
  const std::string text = read_file(point_path);
  const std::string backend = backend_given ? c.backend : point_backend(text);
  const double tol = c.tol.value_or(1e-10);
  return with_backend(backend, [&](const auto& G) {
    const auto x = point_from_string(G, g, text);
    const DecouplingPaths dp(g);
    const auto y = dp.phi(G, x);
    const auto st = sites(g);
    Rng rng(c.seed);
    double eq = 0, hol = 0, rev = 0;
    for (auto [v, f] : st) {
      eq = std::max(eq, equivariance_residual(G, dp, v, f, G.random(rng), x));
      hol = std::max(hol, intertwining_residual(G, dp, v, f, x));
    }
    for (int e = 0; e < g.num_edges(); ++e) rev = std::max(rev, reversal_residual(G, dp, e, x));
    const Json res{{"psi_phi", point_distance(G, dp.psi(G, y), x)},
                   {"phi_psi", point_distance(G, dp.phi(G, dp.psi(G, y)), y)},
                   {"equivariance", eq},
                   {"intertwining", hol},
                   {"reversal", rev}};
    bool pass = true;
    for (auto it = res.begin(); it != res.end(); ++it) {
      const double v = it->template get<double>();
      pass = pass && v < tol;
      out << std::left << std::setw(14) << it.key() << " " << std::scientific << std::setprecision(3) << v
          << std::defaultfloat << "\n";
    }
    out << (pass ? "roundtrip ok\n" : "roundtrip FAILED\n");
    if (!c.out.empty()) {
      const Json rep{{"backend", G.name()}, {"graph", stem(graph_path)}, {"seed", c.seed},
                     {"tolerance", tol},    {"residuals", res},         {"pass", pass}};
      write_file(c.out, rep.dump(2) + "\n");
    }
    return pass ? 0 : 1;
  });
}

// ---------------------------------------------------------------------------

inline int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Poisson-Kitaev models: graph checks, Poisson verification suites, moves and the decoupling map"};
  app.require_subcommand(1);
  Config c;
  auto common = [&c](CLI::App* s, bool with_backend) {
    if (with_backend) s->add_option("--backend", c.backend, "sl2c or abelian:<n>");
    s->add_option("--seed", c.seed, "PRNG seed");
    s->add_option("--out", c.out, "output path");
  };

  std::string graph, suite = "all", script, point, point_out;
  auto* cg = app.add_subcommand("check-graph", "validate a graph file and print its signature");
  cg->add_option("graph", graph, "graph JSON")->required();

  auto* vf = app.add_subcommand("verify", "run Poisson verification checks");
  vf->add_option("graph", graph, "graph JSON")->required();
  vf->add_option("--suite", suite, "check name or 'all'");
  common(vf, true);
  vf->add_option("--samples", c.samples, "samples per check")->check(CLI::PositiveNumber);
  vf->add_option("--tol", c.tol, "tolerance override");
  vf->add_option("--fd-step", c.fd_step, "finite-difference step")->check(CLI::Range(1e-8, 1e-2));

  auto* tf = app.add_subcommand("transform", "replay a move script on a graph and optionally a point");
  tf->add_option("graph", graph, "graph JSON")->required();
  tf->add_option("script", script, "move script JSON")->required();
  tf->add_option("--point", point, "point JSON on the input graph");
  tf->add_option("--point-out", point_out, "where to write the transported point");
  common(tf, false);

  auto* iso = app.add_subcommand("iso-roundtrip", "decoupling map roundtrip on a paired graph");
  iso->add_option("graph", graph, "graph JSON")->required();
  iso->add_option("point", point, "point JSON")->required();
  common(iso, true);
  iso->add_option("--tol", c.tol, "tolerance, default 1e-10");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  try {
    if (cg->parsed()) return check_graph(graph, out);
    if (vf->parsed()) return verify(graph, suite, c, out);
    if (tf->parsed()) return transform(graph, script, point, point_out, c, out);
    if (iso->parsed()) return iso_roundtrip(graph, point, c, iso->count("--backend") > 0, out);
  } catch (const CLI::Error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.code() == Errc::parse_error ? 2 : 1;
  }
  return 2;
}

}  // namespace pk::cli
