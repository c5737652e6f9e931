#pragma once

// Small graphs used by the tests, the acceptance run and data/graphs.

#include "pk/ribbon_graph.hpp"

namespace pk::reference {

inline RibbonGraph single_edge() {
  GraphDesc d;
  d.vertices = {{"a", {{"e", End::source}}}, {"b", {{"e", End::target}}}};
  d.edges = {{"e", "a", "b"}};
  return validate_graph(with_traced_faces(d));
}

// 4-cycle a -> b -> c -> d -> a, every vertex [incoming, outgoing].
inline RibbonGraph square() {
  GraphDesc d;
  d.vertices = {{"a", {{"e4", End::target}, {"e1", End::source}}},
                {"b", {{"e1", End::target}, {"e2", End::source}}},
                {"c", {{"e2", End::target}, {"e3", End::source}}},
                {"d", {{"e3", End::target}, {"e4", End::source}}}};
  d.edges = {{"e1", "a", "b"}, {"e2", "b", "c"}, {"e3", "c", "d"}, {"e4", "d", "a"}};
  return validate_graph(with_traced_faces(d));
}

// Three parallel edges u -> w, planar.
inline RibbonGraph theta() {
  GraphDesc d;
  d.vertices = {{"u", {{"e1", End::source}, {"e2", End::source}, {"e3", End::source}}},
                {"w", {{"e3", End::target}, {"e2", End::target}, {"e1", End::target}}}};
  d.edges = {{"e1", "u", "w"}, {"e2", "u", "w"}, {"e3", "u", "w"}};
  return validate_graph(with_traced_faces(d));
}

inline RibbonGraph loop() {
  GraphDesc d;
  d.vertices = {{"v", {{"a", End::source}, {"a", End::target}}}};
  d.edges = {{"a", "v", "v"}};
  return validate_graph(with_traced_faces(d));
}

// One vertex with two interleaved loops: a one-face graph on the torus.
inline RibbonGraph torus() {
  GraphDesc d;
  d.vertices = {{"v", {{"a", End::source}, {"b", End::source}, {"a", End::target}, {"b", End::target}}}};
  d.edges = {{"a", "v", "v"}, {"b", "v", "v"}};
  return validate_graph(with_traced_faces(d));
}

// pair_graph keeping the first site.
inline RibbonGraph paired(const RibbonGraph& g) {
  const auto st = sites(g);
  if (st.empty()) throw Error(Errc::no_free_site, "graph has no site");
  return pair_graph(g, {{g.vertex_id(st.front().first), g.face_id(st.front().second)}}).graph;
}

inline RibbonGraph square_paired() { return paired(square()); }
inline RibbonGraph loop_paired() { return paired(loop()); }
inline RibbonGraph torus_paired() { return paired(torus()); }

struct Named {
  std::string name;
  RibbonGraph graph;
};

inline std::vector<Named> all() {
  return {{"single_edge", single_edge()},     {"square", square()},           {"theta", theta()},
          {"loop", loop()},                   {"torus", torus()},             {"square_paired", square_paired()},
          {"loop_paired", loop_paired()},     {"torus_paired", torus_paired()}};
}

}  // namespace pk::reference
