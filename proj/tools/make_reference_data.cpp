// Writes data/graphs/*.json and data/scripts/*.json from the reference graphs.

#include "pk/io.hpp"
#include "pk/reference_graphs.hpp"

#include <iostream>

int main(int argc, char** argv) {
  const std::string root = argc > 1 ? argv[1] : "data";
  try {
    for (const auto& [name, g] : pk::reference::all()) pk::write_file(root + "/graphs/" + name + ".json", pk::graph_to_string(g));

    const auto sq = pk::reference::square();
    const auto split = pk::split_edge(sq, "e1", "e1b", "m");
    auto glue = pk::glue_bivalent(split.graph, "m", "e1");
    std::vector<pk::MoveRecord> roundtrip = split.records;
    roundtrip.insert(roundtrip.end(), glue.records.begin(), glue.records.end());
    pk::write_file(root + "/scripts/split_then_glue.json", pk::script_to_string(roundtrip));

    pk::MoveRecord pair;
    pair.kind = pk::MoveKind::pair;
    pair.sites = {{"v", "f0"}};
    pk::write_file(root + "/scripts/pair_loop.json", pk::script_to_string({pair}));
  } catch (const pk::Error& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
  return 0;
}
