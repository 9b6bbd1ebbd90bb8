#pragma once

#include <cstddef>
#include <string>

#include "json.hpp"

#include "iterclust/cat_tree.hpp"
#include "iterclust/dataset.hpp"
#include "iterclust/frontier.hpp"

namespace iterclust {

// Nested dump of the subtree at `id`: size, per-variable value counts keyed
// by symbol, the observation id at leaves, then the children.
inline nlohmann::ordered_json tree_to_json(const Tree& tree, const Dataset& d, NodeId id) {
  const auto& n = tree.node(id);
  nlohmann::ordered_json out;
  out["id"] = id;
  out["size"] = n.size;
  if (n.leaf_obs) out["obs"] = *n.leaf_obs;
  auto& counts = out["counts"] = nlohmann::ordered_json::object();
  for (std::size_t v = 0; v < d.variables(); ++v) {
    auto& col = counts[d.schema[v].name] = nlohmann::ordered_json::object();
    for (ValueId j = 0; j < d.schema[v].values.size(); ++j) {
      const auto c = tree.count(id, v, j);
      if (c > 0) col[d.symbol(v, j)] = c;
    }
  }
  if (!n.children.empty()) {
    auto& kids = out["children"] = nlohmann::ordered_json::array();
    for (NodeId c : n.children) kids.push_back(tree_to_json(tree, d, c));
  }
  return out;
}

inline nlohmann::ordered_json tree_to_json(const Tree& tree, const Dataset& d) {
  return tree_to_json(tree, d, tree.root());
}

// Per variable: the frontier nodes with depth, size and correct count.
inline nlohmann::ordered_json frontier_to_json(const Tree& tree, const Dataset& d, const Frontier& f,
                                               const FrontierTable& table) {
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (std::size_t v = 0; v < f.nodes.size(); ++v) {
    nlohmann::ordered_json nodes = nlohmann::ordered_json::array();
    for (NodeId n : f.nodes[v]) {
      nodes.push_back({{"node", n}, {"depth", tree.depth(n)}, {"size", tree.node(n).size},
                       {"correct", table.at(v, n)}});
    }
    out.push_back({{"variable", d.schema[v].name}, {"frontier", std::move(nodes)}});
  }
  return out;
}

}  // namespace iterclust
