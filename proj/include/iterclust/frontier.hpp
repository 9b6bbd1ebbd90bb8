#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "iterclust/cat_tree.hpp"
#include "iterclust/construct.hpp"
#include "iterclust/dataset.hpp"
#include "iterclust/objective.hpp"

namespace iterclust {

// correct[v][node]: validation observations whose value of v is the
// majority value at that node on their classification path.
struct FrontierTable {
  std::vector<std::vector<std::uint32_t>> correct;

  std::size_t variables() const { return correct.size(); }
  std::uint32_t at(std::size_t var, NodeId node) const {
    const auto& row = correct.at(var);
    return node < row.size() ? row[node] : 0;
  }
};

// Per variable, a cut of the tree in left-to-right order.
struct Frontier {
  std::vector<std::vector<NodeId>> nodes;

  bool contains(std::size_t var, NodeId node) const {
    const auto& f = nodes.at(var);
    return std::find(f.begin(), f.end(), node) != f.end();
  }
};

struct FrontierStats {
  std::vector<std::size_t> sizes;
  double mean = 0.0;
};

// Root-to-leaf path the observation would follow if sorted, without
// changing the tree. The masked variable adds nothing to the hypothetical
// counts. Only existing children are candidates: where a new cluster
// would have won, the best existing child is taken.
inline std::vector<NodeId> classify_readonly(const Tree& tree, const Observation& obs,
                                             std::optional<std::size_t> masked = std::nullopt,
                                             ObjectiveId objective = ObjectiveId::PuGini) {
  const auto counts = observation_counts(tree.layout(), obs, masked);
  const Delta delta{1, counts};
  PartitionScorer scorer(tree.layout(), objective);
  std::vector<NodeId> path{tree.root()};
  while (!tree.node(path.back()).is_leaf()) {
    const NodeId at = path.back();
    scorer.reset(tree.node(at).view(), detail::child_views(tree, at), &delta);
    std::vector<std::optional<double>> scores;
    scores.reserve(scorer.size());
    for (std::size_t k = 0; k < scorer.size(); ++k) scores.push_back(scorer.with_merge(k, delta));
    path.push_back(tree.node(at).children[detail::first_max(scores).value_or(0)]);
  }
  return path;
}

inline FrontierTable accumulate(const Tree& tree, std::span<const Observation> validation,
                                ObjectiveId objective = ObjectiveId::PuGini) {
  if (validation.empty()) throw EmptyInputError("validation set is empty");
  const std::size_t vars = tree.layout().variables();
  FrontierTable table;
  table.correct.assign(vars, std::vector<std::uint32_t>(tree.arena_size(), 0));
  for (std::size_t v = 0; v < vars; ++v) {
    for (const auto& obs : validation) {
      for (NodeId n : classify_readonly(tree, obs, v, objective)) {
        if (tree.majority(n, v) == obs.values[v]) ++table.correct[v][n];
      }
    }
  }
  return table;
}

namespace detail {

// Best total correct count achievable by a cut of the subtree at `id`;
// appends that cut to `out`. The node itself wins ties.
inline std::uint64_t select_cut(const FrontierTable& t, const Tree& tree, std::size_t var, NodeId id,
                                std::vector<NodeId>& out) {
  const auto& n = tree.node(id);
  const std::uint64_t own = t.at(var, id);
  if (n.is_leaf()) {
    out.push_back(id);
    return own;
  }
  const std::size_t mark = out.size();
  std::uint64_t below = 0;
  for (NodeId c : n.children) below += select_cut(t, tree, var, c, out);
  if (own >= below) {
    out.resize(mark);
    out.push_back(id);
    return own;
  }
  return below;
}

}  // namespace detail

// Per variable, the cut maximizing the total correct count; a node is
// preferred over its descendants when it does at least as well.
inline Frontier select_frontiers(const FrontierTable& table, const Tree& tree) {
  Frontier f;
  f.nodes.resize(table.variables());
  for (std::size_t v = 0; v < table.variables(); ++v) {
    detail::select_cut(table, tree, v, tree.root(), f.nodes[v]);
  }
  return f;
}

// Keeps exactly the nodes on or above some frontier node. Node ids are
// preserved, so the frontier stays valid for the pruned tree.
inline Tree prune(const Tree& tree, const Frontier& f) {
  std::vector<char> keep(tree.arena_size(), 0);
  for (const auto& cut : f.nodes) {
    for (NodeId n : cut) {
      for (NodeId cur = n; cur != kNoNode && !keep[cur]; cur = tree.node(cur).parent) keep[cur] = 1;
    }
  }
  Tree out = tree;
  std::vector<NodeId> order;
  out.visit(out.root(), [&](NodeId n) { order.push_back(n); });
  for (NodeId n : order) {
    if (!out.alive(n) || out.node(n).is_leaf()) continue;
    const auto& kids = out.node(n).children;
    const bool any_kept = std::any_of(kids.begin(), kids.end(), [&](NodeId c) { return keep[c] != 0; });
    if (!any_kept) out.drop_children(n);
  }
  return out;
}

inline FrontierStats frontier_stats(const Frontier& f) {
  FrontierStats s;
  for (const auto& cut : f.nodes) s.sizes.push_back(cut.size());
  if (!s.sizes.empty()) {
    s.mean = static_cast<double>(std::accumulate(s.sizes.begin(), s.sizes.end(), std::size_t{0})) /
             static_cast<double>(s.sizes.size());
  }
  return s;
}

// Every variable's frontier is the full set of leaves (an unvalidated tree).
inline Frontier leaf_frontier(const Tree& tree) {
  Frontier f;
  f.nodes.assign(tree.layout().variables(), tree.leaves());
  return f;
}

}  // namespace iterclust
