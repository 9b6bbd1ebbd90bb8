#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "iterclust/cat_tree.hpp"
#include "iterclust/dataset.hpp"
#include "iterclust/error.hpp"
#include "iterclust/objective.hpp"

namespace iterclust {

// Where a sort ended up.
struct Placement {
  NodeId node = kNoNode;  // leaf of the observation, or the node that received a cluster
  bool home = false;      // sort_cluster only: the original position was chosen at every level
};

namespace detail {

inline constexpr double kTieTolerance = 1e-12;

inline bool beats(std::optional<double> candidate, std::optional<double> best) {
  if (!candidate) return false;
  if (!best) return true;
  return *candidate > *best + kTieTolerance * std::max(1.0, std::abs(*best));
}

inline bool ties_or_beats(std::optional<double> candidate, std::optional<double> best) {
  if (!candidate) return false;
  if (!best) return true;
  return *candidate >= *best - kTieTolerance * std::max(1.0, std::abs(*best));
}

inline std::vector<CountsView> child_views(const Tree& tree, NodeId id) {
  std::vector<CountsView> out;
  out.reserve(tree.node(id).children.size());
  for (NodeId c : tree.node(id).children) out.push_back(tree.node(c).view());
  return out;
}

// Scores of "merge into child k" for every child, then "new child" last.
inline std::vector<std::optional<double>> score_options(PartitionScorer& scorer, const Tree& tree,
                                                        NodeId parent, const Delta& delta) {
  scorer.reset(tree.node(parent).view(), child_views(tree, parent), &delta);
  std::vector<std::optional<double>> scores;
  scores.reserve(scorer.size() + 1);
  for (std::size_t k = 0; k < scorer.size(); ++k) scores.push_back(scorer.with_merge(k, delta));
  scores.push_back(scorer.with_new(delta));
  return scores;
}

// Index of the first maximum among defined scores, or nullopt.
inline std::optional<std::size_t> first_max(const std::vector<std::optional<double>>& scores) {
  std::optional<std::size_t> best;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    if (!best ? scores[k].has_value() : beats(scores[k], scores[*best])) best = k;
  }
  return best;
}

// Adopts the leaves of detached `subtree` as children of `host`, starting at
// `index` when given. The subtree's internal nodes are freed.
inline void attach_flat(Tree& tree, NodeId host, NodeId subtree, std::optional<std::size_t> index) {
  if (tree.node(subtree).is_leaf()) {
    tree.attach(host, subtree, true, index);
    return;
  }
  tree.flatten_below(subtree);
  std::optional<std::size_t> at = index;
  for (NodeId leaf : tree.dissolve(subtree)) {
    tree.attach(host, leaf, true, at);
    if (at) ++*at;
  }
}

// Flattens every node of detached `subtree` that would sit at depth
// bound - 1 once the subtree's root is placed at `top_depth`.
inline void truncate_to_bound(Tree& tree, NodeId subtree, std::size_t top_depth,
                              std::optional<std::size_t> bound) {
  if (!bound || tree.node(subtree).is_leaf()) return;
  if (top_depth + 1 >= *bound) {
    tree.flatten_below(subtree);
    return;
  }
  const auto kids = tree.node(subtree).children;
  for (NodeId c : kids) truncate_to_bound(tree, c, top_depth + 1, bound);
}

}  // namespace detail

// Sorts `obs` into the tree. At each internal node every "join child k"
// option and the "new singleton child" option are scored as partitions of
// that node's coverage (obs included); the first maximum in that order
// wins. A chosen leaf is extended downward; a node at depth bound - 1
// receives obs as a leaf child without evaluation. A tree whose root is a
// single leaf L compares {{L, obs}} against {{L}, {obs}}.
inline Placement sort_observation(Tree& tree, const Observation& obs, ObjectiveId objective) {
  const auto& layout = tree.layout();
  const auto counts = observation_counts(layout, obs);
  const Delta delta{1, counts};
  const auto bound = tree.height_bound();

  if (tree.empty()) {
    const NodeId leaf = tree.make_singleton(obs);
    tree.set_root(leaf);
    return {leaf, false};
  }

  PartitionScorer scorer(layout, objective);
  const NodeId root = tree.root();
  if (tree.node(root).is_leaf()) {
    const NodeId leaf = tree.make_singleton(obs);
    scorer.reset(tree.node(root).view(), {tree.node(root).view()}, &delta);
    const auto join = scorer.with_merge(0, delta);
    const auto split = scorer.with_new(delta);
    const bool may_join = !bound || *bound >= 2;
    if (may_join && join && !detail::beats(split, join)) {
      const NodeId cluster = tree.replace_with_parent(root);
      tree.attach(cluster, leaf);
      tree.replace_with_parent(cluster);
    } else {
      tree.attach(root, leaf);
    }
    return {leaf, false};
  }

  NodeId at = root;
  std::size_t depth = 0;
  while (true) {
    if (bound && depth + 1 >= *bound) {
      const NodeId leaf = tree.make_singleton(obs);
      tree.attach(at, leaf);
      return {leaf, false};
    }
    const auto scores = detail::score_options(scorer, tree, at, delta);
    const std::size_t pick = detail::first_max(scores).value_or(scores.size() - 1);
    const auto& children = tree.node(at).children;
    if (pick == children.size()) {
      const NodeId leaf = tree.make_singleton(obs);
      tree.attach(at, leaf);
      return {leaf, false};
    }
    const NodeId child = children[pick];
    if (tree.node(child).is_leaf()) {
      tree.extend_leaf(child, obs);
      return {tree.leaf_of(obs.id), false};
    }
    at = child;
    ++depth;
  }
}

// Re-sorts detached `subtree` through the whole hierarchy. Options at each
// node are "merge into child k" (recurse into it) and "new child" (attach
// with structure intact, flattened where the bound requires). `home` is
// where the subtree was detached from; options on the way back there win
// ties. Merging into a node at depth bound - 1 adds the subtree's leaves as
// its children.
inline Placement sort_cluster(Tree& tree, NodeId subtree, ObjectiveId objective,
                              std::optional<Position> home = std::nullopt) {
  const auto& s = tree.node(subtree);
  if (s.parent != kNoNode || (!tree.empty() && tree.root() == subtree)) {
    throw StructuralError("sort_cluster needs a detached subtree");
  }
  if (tree.empty()) throw StructuralError("sort_cluster on an empty tree");
  const auto bound = tree.height_bound();
  const std::vector<std::uint32_t> counts = s.counts;
  const Delta delta{s.size, counts};

  // Root-to-home-parent path.
  std::vector<NodeId> home_path;
  if (home && tree.alive(home->parent)) {
    for (NodeId cur = home->parent; cur != kNoNode; cur = tree.node(cur).parent) home_path.push_back(cur);
    std::reverse(home_path.begin(), home_path.end());
    if (home_path.front() != tree.root()) home_path.clear();
  }
  auto index_at = [&](NodeId host, bool on_home) -> std::optional<std::size_t> {
    if (on_home && home && host == home->parent) return home->index;
    return std::nullopt;
  };

  NodeId at = tree.root();
  if (tree.node(at).is_leaf()) {
    detail::truncate_to_bound(tree, subtree, 1, bound);
    return {tree.attach(at, subtree), false};
  }

  PartitionScorer scorer(tree.layout(), objective);
  bool on_home = !home_path.empty();
  std::size_t depth = 0;
  while (true) {
    if (bound && depth + 1 >= *bound) {
      detail::attach_flat(tree, at, subtree, index_at(at, on_home));
      return {at, on_home};
    }
    const auto scores = detail::score_options(scorer, tree, at, delta);
    const auto& children = tree.node(at).children;
    std::size_t pick = detail::first_max(scores).value_or(children.size());
    if (on_home) {
      std::optional<std::size_t> home_option;
      if (depth + 1 == home_path.size()) {
        home_option = children.size();
      } else {
        const NodeId next = home_path[depth + 1];
        const auto it = std::find(children.begin(), children.end(), next);
        if (it != children.end()) home_option = static_cast<std::size_t>(it - children.begin());
      }
      if (home_option && detail::ties_or_beats(scores[*home_option], scores[pick])) pick = *home_option;
      on_home = home_option && pick == *home_option;
    }
    if (pick == children.size()) {
      detail::truncate_to_bound(tree, subtree, depth + 1, bound);
      tree.attach(at, subtree, true, index_at(at, on_home));
      return {at, on_home};
    }
    const NodeId child = children[pick];
    if (tree.node(child).is_leaf()) {
      const NodeId joined = tree.replace_with_parent(child);
      if (bound && depth + 2 >= *bound) {
        detail::attach_flat(tree, joined, subtree, std::nullopt);
      } else {
        detail::truncate_to_bound(tree, subtree, depth + 2, bound);
        tree.attach(joined, subtree);
      }
      return {joined, false};
    }
    at = child;
    ++depth;
  }
}

// Sorts every observation of `ord` in turn into a fresh tree. `ord` must
// list distinct ids of `d`. Unbounded when `height_bound` is empty.
inline Tree build(const Dataset& d, const Ordering& ord, std::optional<std::size_t> height_bound,
                  ObjectiveId objective) {
  if (height_bound && *height_bound < 2) throw ArgumentError("height bound must be at least 2");
  if (ord.permutation.empty()) throw ArgumentError("ordering is empty");
  std::vector<bool> seen(d.size(), false);
  for (ObsId id : ord.permutation) {
    if (id >= d.size() || seen[id]) throw ArgumentError("ordering is not a permutation of dataset ids");
    seen[id] = true;
  }
  Tree tree(d.layout(), height_bound);
  for (ObsId id : ord.permutation) sort_observation(tree, d.at(id), objective);
  tree.normalize();
  return tree;
}

namespace detail {

template <bool Interleave>
std::vector<ObsId> extract_ordering(const Tree& tree, NodeId id) {
  const auto& n = tree.node(id);
  if (n.is_leaf()) return tree.observations(id);
  std::vector<NodeId> kids = n.children;
  std::stable_sort(kids.begin(), kids.end(), [&](NodeId a, NodeId b) {
    return Interleave ? tree.node(a).size > tree.node(b).size : tree.node(a).size < tree.node(b).size;
  });
  std::vector<std::vector<ObsId>> lists;
  lists.reserve(kids.size());
  for (NodeId c : kids) lists.push_back(extract_ordering<Interleave>(tree, c));
  std::vector<ObsId> out;
  out.reserve(n.size);
  if constexpr (Interleave) {
    for (std::size_t step = 0; out.size() < n.size; ++step) {
      bool any = false;
      for (const auto& l : lists) {
        if (step < l.size()) {
          out.push_back(l[step]);
          any = true;
        }
      }
      if (!any) break;
    }
  } else {
    for (const auto& l : lists) out.insert(out.end(), l.begin(), l.end());
  }
  return out;
}

}  // namespace detail

// At each node the children's lists are ranked by decreasing size and
// interleaved round-robin, so neighbours in the output come from
// different clusters.
inline Ordering dissimilarity_ordering(const Tree& tree) {
  return Ordering{detail::extract_ordering<true>(tree, tree.root())};
}

// Children ranked by increasing size, lists concatenated.
inline Ordering similarity_ordering(const Tree& tree) {
  return Ordering{detail::extract_ordering<false>(tree, tree.root())};
}

}  // namespace iterclust
