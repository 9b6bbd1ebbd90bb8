#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <unordered_set>
#include <utility>
#include <vector>

#include "iterclust/cat_tree.hpp"
#include "iterclust/construct.hpp"
#include "iterclust/dataset.hpp"
#include "iterclust/objective.hpp"

namespace iterclust {

struct OptimizerReport {
  std::size_t passes = 0;
  std::size_t moves = 0;
  std::vector<std::pair<std::size_t, double>> score_trace;  // (pass, level-1 score)
  std::chrono::duration<double> wall_time{0};
};

struct OptimizerOptions {
  std::size_t max_passes = 50;  // hierarchical redistribution outer loop
  std::size_t max_sweeps = 100;  // repeated sweeps of one sibling set, or of all observations
  std::function<void(const Tree&)> on_move;  // called after every accepted move
};

// Score of the root's partition; NaN when it is undefined.
inline double level1_score(const Tree& tree, ObjectiveId objective) {
  return level_score(tree, objective).value_or(std::numeric_limits<double>::quiet_NaN());
}

namespace detail {

inline bool improves(double candidate, double best) {
  if (std::isnan(candidate)) return false;
  if (std::isnan(best)) return true;
  return candidate > best + kTieTolerance * std::max(1.0, std::abs(best));
}

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  std::chrono::duration<double> elapsed() const { return std::chrono::steady_clock::now() - start_; }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace detail

// Sorts, extracts a dissimilarity ordering from the result and sorts again,
// for as long as the level-1 score improves. Returns the best tree built.
inline std::pair<Tree, OptimizerReport> reorder_resort(const Dataset& d, const Ordering& ord0,
                                                       std::optional<std::size_t> height, ObjectiveId objective,
                                                       const OptimizerOptions& options = {}) {
  detail::Stopwatch clock;
  OptimizerReport report;
  Tree best = build(d, ord0, height, objective);
  double best_score = level1_score(best, objective);
  report.passes = 1;
  report.score_trace.emplace_back(1, best_score);
  while (report.passes < options.max_sweeps) {
    Tree next = build(d, dissimilarity_ordering(best), height, objective);
    const double s = level1_score(next, objective);
    ++report.passes;
    report.score_trace.emplace_back(report.passes, s);
    if (!detail::improves(s, best_score)) break;
    best = std::move(next);
    best_score = s;
    ++report.moves;
  }
  report.wall_time = clock.elapsed();
  return {std::move(best), report};
}

namespace detail {

// Collapses one-child nodes and carries the renames into `ids`.
inline void normalize_tracking(Tree& tree, std::vector<NodeId>& ids) {
  for (auto [dead, survivor] : tree.normalize()) {
    std::replace(ids.begin(), ids.end(), dead, survivor);
  }
}

// The deepest clusters above the leaves: nodes at depth h - 1, plus leaves
// shallower than that, in pre-order.
inline std::vector<NodeId> flat_cut(const Tree& tree) {
  const std::size_t h = tree.height_bound().value_or(tree.height(tree.root()));
  const std::size_t depth = std::max<std::size_t>(1, h > 0 ? h - 1 : 1);
  std::vector<NodeId> cut;
  std::vector<std::pair<NodeId, std::size_t>> stack{{tree.root(), 0}};
  while (!stack.empty()) {
    auto [id, dep] = stack.back();
    stack.pop_back();
    const auto& n = tree.node(id);
    if (dep == depth || (dep > 0 && n.is_leaf())) {
      cut.push_back(id);
      continue;
    }
    for (auto it = n.children.rbegin(); it != n.children.rend(); ++it) stack.emplace_back(*it, dep + 1);
  }
  return cut;
}

}  // namespace detail

// Moves single observations between the clusters of the flat cut (level 1
// at height 2), one at a time in observation-id order, each to the cluster
// (or new singleton cluster) that maximizes the cut's score. A move must
// beat leaving the observation where it was. Sweeps repeat until one
// makes no move.
inline OptimizerReport redistribute_single(Tree& tree, ObjectiveId objective, const OptimizerOptions& options = {}) {
  detail::Stopwatch clock;
  OptimizerReport report;
  tree.normalize();
  if (tree.node(tree.root()).is_leaf()) {
    report.score_trace.emplace_back(0, level1_score(tree, objective));
    report.wall_time = clock.elapsed();
    return report;
  }
  std::vector<NodeId> cut = detail::flat_cut(tree);
  report.score_trace.emplace_back(0, level1_score(tree, objective));
  auto ids = tree.observations(tree.root());
  std::sort(ids.begin(), ids.end());
  PartitionScorer scorer(tree.layout(), objective);

  for (std::size_t sweep = 1; sweep <= options.max_sweeps; ++sweep) {
    std::size_t moves = 0;
    for (ObsId obs : ids) {
      const NodeId leaf = tree.leaf_of(obs);
      std::unordered_set<NodeId> in_cut(cut.begin(), cut.end());
      NodeId owner = leaf;
      while (!in_cut.count(owner)) owner = tree.node(owner).parent;
      const bool singleton = owner == leaf;
      const NodeId new_parent = tree.node(owner).parent;
      const std::size_t owner_slot = static_cast<std::size_t>(std::find(cut.begin(), cut.end(), owner) - cut.begin());

      const std::vector<std::uint32_t> counts = tree.node(leaf).counts;
      const Delta delta{1, counts};
      const Position pos = tree.detach(leaf, false);
      if (singleton) cut.erase(cut.begin() + static_cast<std::ptrdiff_t>(owner_slot));

      std::vector<CountsView> views;
      views.reserve(cut.size());
      for (NodeId c : cut) views.push_back(tree.node(c).view());
      scorer.reset(tree.node(tree.root()).view(), std::move(views), &delta);
      std::vector<std::optional<double>> scores;
      for (std::size_t k = 0; k < cut.size(); ++k) scores.push_back(scorer.with_merge(k, delta));
      scores.push_back(scorer.with_new(delta));
      const std::size_t status_quo = singleton ? cut.size() : owner_slot;
      std::size_t pick = detail::first_max(scores).value_or(status_quo);
      if (!detail::beats(scores[pick], scores[status_quo])) pick = status_quo;

      if (pick == status_quo) {
        tree.attach(pos.parent, leaf, true, pos.index);
        if (singleton) cut.insert(cut.begin() + static_cast<std::ptrdiff_t>(owner_slot), leaf);
        continue;
      }
      if (pick == cut.size()) {
        tree.attach(new_parent, leaf);
        cut.push_back(leaf);
      } else {
        cut[pick] = tree.attach(cut[pick], leaf);
      }
      detail::normalize_tracking(tree, cut);
      ++moves;
      ++report.moves;
      if (options.on_move) options.on_move(tree);
    }
    report.passes = sweep;
    report.score_trace.emplace_back(sweep, level1_score(tree, objective));
    if (moves == 0) break;
  }
  report.wall_time = clock.elapsed();
  return report;
}

namespace detail {

class HierarchicalRedistributor {
 public:
  HierarchicalRedistributor(Tree& tree, ObjectiveId objective, const OptimizerOptions& options,
                            OptimizerReport& report)
      : tree_(tree), objective_(objective), options_(options), report_(report) {}

  void run() {
    tree_.normalize();
    report_.score_trace.emplace_back(0, level1_score(tree_, objective_));
    for (std::size_t pass = 1; pass <= options_.max_passes; ++pass) {
      pass_moves_ = 0;
      process(tree_.root());
      report_.passes = pass;
      report_.score_trace.emplace_back(pass, level1_score(tree_, objective_));
      if (pass_moves_ == 0) break;
      first_pass_ = false;
      touched_prev_ = std::move(touched_);
      touched_.clear();
    }
  }

 private:
  bool skipped(NodeId id) const {
    return !first_pass_ && !touched_prev_.count(id) && !touched_.count(id);
  }

  void touch_upward(NodeId id) {
    for (NodeId cur = id; cur != kNoNode && tree_.alive(cur); cur = tree_.node(cur).parent) touched_.insert(cur);
  }

  // Sweeps the children of `id` (largest first) until a sweep moves none,
  // then descends into each surviving child.
  void process(NodeId id) {
    if (!tree_.alive(id) || tree_.node(id).is_leaf() || skipped(id)) return;
    for (std::size_t sweep = 0; sweep < options_.max_sweeps; ++sweep) {
      std::vector<NodeId> members = tree_.node(id).children;
      std::stable_sort(members.begin(), members.end(),
                       [&](NodeId a, NodeId b) { return tree_.node(a).size > tree_.node(b).size; });
      bool moved = false;
      for (NodeId m : members) {
        if (!tree_.alive(id)) return;
        if (!tree_.alive(m) || tree_.node(m).parent != id) continue;
        moved = move(m) || moved;
      }
      if (!moved || !tree_.alive(id)) break;
    }
    if (!tree_.alive(id)) return;
    const std::vector<NodeId> kids = tree_.node(id).children;
    for (NodeId c : kids) {
      if (tree_.alive(c) && tree_.is_attached(c)) process(c);
    }
  }

  bool move(NodeId m) {
    const Position home = tree_.detach(m, false);
    const Placement placed = sort_cluster(tree_, m, objective_, home);
    if (placed.home) return false;
    touch_upward(home.parent);
    touch_upward(placed.node);
    for (auto [dead, survivor] : tree_.normalize()) {
      if (touched_.count(dead)) touched_.insert(survivor);
    }
    ++pass_moves_;
    ++report_.moves;
    if (options_.on_move) options_.on_move(tree_);
    return true;
  }

  Tree& tree_;
  ObjectiveId objective_;
  const OptimizerOptions& options_;
  OptimizerReport& report_;
  bool first_pass_ = true;
  std::size_t pass_moves_ = 0;
  std::unordered_set<NodeId> touched_, touched_prev_;
};

}  // namespace detail

// Removes every cluster, at every level, together with its subtree and
// re-sorts it through the whole hierarchy; ties favour the original place.
// Sibling sets are visited top-down, members largest first, each set swept
// until stable. Subtrees untouched in the previous pass are skipped until
// a move lands in them. Stops after a pass with no move.
inline OptimizerReport hierarchical_redistribution(Tree& tree, ObjectiveId objective,
                                                   const OptimizerOptions& options = {}) {
  detail::Stopwatch clock;
  OptimizerReport report;
  if (tree.empty()) throw EmptyInputError("cannot optimize an empty tree");
  detail::HierarchicalRedistributor(tree, objective, options, report).run();
  report.wall_time = clock.elapsed();
  return report;
}

// Builds a full-depth tree a few levels at a time: a height-4 block is
// sorted and optimized, then every cluster at depth 3 is rebuilt the same
// way over its own observations and substituted, until nothing deeper
// appears. The result is unbounded with singleton leaves.
inline Tree layered_build(const Dataset& d, const Ordering& ord, ObjectiveId objective,
                          const OptimizerOptions& options = {}) {
  constexpr std::size_t kBlockHeight = 4;
  Tree tree = build(d, ord, kBlockHeight, objective);
  hierarchical_redistribution(tree, objective, options);
  tree.set_height_bound(std::nullopt);

  std::vector<std::size_t> rank(d.size(), 0);
  for (std::size_t i = 0; i < ord.permutation.size(); ++i) rank[ord.permutation[i]] = i;

  std::vector<NodeId> frontier;
  std::vector<std::pair<NodeId, std::size_t>> stack{{tree.root(), 0}};
  while (!stack.empty()) {
    auto [id, depth] = stack.back();
    stack.pop_back();
    const auto& n = tree.node(id);
    if (n.is_leaf()) continue;
    if (depth == kBlockHeight - 1) {
      frontier.push_back(id);
      continue;
    }
    for (NodeId c : n.children) stack.emplace_back(c, depth + 1);
  }

  for (NodeId block : frontier) {
    auto members = tree.observations(block);
    if (members.size() < 3) continue;
    std::sort(members.begin(), members.end(), [&](ObsId a, ObsId b) { return rank[a] < rank[b]; });
    const Tree sub = layered_build(d, Ordering{members}, objective, options);
    if (sub.height(sub.root()) <= 1) continue;
    const Position pos = tree.detach(block, false);
    tree.destroy(block);
    tree.attach(pos.parent, tree.graft(sub, sub.root()), true, pos.index);
  }
  return tree;
}

}  // namespace iterclust
