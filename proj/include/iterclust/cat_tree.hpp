#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "iterclust/dataset.hpp"
#include "iterclust/error.hpp"

namespace iterclust {

using NodeId = std::uint32_t;
inline constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();

// Observation count plus a flat value-count table (see CountLayout).
// P(C) and P(A_i = V_ij | C) are derived from these on demand.
struct CountsView {
  std::uint32_t size = 0;
  std::span<const std::uint32_t> counts;
};

struct ClusterNode {
  NodeId id = kNoNode;
  NodeId parent = kNoNode;
  std::uint32_t size = 0;
  std::vector<std::uint32_t> counts;
  std::vector<NodeId> children;  // insertion order
  std::optional<ObsId> leaf_obs;
  bool alive = true;

  bool is_leaf() const { return children.empty(); }
  CountsView view() const { return {size, counts}; }
};

// Where a detached node used to hang.
struct Position {
  NodeId parent = kNoNode;
  std::size_t index = 0;
};

// A probabilistic categorization tree stored in an arena. Node ids are
// never reused, so ids held by callers stay meaningful (check alive()).
class Tree {
 public:
  Tree() = default;
  explicit Tree(CountLayout layout, std::optional<std::size_t> height_bound = std::nullopt)
      : layout_(std::move(layout)), height_bound_(height_bound) {}

  const CountLayout& layout() const { return layout_; }
  std::optional<std::size_t> height_bound() const { return height_bound_; }
  void set_height_bound(std::optional<std::size_t> bound) { height_bound_ = bound; }

  bool empty() const { return root_ == kNoNode; }
  NodeId root() const {
    if (empty()) throw StructuralError("tree is empty");
    return root_;
  }
  std::size_t arena_size() const { return nodes_.size(); }

  bool alive(NodeId id) const { return id < nodes_.size() && nodes_[id].alive; }

  const ClusterNode& node(NodeId id) const {
    if (!alive(id)) throw StructuralError("node " + std::to_string(id) + " is not alive");
    return nodes_[id];
  }
  const ClusterNode& operator[](NodeId id) const { return node(id); }

  std::uint32_t count(NodeId id, std::size_t var, ValueId value) const {
    return node(id).counts[layout_.offset(var) + value];
  }

  // P(A_i = V_ij | node); at the root this is the marginal P(A_i = V_ij).
  double prob(NodeId id, std::size_t var, ValueId value) const {
    const auto& n = node(id);
    if (n.size == 0) throw ArgumentError("probability of an empty node is undefined");
    return static_cast<double>(n.counts[layout_.offset(var) + value]) / n.size;
  }

  // Most frequent value of `var` at the node, ties to the lowest ordinal.
  ValueId majority(NodeId id, std::size_t var) const {
    const auto& n = node(id);
    const auto* first = n.counts.data() + layout_.offset(var);
    const auto* last = first + layout_.arity(var);
    return static_cast<ValueId>(std::max_element(first, last) - first);
  }

  std::size_t depth(NodeId id) const {
    std::size_t d = 0;
    for (NodeId p = node(id).parent; p != kNoNode; p = nodes_[p].parent) ++d;
    return d;
  }

  // Number of edges on the longest downward path to a leaf.
  std::size_t height(NodeId id) const {
    const auto& n = node(id);
    std::size_t h = 0;
    for (NodeId c : n.children) h = std::max(h, 1 + height(c));
    return h;
  }

  bool is_attached(NodeId id) const {
    if (!alive(id) || empty()) return false;
    NodeId cur = id;
    while (nodes_[cur].parent != kNoNode) cur = nodes_[cur].parent;
    return cur == root_;
  }

  // True when `ancestor` lies on the path from `id` to its top (inclusive).
  bool is_ancestor_or_self(NodeId ancestor, NodeId id) const {
    for (NodeId cur = id; cur != kNoNode; cur = nodes_[cur].parent) {
      if (cur == ancestor) return true;
    }
    return false;
  }

  std::size_t node_count() const {
    if (empty()) return 0;
    std::size_t n = 0;
    visit(root_, [&](NodeId) { ++n; });
    return n;
  }

  // Pre-order traversal of the subtree at `id`.
  template <typename Fn>
  void visit(NodeId id, Fn&& fn) const {
    std::vector<NodeId> stack{id};
    while (!stack.empty()) {
      NodeId cur = stack.back();
      stack.pop_back();
      fn(cur);
      const auto& ch = nodes_[cur].children;
      for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back(*it);
    }
  }

  std::vector<NodeId> leaves(NodeId id) const {
    std::vector<NodeId> out;
    visit(id, [&](NodeId n) {
      if (nodes_[n].is_leaf()) out.push_back(n);
    });
    return out;
  }
  std::vector<NodeId> leaves() const { return empty() ? std::vector<NodeId>{} : leaves(root_); }

  // Observations covered by the subtree, in left-to-right leaf order.
  std::vector<ObsId> observations(NodeId id) const {
    std::vector<ObsId> out;
    visit(id, [&](NodeId n) {
      if (nodes_[n].leaf_obs) out.push_back(*nodes_[n].leaf_obs);
    });
    return out;
  }

  // Leaf holding `obs`, or kNoNode.
  NodeId leaf_of(ObsId obs) const {
    if (obs >= obs_leaf_.size()) return kNoNode;
    NodeId id = obs_leaf_[obs];
    return alive(id) && nodes_[id].leaf_obs == obs ? id : kNoNode;
  }

  // ---- construction -------------------------------------------------------

  // A detached singleton leaf for `obs`.
  NodeId make_singleton(const Observation& obs) {
    if (obs.values.size() != layout_.variables()) {
      throw ArgumentError("observation has " + std::to_string(obs.values.size()) +
                          " values, schema has " + std::to_string(layout_.variables()));
    }
    NodeId id = allocate();
    auto& n = nodes_[id];
    n.size = 1;
    for (std::size_t i = 0; i < obs.values.size(); ++i) {
      if (obs.values[i] >= layout_.arity(i)) throw ArgumentError("value ordinal out of range");
      n.counts[layout_.offset(i) + obs.values[i]] = 1;
    }
    n.leaf_obs = obs.id;
    if (obs_leaf_.size() <= obs.id) obs_leaf_.resize(obs.id + 1, kNoNode);
    obs_leaf_[obs.id] = id;
    return id;
  }

  // A detached, empty internal node.
  NodeId make_internal() { return allocate(); }

  void set_root(NodeId id) {
    if (!alive(id) || nodes_[id].parent != kNoNode) {
      throw StructuralError("root must be a live, detached node");
    }
    root_ = id;
  }

  // ---- surgery --------------------------------------------------------------

  // Removes `id` (with its subtree) from its parent and decrements every
  // ancestor. With `collapse`, a parent left with one child is replaced by
  // that child. A parent left with no children is removed as well.
  Position detach(NodeId id, bool collapse = true) {
    const auto& n = node(id);
    if (id == root_) throw StructuralError("cannot detach the root");
    if (n.parent == kNoNode) throw StructuralError("node is already detached");
    const NodeId parent = n.parent;
    auto& siblings = nodes_[parent].children;
    const auto it = std::find(siblings.begin(), siblings.end(), id);
    const Position pos{parent, static_cast<std::size_t>(it - siblings.begin())};
    siblings.erase(it);
    nodes_[id].parent = kNoNode;
    add_counts(parent, nodes_[id].view(), -1);

    if (nodes_[parent].children.empty()) {
      if (parent == root_) {
        kill(parent);
        root_ = kNoNode;
      } else {
        detach(parent, collapse);
        kill(parent);
      }
    } else if (collapse && nodes_[parent].children.size() == 1) {
      collapse_single_child(parent);
    }
    return pos;
  }

  // Appends `subtree` under `host` (or at `index`), incrementing host and
  // its ancestors. Without `as_new_child` the subtree is merged: its
  // children (or the subtree itself, when it is a leaf) are adopted by host.
  // An observation leaf used as host is first pushed down one level so its
  // observation stays at a leaf. Returns the node that received the subtree.
  NodeId attach(NodeId host, NodeId subtree, bool as_new_child = true,
                std::optional<std::size_t> index = std::nullopt) {
    if (!alive(host) || !alive(subtree)) throw StructuralError("attach on a dead node");
    if (nodes_[subtree].parent != kNoNode || subtree == root_) {
      throw StructuralError("node " + std::to_string(subtree) + " is already in the tree");
    }
    if (is_ancestor_or_self(subtree, host)) throw StructuralError("cannot attach a node below itself");
    if (nodes_[host].leaf_obs) host = replace_with_parent(host);
    if (!as_new_child && !nodes_[subtree].is_leaf()) {
      const auto kids = nodes_[subtree].children;
      for (NodeId c : kids) {
        nodes_[c].parent = kNoNode;
        attach(host, c, true);
      }
      nodes_[subtree].children.clear();
      kill(subtree);
      return host;
    }
    auto& ch = nodes_[host].children;
    const auto at = index ? std::min(*index, ch.size()) : ch.size();
    ch.insert(ch.begin() + static_cast<std::ptrdiff_t>(at), subtree);
    nodes_[subtree].parent = host;
    add_counts(host, nodes_[subtree].view(), +1);
    return host;
  }

  // Replaces the singleton leaf by a new internal node whose children are
  // the old leaf and singleton(obs). Returns the new internal node.
  NodeId extend_leaf(NodeId leaf, const Observation& obs) {
    const auto& l = node(leaf);
    if (!l.is_leaf() || !l.leaf_obs) throw StructuralError("extend_leaf needs a singleton leaf");
    if (height_bound_ && depth(leaf) + 1 > *height_bound_) {
      throw BoundError("extending a leaf at depth " + std::to_string(depth(leaf)) +
                       " exceeds height bound " + std::to_string(*height_bound_));
    }
    const NodeId fresh = make_singleton(obs);
    const NodeId joined = replace_with_parent(leaf);
    attach(joined, fresh);
    return joined;
  }

  // Inserts a new internal node at `id`'s position, with `id` as its only
  // child. Counts are copied so no ancestor changes.
  NodeId replace_with_parent(NodeId id) {
    const NodeId fresh = allocate();
    const NodeId parent = nodes_[id].parent;
    if (parent == kNoNode) {
      if (id != root_) throw StructuralError("cannot wrap a detached node");
      root_ = fresh;
    } else {
      auto& ch = nodes_[parent].children;
      *std::find(ch.begin(), ch.end(), id) = fresh;
    }
    auto& f = nodes_[fresh];
    f.parent = parent;
    f.size = nodes_[id].size;
    f.counts = nodes_[id].counts;
    f.children.push_back(id);
    nodes_[id].parent = fresh;
    return fresh;
  }

  // Replaces a one-child node by its child. Returns the surviving id.
  NodeId collapse_single_child(NodeId id) {
    auto& n = nodes_[id];
    if (!n.alive || n.children.size() != 1) return id;
    const NodeId child = n.children.front();
    const NodeId parent = n.parent;
    nodes_[child].parent = parent;
    if (parent == kNoNode) {
      root_ = child;
    } else {
      auto& ch = nodes_[parent].children;
      *std::find(ch.begin(), ch.end(), id) = child;
    }
    n.children.clear();
    n.parent = kNoNode;
    kill(id);
    return child;
  }

  // Collapses every one-child node. Returns (removed id, surviving id) pairs.
  std::vector<std::pair<NodeId, NodeId>> normalize() {
    std::vector<std::pair<NodeId, NodeId>> renames;
    if (empty()) return renames;
    std::vector<NodeId> order;
    visit(root_, [&](NodeId n) { order.push_back(n); });
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      if (nodes_[*it].alive && nodes_[*it].children.size() == 1) {
        renames.emplace_back(*it, collapse_single_child(*it));
      }
    }
    return renames;
  }

  // Frees a detached subtree.
  void destroy(NodeId id) {
    if (!alive(id)) return;
    if (nodes_[id].parent != kNoNode || id == root_) throw StructuralError("destroy needs a detached node");
    std::vector<NodeId> doomed;
    visit(id, [&](NodeId n) { doomed.push_back(n); });
    for (NodeId n : doomed) kill(n);
  }

  // Makes the leaves below `id` its direct children and frees the internal
  // nodes in between. Counts at `id` are unchanged.
  void flatten_below(NodeId id) {
    const auto& n = node(id);
    if (n.is_leaf()) return;
    std::vector<NodeId> leaves_below, inner;
    for (NodeId c : n.children) {
      visit(c, [&](NodeId m) { (nodes_[m].is_leaf() ? leaves_below : inner).push_back(m); });
    }
    for (NodeId m : inner) kill(m);
    for (NodeId l : leaves_below) nodes_[l].parent = id;
    nodes_[id].children = std::move(leaves_below);
  }

  // Frees the detached node `id` and returns its children, now detached.
  std::vector<NodeId> dissolve(NodeId id) {
    const auto& n = node(id);
    if (n.parent != kNoNode || id == root_) throw StructuralError("dissolve needs a detached node");
    auto kids = n.children;
    for (NodeId c : kids) nodes_[c].parent = kNoNode;
    kill(id);
    return kids;
  }

  // Copies the subtree at `id` of `other` (same layout) into this arena as
  // a detached subtree and returns its new root.
  NodeId graft(const Tree& other, NodeId id) {
    if (&other == this) throw ArgumentError("graft needs a different source tree");
    if (!(other.layout_ == layout_)) throw ArgumentError("graft between trees with different layouts");
    const auto& src = other.node(id);
    const NodeId copy = allocate();
    nodes_[copy].size = src.size;
    nodes_[copy].counts = src.counts;
    if (src.leaf_obs) {
      const ObsId obs = *src.leaf_obs;
      nodes_[copy].leaf_obs = obs;
      if (obs_leaf_.size() <= obs) obs_leaf_.resize(obs + 1, kNoNode);
      obs_leaf_[obs] = copy;
    }
    for (NodeId c : src.children) {
      const NodeId child = graft(other, c);
      nodes_[child].parent = copy;
      nodes_[copy].children.push_back(child);
    }
    return copy;
  }

  // Removes every child of `id`, leaving it a leaf with its counts intact.
  void drop_children(NodeId id) {
    const auto kids = node(id).children;
    for (NodeId c : kids) {
      nodes_[c].parent = kNoNode;
      destroy(c);
    }
    nodes_[id].children.clear();
  }

  // Adds sign * delta to `from` and every ancestor.
  void add_counts(NodeId from, CountsView delta, int sign) {
    for (NodeId cur = from; cur != kNoNode; cur = nodes_[cur].parent) {
      auto& n = nodes_[cur];
      if (sign > 0) {
        n.size += delta.size;
        for (std::size_t k = 0; k < delta.counts.size(); ++k) n.counts[k] += delta.counts[k];
      } else {
        n.size -= delta.size;
        for (std::size_t k = 0; k < delta.counts.size(); ++k) n.counts[k] -= delta.counts[k];
      }
    }
  }

  // Throws StructuralError describing the first violated count or shape
  // invariant in the attached tree. Set `allow_single_child` for trees
  // caught mid-build.
  void check_invariants(bool allow_single_child = false) const {
    if (empty()) return;
    if (nodes_[root_].parent != kNoNode) throw StructuralError("root has a parent");
    visit(root_, [&](NodeId id) {
      const auto& n = nodes_[id];
      if (!n.alive) throw StructuralError("dead node " + std::to_string(id) + " reachable");
      for (std::size_t v = 0; v < layout_.variables(); ++v) {
        std::uint64_t sum = 0;
        for (std::size_t j = 0; j < layout_.arity(v); ++j) sum += n.counts[layout_.offset(v) + j];
        if (sum != n.size) {
          throw StructuralError("node " + std::to_string(id) + " variable " + std::to_string(v) +
                                " counts sum to " + std::to_string(sum) + ", size is " +
                                std::to_string(n.size));
        }
      }
      if (n.is_leaf()) {
        if (n.leaf_obs && n.size != 1) throw StructuralError("observation leaf with size != 1");
        return;
      }
      if (n.children.size() == 1 && !allow_single_child) {
        throw StructuralError("node " + std::to_string(id) + " has a single child");
      }
      std::uint64_t size = 0;
      std::vector<std::uint64_t> sum(layout_.total(), 0);
      for (NodeId c : n.children) {
        if (!alive(c) || nodes_[c].parent != id) throw StructuralError("broken parent link");
        size += nodes_[c].size;
        for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += nodes_[c].counts[k];
      }
      if (size != n.size) throw StructuralError("node " + std::to_string(id) + " size != sum of children");
      for (std::size_t k = 0; k < sum.size(); ++k) {
        if (sum[k] != n.counts[k]) {
          throw StructuralError("node " + std::to_string(id) + " counts != sum of children");
        }
      }
    });
    if (height_bound_) {
      for (NodeId leaf : leaves()) {
        if (depth(leaf) > *height_bound_) {
          throw StructuralError("leaf " + std::to_string(leaf) + " at depth " +
                                std::to_string(depth(leaf)) + " exceeds the height bound");
        }
      }
    }
  }

 private:
  NodeId allocate() {
    const auto id = static_cast<NodeId>(nodes_.size());
    ClusterNode n;
    n.id = id;
    n.counts.assign(layout_.total(), 0);
    nodes_.push_back(std::move(n));
    return id;
  }

  void kill(NodeId id) {
    auto& n = nodes_[id];
    n.alive = false;
    n.children.clear();
    n.counts.clear();
    n.counts.shrink_to_fit();
  }

  CountLayout layout_;
  std::optional<std::size_t> height_bound_;
  std::vector<ClusterNode> nodes_;
  std::vector<NodeId> obs_leaf_;
  NodeId root_ = kNoNode;
};

// A single-observation tree: the root is the observation's leaf.
inline Tree singleton_tree(const CountLayout& layout, const Observation& obs,
                           std::optional<std::size_t> height_bound = std::nullopt) {
  Tree t(layout, height_bound);
  t.set_root(t.make_singleton(obs));
  return t;
}

}  // namespace iterclust
