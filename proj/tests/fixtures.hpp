#pragma once

// Shared fixtures and reference oracles for the test suites. The oracles
// work on plain row lists and never touch the library's count tables.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "iterclust/iterclust.hpp"

namespace fixtures {

using Row = std::vector<std::uint32_t>;
using Block = std::vector<Row>;

// F1: one binary variable, rows a, a, b, b.
inline iterclust::Dataset f1() {
  return iterclust::Dataset::from_rows({"V"}, {{"a"}, {"a"}, {"b"}, {"b"}}, "F1");
}

// F2: two binary variables, rows (a,x), (a,x), (b,y), (b,y).
inline iterclust::Dataset f2() {
  return iterclust::Dataset::from_rows({"V1", "V2"}, {{"a", "x"}, {"a", "x"}, {"b", "y"}, {"b", "y"}}, "F2");
}

inline iterclust::Ordering order(std::vector<iterclust::ObsId> ids) { return iterclust::Ordering{std::move(ids)}; }

// Value distribution of one variable over a block of rows.
inline std::map<std::uint32_t, double> distribution(const Block& rows, std::size_t var) {
  std::map<std::uint32_t, double> p;
  for (const auto& r : rows) p[r[var]] += 1.0 / static_cast<double>(rows.size());
  return p;
}

inline double sum_sq(const Block& rows, std::size_t var) {
  double s = 0;
  for (auto [v, p] : distribution(rows, var)) s += p * p;
  return s;
}

inline double sum_plogp(const Block& rows, std::size_t var) {
  double s = 0;
  for (auto [v, p] : distribution(rows, var)) s += p * std::log2(p);
  return s;
}

inline Block concat(const std::vector<Block>& parts) {
  Block all;
  for (const auto& b : parts) all.insert(all.end(), b.begin(), b.end());
  return all;
}

// PU = (1/N) sum_k P(C_k) sum_i [sum_j P(v|C_k)^2 - sum_j P(v)^2].
inline double oracle_pu(const std::vector<Block>& parts) {
  const Block all = concat(parts);
  const std::size_t vars = all.front().size();
  double total = 0;
  for (const auto& b : parts) {
    double inner = 0;
    for (std::size_t i = 0; i < vars; ++i) inner += sum_sq(b, i) - sum_sq(all, i);
    total += static_cast<double>(b.size()) / static_cast<double>(all.size()) * inner;
  }
  return total / static_cast<double>(parts.size());
}

inline double oracle_pu_info(const std::vector<Block>& parts) {
  const Block all = concat(parts);
  const std::size_t vars = all.front().size();
  double total = 0;
  for (const auto& b : parts) {
    double inner = 0;
    for (std::size_t i = 0; i < vars; ++i) inner += sum_plogp(b, i) - sum_plogp(all, i);
    total += static_cast<double>(b.size()) / static_cast<double>(all.size()) * inner;
  }
  return total / static_cast<double>(parts.size());
}

inline double oracle_expected_correct(const std::vector<Block>& parts) {
  const Block all = concat(parts);
  double total = 0;
  for (const auto& b : parts) {
    double inner = 0;
    for (std::size_t i = 0; i < all.front().size(); ++i) inner += sum_sq(b, i);
    total += static_cast<double>(b.size()) / static_cast<double>(all.size()) * inner;
  }
  return total;
}

// Rows of the dataset for a set of ids.
inline Block rows_of(const iterclust::Dataset& d, const std::vector<iterclust::ObsId>& ids) {
  Block out;
  for (auto id : ids) out.push_back(d.at(id).values);
  return out;
}

// Blocks of the partition formed by the children of `node`.
inline std::vector<Block> child_blocks(const iterclust::Tree& t, const iterclust::Dataset& d, iterclust::NodeId node) {
  std::vector<Block> out;
  for (auto c : t.node(node).children) out.push_back(rows_of(d, t.observations(c)));
  return out;
}

// Top-level partition as sorted symbol strings, e.g. {"aa", "bb"}.
inline std::vector<std::string> top_partition(const iterclust::Tree& t, const iterclust::Dataset& d) {
  std::vector<std::string> out;
  for (auto c : t.node(t.root()).children) {
    std::string s;
    for (auto id : t.observations(c)) {
      for (std::size_t i = 0; i < d.variables(); ++i) s += d.symbol(i, d.at(id).values[i]);
    }
    std::sort(s.begin(), s.end());
    out.push_back(s);
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Every set partition of {0..n-1} as block-index assignments (restricted
// growth strings).
inline void for_each_set_partition(std::size_t n, const std::function<void(const std::vector<int>&)>& fn) {
  std::vector<int> a(n, 0);
  std::function<void(std::size_t, int)> rec = [&](std::size_t i, int max_block) {
    if (i == n) {
      fn(a);
      return;
    }
    for (int b = 0; b <= max_block + 1; ++b) {
      a[i] = b;
      rec(i + 1, std::max(max_block, b));
    }
  };
  if (n == 0) return;
  a[0] = 0;
  rec(1, 0);
}

inline std::vector<Block> blocks_from(const Block& rows, const std::vector<int>& assign) {
  int k = 0;
  for (int b : assign) k = std::max(k, b + 1);
  std::vector<Block> parts(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < rows.size(); ++i) parts[static_cast<std::size_t>(assign[i])].push_back(rows[i]);
  return parts;
}

// Random nominal dataset with `vars` variables of the given arity.
inline iterclust::Dataset random_dataset(iterclust::Rng& rng, std::size_t n, std::size_t vars, std::size_t arity) {
  std::vector<std::vector<std::string>> rows(n, std::vector<std::string>(vars));
  for (auto& r : rows) {
    for (auto& cell : r) cell = std::string(1, static_cast<char>('a' + iterclust::uniform_index(rng, arity)));
  }
  return iterclust::Dataset::from_rows({}, rows, "random");
}

inline std::string data_path(const std::string& file) { return std::string(ITERCLUST_DATA_DIR) + "/" + file; }

// F4: root R over A{A1,A2,A3}, B{B1,B2}, C{C1,C2}; each of the seven
// bottom clusters holds two observations. The hand-set correct counts give
// frontiers {R}, {A,B1,B2,C} and {A1,A2,A3,B,C1,C2}.
struct F4 {
  iterclust::Dataset data;
  iterclust::Tree tree;
  iterclust::FrontierTable table;
  iterclust::NodeId r, a, b, c;
  std::vector<iterclust::NodeId> a_kids, b_kids, c_kids;
};

inline F4 f4() {
  using namespace iterclust;
  std::vector<std::vector<std::string>> rows;
  for (int i = 0; i < 14; ++i) {
    rows.push_back({std::string(1, static_cast<char>('a' + i % 2)), std::string(1, static_cast<char>('a' + i / 2 % 3)),
                    std::string(1, static_cast<char>('a' + i / 7))});
  }
  F4 f{Dataset::from_rows({"V1", "V2", "V3"}, rows, "F4"), Tree{}, {}, 0, 0, 0, 0, {}, {}, {}};
  Tree& t = f.tree = Tree(f.data.layout());
  f.r = t.make_internal();
  t.set_root(f.r);
  ObsId next = 0;
  auto group = [&](NodeId parent, std::size_t clusters, std::vector<NodeId>& kids) {
    const NodeId g = t.make_internal();
    t.attach(parent, g);
    for (std::size_t k = 0; k < clusters; ++k) {
      const NodeId c = t.make_internal();
      t.attach(g, c);
      t.attach(c, t.make_singleton(f.data.at(next++)));
      t.attach(c, t.make_singleton(f.data.at(next++)));
      kids.push_back(c);
    }
    return g;
  };
  f.a = group(f.r, 3, f.a_kids);
  f.b = group(f.r, 2, f.b_kids);
  f.c = group(f.r, 2, f.c_kids);

  // Start from "correct everywhere", so ties push each frontier up to the
  // root, then break ties downward where a finer cut is wanted.
  f.table.correct.assign(3, std::vector<std::uint32_t>(t.arena_size(), 0));
  for (auto& row : f.table.correct) {
    t.visit(f.r, [&](NodeId n) { row[n] = t.node(n).size; });
  }
  auto& v2 = f.table.correct[1];
  v2[f.r] = 0;
  v2[f.b] -= 1;
  auto& v3 = f.table.correct[2];
  v3[f.r] = 0;
  v3[f.a] -= 1;
  v3[f.c] -= 1;
  return f;
}

// Flat sorting at height 2 replayed on row blocks with the direct PU
// oracle: every option is scored as a whole partition, first max wins.
inline std::vector<std::vector<iterclust::ObsId>> oracle_height2_sort(const iterclust::Dataset& d,
                                                                    const std::vector<iterclust::ObsId>& order) {
  std::vector<std::vector<iterclust::ObsId>> blocks;
  auto pu = [&](const std::vector<std::vector<iterclust::ObsId>>& bs) {
    std::vector<Block> parts;
    for (const auto& b : bs) parts.push_back(rows_of(d, b));
    return oracle_pu(parts);
  };
  for (iterclust::ObsId id : order) {
    if (blocks.empty()) {
      blocks.push_back({id});
      continue;
    }
    std::vector<std::vector<std::vector<iterclust::ObsId>>> options;
    for (std::size_t k = 0; k < blocks.size(); ++k) {
      auto o = blocks;
      o[k].push_back(id);
      options.push_back(o);
    }
    auto fresh = blocks;
    fresh.push_back({id});
    options.push_back(fresh);
    std::size_t best = 0;
    double best_score = pu(options[0]);
    for (std::size_t k = 1; k < options.size(); ++k) {
      const double s = pu(options[k]);
      if (s > best_score + 1e-12 * std::max(1.0, std::abs(best_score))) {
        best = k;
        best_score = s;
      }
    }
    blocks = options[best];
  }
  return blocks;
}

inline std::vector<std::vector<iterclust::ObsId>> sorted_blocks(std::vector<std::vector<iterclust::ObsId>> blocks) {
  for (auto& b : blocks) std::sort(b.begin(), b.end());
  std::sort(blocks.begin(), blocks.end());
  return blocks;
}

inline std::vector<std::vector<iterclust::ObsId>> level1_blocks(const iterclust::Tree& t) {
  std::vector<std::vector<iterclust::ObsId>> out;
  if (t.node(t.root()).is_leaf()) return {t.observations(t.root())};
  for (iterclust::NodeId c : t.node(t.root()).children) out.push_back(t.observations(c));
  return out;
}

// Root with children X = (x1, x2, x3) and Y = (y1, y2).
inline iterclust::Tree three_plus_two(iterclust::Dataset& d) {
  d = iterclust::Dataset::from_rows({"v"}, {{"x"}, {"x"}, {"x"}, {"y"}, {"y"}});
  iterclust::Tree t(d.layout());
  const iterclust::NodeId root = t.make_internal();
  t.set_root(root);
  const iterclust::NodeId y = t.make_internal(), x = t.make_internal();
  t.attach(root, y);
  t.attach(root, x);
  for (iterclust::ObsId id : {0u, 1u, 2u}) t.attach(x, t.make_singleton(d.at(id)));
  for (iterclust::ObsId id : {3u, 4u}) t.attach(y, t.make_singleton(d.at(id)));
  return t;
}

}  // namespace fixtures
