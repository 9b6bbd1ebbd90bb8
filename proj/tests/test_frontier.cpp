#include <gtest/gtest.h>

#include <numeric>
#include <set>

#include "fixtures.hpp"

using namespace iterclust;

namespace {

// {{(a,x),(a,x)},{(b,y),(b,y)}} over F2.
Tree f2_tree(const Dataset& d) {
  Tree t(d.layout(), 2);
  const NodeId root = t.make_internal();
  t.set_root(root);
  for (ObsId first : {0u, 2u}) {
    const NodeId c = t.make_internal();
    t.attach(root, c);
    t.attach(c, t.make_singleton(d.at(first)));
    t.attach(c, t.make_singleton(d.at(first + 1)));
  }
  return t;
}

// Frontier nodes cover the root exactly once and form an antichain.
void expect_cut(const Tree& t, const std::vector<NodeId>& cut) {
  std::size_t covered = 0;
  std::set<NodeId> on(cut.begin(), cut.end());
  for (NodeId n : cut) {
    covered += t.node(n).size;
    for (NodeId up = t.node(n).parent; up != kNoNode; up = t.node(up).parent) EXPECT_FALSE(on.count(up));
  }
  EXPECT_EQ(covered, t.node(t.root()).size);
}

std::size_t leaf_count(const Tree& t) { return t.leaves().size(); }

}  // namespace

TEST(Frontier, RootOnlyTreeClassifiesToRoot) {
  const Dataset d = fixtures::f1();
  const Tree t = singleton_tree(d.layout(), d.at(0));
  EXPECT_EQ(classify_readonly(t, d.at(2)), std::vector<NodeId>{t.root()});
}

TEST(Frontier, MaskedObservationEntersMatchingCluster) {
  const Dataset d = fixtures::f2();
  const Tree t = f2_tree(d);
  // (a,?) with V2 masked; the stored V2 value must not matter.
  for (ValueId v2 : {0u, 1u}) {
    const auto path = classify_readonly(t, Observation{99, {0, v2}}, 1);
    ASSERT_EQ(path.size(), 3u);
    EXPECT_EQ(path[1], t.node(t.leaf_of(0)).parent);
  }
}

TEST(Frontier, ClassificationDoesNotTouchTheTree) {
  const Dataset d = fixtures::f2();
  const Tree t = f2_tree(d);
  const Tree before = t;
  classify_readonly(t, d.at(3), 0);
  before.visit(before.root(), [&](NodeId n) { EXPECT_EQ(before.node(n).counts, t.node(n).counts); });
}

TEST(Frontier, TrainingRowReachesALeafWithItsOwnValues) {
  const Dataset d = fixtures::f2();
  const Tree t = build(d, fixtures::order({0, 2, 1, 3}), std::nullopt, ObjectiveId::PuGini);
  for (ObsId id = 0; id < 4; ++id) {
    const auto path = classify_readonly(t, d.at(id));
    const auto& leaf = t.node(path.back());
    ASSERT_TRUE(leaf.leaf_obs.has_value());
    EXPECT_EQ(d.at(*leaf.leaf_obs).values, d.at(id).values);
  }
}

TEST(Frontier, AccumulateOnF2) {
  const Dataset d = fixtures::f2();
  const Tree t = f2_tree(d);
  const auto table = accumulate(t, d.observations);
  // Root V2 majority is the x/y tie broken to x: only the two x rows count.
  EXPECT_EQ(table.at(1, t.root()), 2u);
  EXPECT_EQ(table.at(0, t.root()), 2u);
  for (std::size_t v = 0; v < 2; ++v) {
    for (NodeId c : t.node(t.root()).children) EXPECT_EQ(table.at(v, c), 2u);
  }
}

TEST(Frontier, AccumulateCountsEveryNodeOnThePath) {
  const Dataset d = fixtures::f2();
  const Tree t = f2_tree(d);
  const std::vector<Observation> one{d.at(0)};
  const auto table = accumulate(t, one);
  std::uint32_t total = 0;
  for (auto c : table.correct[0]) total += c;
  EXPECT_EQ(total, 3u);
  EXPECT_THROW(accumulate(t, std::vector<Observation>{}), EmptyInputError);
}

TEST(Frontier, ChildrenWinOnlyWhenStrictlyBetter) {
  const Dataset d = fixtures::f2();
  const Tree t = f2_tree(d);
  const auto kids = t.node(t.root()).children;
  FrontierTable table;
  table.correct.assign(1, std::vector<std::uint32_t>(t.arena_size(), 0));
  for (NodeId c : kids) table.correct[0][c] = 3;
  table.correct[0][t.root()] = 5;
  EXPECT_EQ(select_frontiers(table, t).nodes[0], kids);
  table.correct[0][t.root()] = 6;
  EXPECT_EQ(select_frontiers(table, t).nodes[0], std::vector<NodeId>{t.root()});
}

TEST(Frontier, FigureFourFixture) {
  const auto f = fixtures::f4();
  const Frontier fr = select_frontiers(f.table, f.tree);
  EXPECT_EQ(fr.nodes[0], std::vector<NodeId>{f.r});
  EXPECT_EQ(fr.nodes[1], (std::vector<NodeId>{f.a, f.b_kids[0], f.b_kids[1], f.c}));
  EXPECT_EQ(fr.nodes[2], (std::vector<NodeId>{f.a_kids[0], f.a_kids[1], f.a_kids[2], f.b, f.c_kids[0], f.c_kids[1]}));
  const auto stats = frontier_stats(fr);
  EXPECT_EQ(stats.sizes, (std::vector<std::size_t>{1, 4, 6}));
  EXPECT_NEAR(stats.mean, 11.0 / 3.0, 1e-12);

  const Tree pruned = prune(f.tree, fr);
  pruned.check_invariants();
  std::vector<NodeId> expected = f.a_kids;
  expected.insert(expected.end(), f.b_kids.begin(), f.b_kids.end());
  expected.insert(expected.end(), f.c_kids.begin(), f.c_kids.end());
  EXPECT_EQ(pruned.leaves(), expected);
}

TEST(Frontier, RootFrontierPrunesToOneNode) {
  const auto f = fixtures::f4();
  Frontier fr;
  fr.nodes.assign(3, {f.r});
  const Tree pruned = prune(f.tree, fr);
  EXPECT_EQ(pruned.leaves(), std::vector<NodeId>{f.r});
  EXPECT_EQ(frontier_stats(Frontier{{{f.r}}}).mean, 1.0);
}

TEST(Frontier, LeafFrontiersLeaveTheTreeAlone) {
  Rng rng(8);
  const Dataset d = fixtures::random_dataset(rng, 30, 4, 3);
  const Tree t = build(d, random_ordering(d, 1), 4, ObjectiveId::PuGini);
  const Frontier fr = leaf_frontier(t);
  EXPECT_EQ(frontier_stats(fr).mean, static_cast<double>(leaf_count(t)));
  const Tree pruned = prune(t, fr);
  EXPECT_EQ(pruned.node_count(), t.node_count());
}

TEST(Frontier, SelectedFrontiersAreCutsAndSurvivePruning) {
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const Dataset d = fixtures::random_dataset(rng, 60, 4, 3);
    std::vector<ObsId> train;
    std::vector<Observation> valid;
    for (ObsId i = 0; i < 60; ++i) {
      if (i % 2) {
        valid.push_back(d.at(i));
      } else {
        train.push_back(i);
      }
    }
    const Tree t = layered_build(d, random_ordering(train, static_cast<std::uint64_t>(trial)), ObjectiveId::PuGini);
    const auto table = accumulate(t, valid);
    for (const auto& row : table.correct) {
      for (auto c : row) EXPECT_LE(c, valid.size());
    }
    const Frontier fr = select_frontiers(table, t);
    for (const auto& cut : fr.nodes) expect_cut(t, cut);

    const Tree pruned = prune(t, fr);
    pruned.check_invariants();
    EXPECT_LE(leaf_count(pruned), leaf_count(t));
    for (const auto& cut : fr.nodes) {
      for (NodeId n : cut) EXPECT_TRUE(pruned.alive(n));
    }
    const Frontier again = select_frontiers(accumulate(pruned, valid), pruned);
    EXPECT_EQ(again.nodes, fr.nodes);
  }
}
