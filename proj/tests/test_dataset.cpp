#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "fixtures.hpp"

using namespace iterclust;

TEST(Dataset, SingleCellGivesOneVariableOfArityOne) {
  std::istringstream in("a\n");
  const Dataset d = parse_csv(in, false);
  ASSERT_EQ(d.variables(), 1u);
  EXPECT_EQ(d.schema[0].arity(), 1u);
  EXPECT_EQ(d.size(), 1u);
}

TEST(Dataset, OrdinalsFollowFirstSeenOrder) {
  std::istringstream in("b\na\nb\n");
  const Dataset d = parse_csv(in, false);
  EXPECT_EQ(d.schema[0].values, (std::vector<std::string>{"b", "a"}));
  EXPECT_EQ(d.at(1).values[0], 1u);
  std::istringstream in2("a\nb\n");
  const Dataset d2 = parse_csv(in2, false);
  EXPECT_EQ(d2.at(0).values[0], 0u);
  EXPECT_EQ(d2.at(1).values[0], 1u);
}

TEST(Dataset, RaggedRowsAreFormatErrors) {
  std::istringstream in("a,b\nc\n");
  EXPECT_THROW(parse_csv(in, false), FormatError);
}

TEST(Dataset, EmptyInputIsRejected) {
  std::istringstream in("");
  EXPECT_THROW(parse_csv(in, false), EmptyInputError);
  std::istringstream header_only("x,y\n");
  EXPECT_THROW(parse_csv(header_only, true), EmptyInputError);
}

TEST(Dataset, HeaderAndCarriageReturns) {
  std::istringstream in("p,q\r\n1,?\r\n2,y\r\n");
  const Dataset d = parse_csv(in, true);
  EXPECT_EQ(d.schema[1].name, "q");
  EXPECT_EQ(d.symbol(1, d.at(0).values[1]), "?");
  EXPECT_EQ(d.decode(d.at(1)), (std::vector<std::string>{"2", "y"}));
}

TEST(Dataset, MissingFileIsAnArgumentError) {
  EXPECT_THROW(load_csv("/nonexistent/file.csv", true), ArgumentError);
}

TEST(Dataset, HouseVotesShape) {
  const Dataset d = load_csv(fixtures::data_path("house-votes-84.csv"), true);
  EXPECT_EQ(d.size(), 435u);
  EXPECT_EQ(d.variables(), 17u);
}

TEST(Dataset, MushroomSubsampleIsReproducible) {
  const Dataset d = load_csv(fixtures::data_path("mushroom.csv"), true);
  EXPECT_EQ(d.size(), 8124u);
  EXPECT_EQ(d.variables(), 23u);
  const Dataset a = subsample(d, 1000, 7);
  const Dataset b = subsample(d, 1000, 7);
  ASSERT_EQ(a.size(), 1000u);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a.observations[i].values, b.observations[i].values);
}

TEST(Dataset, FullSubsampleKeepsTheMultiset) {
  const Dataset d = fixtures::f1();
  const Dataset s = subsample(d, d.size(), 3);
  std::multiset<std::vector<ValueId>> x, y;
  for (const auto& o : d.observations) x.insert(o.values);
  for (const auto& o : s.observations) y.insert(o.values);
  EXPECT_EQ(x, y);
}

TEST(Dataset, SubsampleOfOneIsStable) {
  const Dataset d = fixtures::f1();
  const Dataset a = subsample(d, 1, 11);
  const Dataset b = subsample(d, 1, 11);
  ASSERT_EQ(a.size(), 1u);
  EXPECT_EQ(a.observations[0].values, b.observations[0].values);
  EXPECT_EQ(a.observations[0].id, 0u);
}

TEST(Dataset, SubsampleRangeChecked) {
  const Dataset d = fixtures::f1();
  EXPECT_THROW(subsample(d, 0, 1), ArgumentError);
  EXPECT_THROW(subsample(d, 5, 1), ArgumentError);
}

namespace {

Dataset constant_rows(std::size_t n) {
  return Dataset::from_rows({"v"}, std::vector<std::vector<std::string>>(n, {"z"}));
}

void expect_exact_partition(const SplitResult& s, std::size_t n) {
  std::vector<ObsId> all = s.train;
  all.insert(all.end(), s.validation.begin(), s.validation.end());
  all.insert(all.end(), s.test.begin(), s.test.end());
  EXPECT_TRUE(Ordering{all}.is_permutation_of(n));
}

}  // namespace

TEST(Split, TenSplitsFourFourTwo) {
  const auto s = split(constant_rows(10), {0.4, 0.4, 0.2}, 1);
  EXPECT_EQ(s.train.size(), 4u);
  EXPECT_EQ(s.validation.size(), 4u);
  EXPECT_EQ(s.test.size(), 2u);
  expect_exact_partition(s, 10);
}

TEST(Split, HouseSizedSplit) {
  // floor(0.4*435) = 174, floor(0.2*435) = 87, nothing left over.
  const auto s = split(constant_rows(435), {0.4, 0.4, 0.2}, 5);
  EXPECT_EQ(s.train.size(), 174u);
  EXPECT_EQ(s.validation.size(), 174u);
  EXPECT_EQ(s.test.size(), 87u);
  expect_exact_partition(s, 435);
}

TEST(Split, RemainderGoesRoundRobin) {
  // floor gives 4/4/2 for n = 11 (0.4*11 = 4.4, 0.2*11 = 2.2); one extra to train.
  const auto s = split(constant_rows(11), {0.4, 0.4, 0.2}, 5);
  EXPECT_EQ(s.train.size(), 5u);
  EXPECT_EQ(s.validation.size(), 4u);
  EXPECT_EQ(s.test.size(), 2u);
  expect_exact_partition(s, 11);
}

TEST(Split, SameSeedSameResult) {
  const auto a = split(constant_rows(50), {0.4, 0.4, 0.2}, 9);
  const auto b = split(constant_rows(50), {0.4, 0.4, 0.2}, 9);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.validation, b.validation);
  EXPECT_EQ(a.test, b.test);
}

TEST(Split, FractionsMustSumToOne) {
  EXPECT_THROW(split(constant_rows(10), {0.5, 0.4, 0.2}, 1), ArgumentError);
}

TEST(Ordering, RandomOrderingIsAPermutation) {
  const Dataset one = constant_rows(1);
  EXPECT_EQ(random_ordering(one, 3).permutation, std::vector<ObsId>{0});
  const Dataset d = fixtures::f1();
  const auto a = random_ordering(d, 1);
  const auto b = random_ordering(d, 2);
  EXPECT_TRUE(a.is_permutation_of(4));
  EXPECT_TRUE(b.is_permutation_of(4));
  EXPECT_EQ(random_ordering(d, 1), a);
}

TEST(Ordering, DifferentSeedsUsuallyDiffer) {
  const Dataset d = constant_rows(20);
  EXPECT_NE(random_ordering(d, 1), random_ordering(d, 2));
}

TEST(Random, DerivedSeedsSeparateStreamsAndTrials) {
  EXPECT_NE(derive_seed(1, 0, "ordering"), derive_seed(1, 0, "split"));
  EXPECT_NE(derive_seed(1, 0, "ordering"), derive_seed(1, 1, "ordering"));
  EXPECT_EQ(derive_seed(1, 4, "ordering"), derive_seed(1, 4, "ordering"));
}

TEST(Dataset, DecodeRoundTrip) {
  const Dataset d = fixtures::f2();
  EXPECT_EQ(d.decode(d.at(2)), (std::vector<std::string>{"b", "y"}));
}
