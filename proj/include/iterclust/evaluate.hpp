#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>

#include "iterclust/cat_tree.hpp"
#include "iterclust/frontier.hpp"
#include "iterclust/objective.hpp"

namespace iterclust {

struct MetricsReport {
  double accuracy = std::numeric_limits<double>::quiet_NaN();
  double leaves = 0.0;   // L
  double epl = 0.0;      // sum over leaves of depth * size
  double depth = 0.0;    // D = EPL / L
  double breadth = 0.0;  // B = L^(1/D)
  double cost = 0.0;     // C = B * D
  bool degenerate = false;  // D = 0: breadth and cost are undefined
};

// Depth, breadth and cost from a leaf count and external path length.
inline MetricsReport metrics_from(double leaves, double epl) {
  if (!(leaves > 0.0)) throw ArgumentError("leaf count must be positive");
  MetricsReport r;
  r.leaves = leaves;
  r.epl = epl;
  r.depth = epl / leaves;
  if (r.depth <= 0.0) {
    r.depth = 0.0;
    r.breadth = std::numeric_limits<double>::quiet_NaN();
    r.cost = std::numeric_limits<double>::quiet_NaN();
    r.degenerate = true;
    return r;
  }
  r.breadth = std::pow(leaves, 1.0 / r.depth);
  r.cost = r.breadth * r.depth;
  return r;
}

// Same quantities at printed precision: each value is rounded before the
// next one is derived from it, as in a table where C is the product of the
// B and D columns shown.
inline MetricsReport tabulated_metrics(double leaves, double epl, int digits = 2) {
  const double scale = std::pow(10.0, digits);
  auto round = [scale](double x) { return std::round(x * scale) / scale; };
  MetricsReport r = metrics_from(leaves, epl);
  if (r.degenerate) return r;
  r.depth = round(r.depth);
  r.breadth = round(std::pow(leaves, 1.0 / r.depth));
  r.cost = round(r.breadth * r.depth);
  return r;
}

inline MetricsReport structure_metrics(const Tree& tree) {
  double leaves = 0.0, epl = 0.0;
  for (NodeId leaf : tree.leaves()) {
    leaves += 1.0;
    epl += static_cast<double>(tree.depth(leaf)) * tree.node(leaf).size;
  }
  return metrics_from(leaves, epl);
}

// Majority value of the masked variable where classification stops: the
// first path node on the variable's frontier when one is given, otherwise
// the leaf reached.
inline ValueId predict(const Tree& tree, const Observation& obs, std::size_t masked,
                       const Frontier* frontier = nullptr, ObjectiveId objective = ObjectiveId::PuGini) {
  const auto path = classify_readonly(tree, obs, masked, objective);
  NodeId stop = path.back();
  if (frontier) {
    for (NodeId n : path) {
      if (frontier->contains(masked, n)) {
        stop = n;
        break;
      }
    }
  }
  return tree.majority(stop, masked);
}

// Fraction of correct predictions with each variable of each test
// observation masked in turn.
inline double accuracy(const Tree& tree, std::span<const Observation> test, const Frontier* frontier = nullptr,
                       ObjectiveId objective = ObjectiveId::PuGini) {
  if (test.empty()) throw EmptyInputError("test set is empty");
  const std::size_t vars = tree.layout().variables();
  std::size_t correct = 0;
  for (const auto& obs : test) {
    for (std::size_t v = 0; v < vars; ++v) {
      if (predict(tree, obs, v, frontier, objective) == obs.values[v]) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(test.size() * vars);
}

}  // namespace iterclust
