#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "iterclust/cat_tree.hpp"
#include "iterclust/dataset.hpp"
#include "iterclust/error.hpp"

namespace iterclust {

enum class ObjectiveId { PuGini, PuInfo, NormGainRatio, NormDeMantaras };

inline std::string_view to_string(ObjectiveId id) {
  switch (id) {
    case ObjectiveId::PuGini: return "pu";
    case ObjectiveId::PuInfo: return "pu-info";
    case ObjectiveId::NormGainRatio: return "norm-gr";
    case ObjectiveId::NormDeMantaras: return "norm-dm";
  }
  return "?";
}

inline ObjectiveId parse_objective(std::string_view name) {
  if (name == "pu") return ObjectiveId::PuGini;
  if (name == "pu-info") return ObjectiveId::PuInfo;
  if (name == "norm-gr") return ObjectiveId::NormGainRatio;
  if (name == "norm-dm") return ObjectiveId::NormDeMantaras;
  throw ConfigError("unknown objective '" + std::string(name) + "'");
}

// A parent cluster and a partition {C_1..C_N} of its observations.
struct PartitionView {
  const CountLayout* layout = nullptr;
  CountsView parent;
  std::vector<CountsView> siblings;
};

// Partition formed by the children of `id`.
inline PartitionView partition_of(const Tree& tree, NodeId id) {
  PartitionView p{&tree.layout(), tree.node(id).view(), {}};
  for (NodeId c : tree.node(id).children) p.siblings.push_back(tree.node(c).view());
  return p;
}

namespace detail {

// 0 log 0 = 0.
inline double xlog2x(double p) { return p > 0.0 ? p * std::log2(p) : 0.0; }

inline void require_nonempty(CountsView c, const char* what) {
  if (c.size == 0) throw ArgumentError(std::string(what) + " is empty");
}

inline void require_partition(const PartitionView& p) {
  if (p.layout == nullptr) throw ArgumentError("partition view has no layout");
  if (p.siblings.empty()) throw ArgumentError("partition has no clusters");
  require_nonempty(p.parent, "parent cluster");
  for (const auto& s : p.siblings) require_nonempty(s, "cluster");
}

}  // namespace detail

// CU(C_k) = P(C_k) sum_i sum_j [P(A_i=V_ij|C_k)^2 - P(A_i=V_ij)^2].
inline double category_utility(const CountLayout& layout, CountsView c, CountsView parent) {
  detail::require_nonempty(c, "cluster");
  detail::require_nonempty(parent, "parent cluster");
  double sum = 0.0;
  for (std::size_t k = 0; k < layout.total(); ++k) {
    const double pc = static_cast<double>(c.counts[k]) / c.size;
    const double pp = static_cast<double>(parent.counts[k]) / parent.size;
    sum += pc * pc - pp * pp;
  }
  return static_cast<double>(c.size) / parent.size * sum;
}

// Information-theoretic analog: P(C_k) sum_i sum_j [p log2 p - q log2 q].
inline double info_category_utility(const CountLayout& layout, CountsView c, CountsView parent) {
  detail::require_nonempty(c, "cluster");
  detail::require_nonempty(parent, "parent cluster");
  double sum = 0.0;
  for (std::size_t k = 0; k < layout.total(); ++k) {
    sum += detail::xlog2x(static_cast<double>(c.counts[k]) / c.size) -
           detail::xlog2x(static_cast<double>(parent.counts[k]) / parent.size);
  }
  return static_cast<double>(c.size) / parent.size * sum;
}

inline double partition_utility(const PartitionView& p) {
  detail::require_partition(p);
  double sum = 0.0;
  for (const auto& s : p.siblings) sum += category_utility(*p.layout, s, p.parent);
  return sum / static_cast<double>(p.siblings.size());
}

inline double info_partition_utility(const PartitionView& p) {
  detail::require_partition(p);
  double sum = 0.0;
  for (const auto& s : p.siblings) sum += info_category_utility(*p.layout, s, p.parent);
  return sum / static_cast<double>(p.siblings.size());
}

namespace detail {

// Per-variable information-gain numerator
// sum_k P(C_k) sum_j [P(V_ij|C_k) log2 P(V_ij|C_k) - P(V_ij) log2 P(V_ij)].
inline double info_gain_numerator(const PartitionView& p, std::size_t var) {
  const auto& layout = *p.layout;
  double num = 0.0;
  for (const auto& s : p.siblings) {
    double inner = 0.0;
    for (std::size_t j = 0; j < layout.arity(var); ++j) {
      const std::size_t k = layout.offset(var) + j;
      inner += xlog2x(static_cast<double>(s.counts[k]) / s.size) -
               xlog2x(static_cast<double>(p.parent.counts[k]) / p.parent.size);
    }
    num += static_cast<double>(s.size) / p.parent.size * inner;
  }
  return num;
}

}  // namespace detail

// sum_i numerator_i / (-sum_k P(C_k) log2 P(C_k)).
inline double norm_gain_ratio_score(const PartitionView& p) {
  detail::require_partition(p);
  double denom = 0.0;
  for (const auto& s : p.siblings) denom -= detail::xlog2x(static_cast<double>(s.size) / p.parent.size);
  if (denom <= 1e-12) throw UndefinedScoreError("cluster entropy is zero");
  double score = 0.0;
  for (std::size_t i = 0; i < p.layout->variables(); ++i) score += detail::info_gain_numerator(p, i) / denom;
  return score;
}

// sum_i numerator_i / (-sum_k sum_j P(A_i=V_ij ^ C_k) log2 P(A_i=V_ij ^ C_k)).
inline double norm_de_mantaras_score(const PartitionView& p) {
  detail::require_partition(p);
  const auto& layout = *p.layout;
  double score = 0.0;
  for (std::size_t i = 0; i < layout.variables(); ++i) {
    double denom = 0.0;
    for (const auto& s : p.siblings) {
      for (std::size_t j = 0; j < layout.arity(i); ++j) {
        denom -= detail::xlog2x(static_cast<double>(s.counts[layout.offset(i) + j]) / p.parent.size);
      }
    }
    if (denom <= 1e-12) {
      throw UndefinedScoreError("joint entropy of variable " + std::to_string(i) + " is zero");
    }
    score += detail::info_gain_numerator(p, i) / denom;
  }
  return score;
}

// Expected number of correctly predicted values under probability matching:
// sum_k P(C_k) sum_i sum_j P(A_i=V_ij|C_k)^2.
inline double expected_correct(const PartitionView& p) {
  detail::require_partition(p);
  double total = 0.0;
  for (const auto& s : p.siblings) {
    double inner = 0.0;
    for (std::size_t k = 0; k < p.layout->total(); ++k) {
      const double pc = static_cast<double>(s.counts[k]) / s.size;
      inner += pc * pc;
    }
    total += static_cast<double>(s.size) / p.parent.size * inner;
  }
  return total;
}

inline double score(ObjectiveId id, const PartitionView& p) {
  switch (id) {
    case ObjectiveId::PuGini: return partition_utility(p);
    case ObjectiveId::PuInfo: return info_partition_utility(p);
    case ObjectiveId::NormGainRatio: return norm_gain_ratio_score(p);
    case ObjectiveId::NormDeMantaras: return norm_de_mantaras_score(p);
  }
  throw ArgumentError("unknown objective");
}

// Score of the partition under `id` (the children of the root by default),
// or nullopt when it is undefined or the node has no children.
inline std::optional<double> level_score(const Tree& tree, ObjectiveId id,
                                         std::optional<NodeId> at = std::nullopt) {
  if (tree.empty()) return std::nullopt;
  const NodeId node = at.value_or(tree.root());
  if (tree.node(node).is_leaf()) return std::nullopt;
  try {
    return score(id, partition_of(tree, node));
  } catch (const UndefinedScoreError&) {
    return std::nullopt;
  }
}

// ---------------------------------------------------------------------------
// Incremental scoring. Every objective above is a function of a few sums
// that are additive over clusters, so a candidate partition that differs
// from the current one in a single cluster is scored from the current sums
// plus that cluster's change. Probabilities use per-variable totals so a
// masked variable (absent from an increment) keeps a proper distribution.

// Counts added to a cluster: an observation (with at most one variable
// masked out) or a whole cluster.
struct Delta {
  std::uint32_t size = 0;
  std::span<const std::uint32_t> counts;
};

// Dense increment for one observation; `masked` leaves that variable out.
inline std::vector<std::uint32_t> observation_counts(const CountLayout& layout, const Observation& obs,
                                                     std::optional<std::size_t> masked = std::nullopt) {
  if (obs.values.size() != layout.variables()) {
    throw ArgumentError("observation does not match the schema");
  }
  std::vector<std::uint32_t> out(layout.total(), 0);
  for (std::size_t i = 0; i < obs.values.size(); ++i) {
    if (masked && *masked == i) continue;
    if (obs.values[i] >= layout.arity(i)) throw ArgumentError("value ordinal out of range");
    out[layout.offset(i) + obs.values[i]] = 1;
  }
  return out;
}

class PartitionScorer {
 public:
  PartitionScorer(const CountLayout& layout, ObjectiveId objective)
      : layout_(&layout), objective_(objective) {}

  ObjectiveId objective() const { return objective_; }
  std::size_t size() const { return siblings_.size(); }

  // `parent` is the cluster being partitioned and `siblings` its current
  // clusters. `parent_delta`, when given, is added to the parent first
  // (the increment being placed below it has not been counted yet).
  void reset(CountsView parent, std::vector<CountsView> siblings, const Delta* parent_delta = nullptr) {
    siblings_ = std::move(siblings);
    Terms parent_terms;
    compute(parent, parent_delta, parent_terms);
    total_ = parent_terms.size;
    q_gini_ = std::move(parent_terms.gini);
    q_plogp_ = std::move(parent_terms.plogp);
    terms_.resize(siblings_.size());
    base_.reset(layout_->variables());
    for (std::size_t k = 0; k < siblings_.size(); ++k) {
      compute(siblings_[k], nullptr, terms_[k]);
      base_.add(terms_[k], total_, +1);
    }
  }

  // The partition as given to reset().
  std::optional<double> current() const { return compose(base_); }

  // Sibling k enlarged by `delta`.
  std::optional<double> with_merge(std::size_t k, const Delta& delta) {
    compute(siblings_.at(k), &delta, scratch_);
    work_ = base_;
    work_.add(terms_[k], total_, -1);
    work_.add(scratch_, total_, +1);
    return compose(work_);
  }

  // `delta` as an additional cluster.
  std::optional<double> with_new(const Delta& delta) {
    zero_.assign(layout_->total(), 0);
    compute(CountsView{0, zero_}, &delta, scratch_);
    work_ = base_;
    work_.add(scratch_, total_, +1);
    return compose(work_);
  }

 private:
  struct Terms {
    double size = 0.0;
    std::vector<double> gini;        // sum_j p^2
    std::vector<double> plogp;       // sum_j p log2 p
    std::vector<unsigned char> has;  // variable has any count
  };

  struct Aggregate {
    double clusters = 0.0;
    double weight = 0.0;  // sum_k w_k
    double wlogw = 0.0;   // sum_k w_k log2 w_k
    std::vector<double> gini, plogp, joint;

    void reset(std::size_t vars) {
      clusters = weight = wlogw = 0.0;
      gini.assign(vars, 0.0);
      plogp.assign(vars, 0.0);
      joint.assign(vars, 0.0);
    }

    void add(const Terms& t, double total, int sign) {
      if (t.size <= 0.0) return;
      const double w = t.size / total;
      const double wl = detail::xlog2x(w);
      const double s = sign;
      clusters += s;
      weight += s * w;
      wlogw += s * wl;
      for (std::size_t i = 0; i < gini.size(); ++i) {
        gini[i] += s * w * t.gini[i];
        plogp[i] += s * w * t.plogp[i];
        joint[i] += s * (w * t.plogp[i] + (t.has[i] ? wl : 0.0));
      }
    }
  };

  static double cell(CountsView base, const Delta* delta, std::size_t k) {
    return static_cast<double>(base.counts[k]) + (delta ? static_cast<double>(delta->counts[k]) : 0.0);
  }

  void compute(CountsView base, const Delta* delta, Terms& out) const {
    const auto& layout = *layout_;
    const std::size_t vars = layout.variables();
    out.size = static_cast<double>(base.size) + (delta ? delta->size : 0);
    out.gini.resize(vars);
    out.plogp.resize(vars);
    out.has.resize(vars);
    for (std::size_t i = 0; i < vars; ++i) {
      const std::size_t off = layout.offset(i);
      const std::size_t arity = layout.arity(i);
      double t = 0.0;
      for (std::size_t j = 0; j < arity; ++j) t += cell(base, delta, off + j);
      double g = 0.0, pl = 0.0;
      if (t > 0.0) {
        for (std::size_t j = 0; j < arity; ++j) {
          const double p = cell(base, delta, off + j) / t;
          g += p * p;
          pl += detail::xlog2x(p);
        }
      }
      out.gini[i] = g;
      out.plogp[i] = pl;
      out.has[i] = t > 0.0;
    }
  }

  std::optional<double> compose(const Aggregate& a) const {
    const std::size_t vars = layout_->variables();
    if (a.clusters < 0.5) return std::nullopt;
    double s = 0.0;
    switch (objective_) {
      case ObjectiveId::PuGini:
        for (std::size_t i = 0; i < vars; ++i) s += a.gini[i] - a.weight * q_gini_[i];
        return s / a.clusters;
      case ObjectiveId::PuInfo:
        for (std::size_t i = 0; i < vars; ++i) s += a.plogp[i] - a.weight * q_plogp_[i];
        return s / a.clusters;
      case ObjectiveId::NormGainRatio: {
        const double denom = -a.wlogw;
        if (denom <= 1e-12) return std::nullopt;
        for (std::size_t i = 0; i < vars; ++i) s += (a.plogp[i] - a.weight * q_plogp_[i]) / denom;
        return s;
      }
      case ObjectiveId::NormDeMantaras:
        for (std::size_t i = 0; i < vars; ++i) {
          const double denom = -a.joint[i];
          if (denom <= 1e-12) return std::nullopt;
          s += (a.plogp[i] - a.weight * q_plogp_[i]) / denom;
        }
        return s;
    }
    return std::nullopt;
  }

  const CountLayout* layout_;
  ObjectiveId objective_;
  double total_ = 0.0;
  std::vector<double> q_gini_, q_plogp_;
  std::vector<CountsView> siblings_;
  std::vector<Terms> terms_;
  Aggregate base_, work_;
  Terms scratch_;
  std::vector<std::uint32_t> zero_;
};

}  // namespace iterclust
