#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "iterclust/construct.hpp"
#include "iterclust/dataset.hpp"
#include "iterclust/error.hpp"
#include "iterclust/evaluate.hpp"
#include "iterclust/frontier.hpp"
#include "iterclust/objective.hpp"
#include "iterclust/optimize.hpp"
#include "iterclust/random.hpp"

namespace iterclust {

inline constexpr const char* kVersion = "0.1.0";

enum class Strategy { Sort, Reorder, Single, Hier };
enum class OrderingCondition { Random, Similarity };
enum class TreeCondition { Optimized, Unoptimized };

inline std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::Sort: return "sort";
    case Strategy::Reorder: return "reorder";
    case Strategy::Single: return "single";
    case Strategy::Hier: return "hier";
  }
  return "?";
}

inline std::string to_string(OrderingCondition c) { return c == OrderingCondition::Random ? "random" : "similarity"; }
inline std::string to_string(TreeCondition c) { return c == TreeCondition::Optimized ? "optimized" : "unoptimized"; }

inline Strategy parse_strategy(const std::string& s) {
  for (auto v : {Strategy::Sort, Strategy::Reorder, Strategy::Single, Strategy::Hier}) {
    if (to_string(v) == s) return v;
  }
  throw ConfigError("unknown strategy '" + s + "' (expected sort, reorder, single or hier)");
}

inline OrderingCondition parse_ordering_condition(const std::string& s) {
  if (s == "random") return OrderingCondition::Random;
  if (s == "similarity") return OrderingCondition::Similarity;
  throw ConfigError("unknown ordering condition '" + s + "' (expected random or similarity)");
}

inline TreeCondition parse_tree_condition(const std::string& s) {
  if (s == "optimized") return TreeCondition::Optimized;
  if (s == "unoptimized") return TreeCondition::Unoptimized;
  throw ConfigError("unknown tree condition '" + s + "' (expected optimized or unoptimized)");
}

struct ExperimentConfig {
  std::string data_path;
  ObjectiveId objective = ObjectiveId::PuGini;
  std::vector<Strategy> strategies{Strategy::Sort, Strategy::Reorder, Strategy::Single, Strategy::Hier};
  std::size_t height = 2;
  std::size_t trials = 20;
  std::uint64_t seed = 1;
  std::array<double, 3> split{0.4, 0.4, 0.2};
  OrderingCondition ordering = OrderingCondition::Random;
  TreeCondition condition = TreeCondition::Optimized;
  std::optional<std::size_t> subsample;
  std::size_t workers = 0;  // 0: one per hardware thread

  void validate() const {
    if (trials < 1) throw ConfigError("trials must be at least 1");
    if (height < 2) throw ConfigError("height must be at least 2");
    if (strategies.empty()) throw ConfigError("no strategy selected");
  }
};

// Seeds for one trial, all derived from the config seed.
struct TrialSeeds {
  std::uint64_t ordering = 0;
  std::uint64_t split = 0;
};

inline TrialSeeds trial_seeds(std::uint64_t base, std::size_t trial) {
  return {derive_seed(base, trial, "ordering"), derive_seed(base, trial, "split")};
}

inline std::uint64_t subsample_seed(std::uint64_t base) { return derive_seed(base, 0, "subsample"); }

// Runs job(i) for i in [0, n) on at most `workers` threads. The first
// exception thrown by any job is rethrown once all threads have joined.
template <typename Job>
void run_pool(std::size_t n, std::size_t workers, Job&& job) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, n);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        job(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

// ---- optimization strategies ------------------------------------------

struct StrategyRun {
  std::size_t trial = 0;
  Strategy strategy = Strategy::Sort;
  double score = 0.0;  // level-1 objective of the final tree
  std::size_t clusters = 0;
  std::size_t passes = 0;
  std::size_t moves = 0;
  double seconds = 0.0;
};

// Initial ordering for a trial: random, or the similarity ordering of a
// tree sorted from that random ordering.
inline Ordering initial_ordering(const Dataset& d, std::vector<ObsId> ids, const ExperimentConfig& cfg,
                                 std::optional<std::size_t> height, std::size_t trial) {
  Ordering ord = random_ordering(std::move(ids), trial_seeds(cfg.seed, trial).ordering);
  if (cfg.ordering == OrderingCondition::Similarity) {
    ord = similarity_ordering(build(d, ord, height, cfg.objective));
  }
  return ord;
}

inline std::vector<StrategyRun> strategy_trial(const Dataset& d, const ExperimentConfig& cfg, std::size_t trial) {
  std::vector<ObsId> ids(d.size());
  for (ObsId i = 0; i < d.size(); ++i) ids[i] = i;
  const Ordering ord = initial_ordering(d, ids, cfg, cfg.height, trial);
  std::vector<StrategyRun> runs;
  for (Strategy s : cfg.strategies) {
    detail::Stopwatch clock;
    StrategyRun run;
    run.trial = trial;
    run.strategy = s;
    Tree tree;
    if (s == Strategy::Reorder) {
      auto [best, report] = reorder_resort(d, ord, cfg.height, cfg.objective);
      tree = std::move(best);
      run.passes = report.passes;
      run.moves = report.moves;
    } else {
      tree = build(d, ord, cfg.height, cfg.objective);
      OptimizerReport report;
      if (s == Strategy::Single) report = redistribute_single(tree, cfg.objective);
      if (s == Strategy::Hier) report = hierarchical_redistribution(tree, cfg.objective);
      run.passes = report.passes;
      run.moves = report.moves;
    }
    run.score = level1_score(tree, cfg.objective);
    run.clusters = tree.node(tree.root()).children.size();
    run.seconds = clock.elapsed().count();
    runs.push_back(run);
  }
  return runs;
}

// Rows ordered by trial, then by the configured strategy order.
inline std::vector<StrategyRun> run_strategies(const Dataset& d, const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<std::vector<StrategyRun>> per_trial(cfg.trials);
  run_pool(cfg.trials, cfg.workers, [&](std::size_t t) { per_trial[t] = strategy_trial(d, cfg, t); });
  std::vector<StrategyRun> out;
  for (auto& rows : per_trial) out.insert(out.end(), rows.begin(), rows.end());
  return out;
}

// ---- validation pipeline ----------------------------------------------

struct ClusteringStats {
  MetricsReport metrics;
  std::vector<std::size_t> frontier_sizes;
  double frontier_mean = 0.0;
};

struct ValidationRun {
  std::size_t trial = 0;
  ClusteringStats unvalidated;
  ClusteringStats validated;
  double seconds = 0.0;
};

// Tree over the training ids. Optimized: layered build with hierarchical
// redistribution. Unoptimized: an unbounded sort of the similarity
// ordering taken from a random-order unbounded sort, left as is.
inline Tree training_tree(const Dataset& d, const std::vector<ObsId>& train, const ExperimentConfig& cfg,
                          std::size_t trial) {
  const std::uint64_t seed = trial_seeds(cfg.seed, trial).ordering;
  if (cfg.condition == TreeCondition::Optimized) {
    return layered_build(d, random_ordering(train, seed), cfg.objective);
  }
  const Tree prior = build(d, random_ordering(train, seed), std::nullopt, cfg.objective);
  return build(d, similarity_ordering(prior), std::nullopt, cfg.objective);
}

inline std::vector<Observation> observations_of(const Dataset& d, const std::vector<ObsId>& ids) {
  std::vector<Observation> out;
  out.reserve(ids.size());
  for (ObsId id : ids) out.push_back(d.at(id));
  return out;
}

inline ClusteringStats clustering_stats(const Tree& tree, const std::vector<Observation>& test,
                                        const Frontier& frontier, bool use_frontier, ObjectiveId objective) {
  ClusteringStats s;
  s.metrics = structure_metrics(tree);
  s.metrics.accuracy = accuracy(tree, test, use_frontier ? &frontier : nullptr, objective);
  const auto fs = frontier_stats(frontier);
  s.frontier_sizes = fs.sizes;
  s.frontier_mean = fs.mean;
  return s;
}

inline ValidationRun validation_trial(const Dataset& d, const ExperimentConfig& cfg, std::size_t trial) {
  detail::Stopwatch clock;
  const SplitResult parts = split(d, cfg.split, trial_seeds(cfg.seed, trial).split);
  if (parts.train.empty() || parts.validation.empty() || parts.test.empty()) {
    throw ArgumentError("dataset too small to split into train, validation and test");
  }
  const Tree full = training_tree(d, parts.train, cfg, trial);
  const auto validation = observations_of(d, parts.validation);
  const auto test = observations_of(d, parts.test);

  ValidationRun run;
  run.trial = trial;
  run.unvalidated = clustering_stats(full, test, leaf_frontier(full), false, cfg.objective);
  const Frontier f = select_frontiers(accumulate(full, validation, cfg.objective), full);
  const Tree pruned = prune(full, f);
  run.validated = clustering_stats(pruned, test, f, true, cfg.objective);
  run.seconds = clock.elapsed().count();
  return run;
}

inline std::vector<ValidationRun> run_validation(const Dataset& d, const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<ValidationRun> runs(cfg.trials);
  run_pool(cfg.trials, cfg.workers, [&](std::size_t t) { runs[t] = validation_trial(d, cfg, t); });
  return runs;
}

// ---- aggregation and output -------------------------------------------

inline double mean_of(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return xs.empty() ? std::numeric_limits<double>::quiet_NaN() : s / static_cast<double>(xs.size());
}

// Sample standard deviation; NaN below two values.
inline double sample_std(const std::vector<double>& xs) {
  if (xs.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const double m = mean_of(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

inline std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  std::string s = buf;
  return s == "-0.000000" ? "0.000000" : s;
}

inline void write_strategy_csv(std::ostream& out, const std::vector<StrategyRun>& runs,
                               const ExperimentConfig& cfg) {
  out << "trial,strategy,score,clusters,passes,moves\n";
  for (const auto& r : runs) {
    out << r.trial << ',' << to_string(r.strategy) << ',' << fmt(r.score) << ',' << r.clusters << ',' << r.passes
        << ',' << r.moves << '\n';
  }
  for (const char* stat : {"mean", "std"}) {
    for (Strategy s : cfg.strategies) {
      std::vector<double> score, clusters, passes, moves;
      for (const auto& r : runs) {
        if (r.strategy != s) continue;
        score.push_back(r.score);
        clusters.push_back(static_cast<double>(r.clusters));
        passes.push_back(static_cast<double>(r.passes));
        moves.push_back(static_cast<double>(r.moves));
      }
      auto agg = stat[0] == 'm' ? mean_of : sample_std;
      out << stat << ',' << to_string(s) << ',' << fmt(agg(score)) << ',' << fmt(agg(clusters)) << ','
          << fmt(agg(passes)) << ',' << fmt(agg(moves)) << '\n';
    }
  }
}

inline void write_strategy_timing(std::ostream& out, const std::vector<StrategyRun>& runs) {
  out << "trial,strategy,seconds\n";
  for (const auto& r : runs) out << r.trial << ',' << to_string(r.strategy) << ',' << fmt(r.seconds) << '\n';
}

inline void write_validation_csv(std::ostream& out, const std::vector<ValidationRun>& runs) {
  out << "trial,clustering,leaves,accuracy,frontier_size,epl,depth,breadth,cost\n";
  auto row = [&](const std::string& trial, const char* which, const ClusteringStats& s) {
    const auto& m = s.metrics;
    out << trial << ',' << which << ',' << fmt(m.leaves) << ',' << fmt(m.accuracy) << ',' << fmt(s.frontier_mean)
        << ',' << fmt(m.epl) << ',' << fmt(m.depth) << ',' << fmt(m.breadth) << ',' << fmt(m.cost) << '\n';
  };
  for (const auto& r : runs) {
    row(std::to_string(r.trial), "unvalidated", r.unvalidated);
    row(std::to_string(r.trial), "validated", r.validated);
  }
  using Field = ClusteringStats ValidationRun::*;
  for (auto [which, field] : {std::pair<const char*, Field>{"unvalidated", &ValidationRun::unvalidated},
                              std::pair<const char*, Field>{"validated", &ValidationRun::validated}}) {
    std::vector<double> leaves, acc, fsize, epl, depth, breadth, cost;
    for (const auto& r : runs) {
      const auto& s = r.*field;
      leaves.push_back(s.metrics.leaves);
      acc.push_back(s.metrics.accuracy);
      fsize.push_back(s.frontier_mean);
      epl.push_back(s.metrics.epl);
      depth.push_back(s.metrics.depth);
      breadth.push_back(s.metrics.breadth);
      cost.push_back(s.metrics.cost);
    }
    ClusteringStats mean;
    mean.metrics = MetricsReport{mean_of(acc), mean_of(leaves), mean_of(epl), mean_of(depth), mean_of(breadth),
                                 mean_of(cost), false};
    mean.frontier_mean = mean_of(fsize);
    row("mean", which, mean);

    // Frontier deviation: per-variable std over trials, averaged over variables.
    std::vector<double> per_var;
    const std::size_t vars = runs.empty() ? 0 : (runs.front().*field).frontier_sizes.size();
    for (std::size_t v = 0; v < vars; ++v) {
      std::vector<double> sizes;
      for (const auto& r : runs) sizes.push_back(static_cast<double>((r.*field).frontier_sizes[v]));
      per_var.push_back(sample_std(sizes));
    }
    ClusteringStats sd;
    sd.metrics = MetricsReport{sample_std(acc), sample_std(leaves), sample_std(epl), sample_std(depth),
                               sample_std(breadth), sample_std(cost), false};
    sd.frontier_mean = mean_of(per_var);
    row("std", which, sd);
  }
}

inline void write_validation_timing(std::ostream& out, const std::vector<ValidationRun>& runs) {
  out << "trial,seconds\n";
  for (const auto& r : runs) out << r.trial << ',' << fmt(r.seconds) << '\n';
}

enum class ExperimentKind { Strategies, Validation };

inline nlohmann::ordered_json manifest(const ExperimentConfig& cfg, ExperimentKind kind, const Dataset& d) {
  nlohmann::ordered_json m;
  m["tool"] = "iterclust";
  m["version"] = kVersion;
  m["experiment"] = kind == ExperimentKind::Strategies ? "strategies" : "validation";
  m["dataset"] = {{"path", cfg.data_path}, {"name", d.name}, {"observations", d.size()},
                  {"variables", d.variables()}};
  if (cfg.subsample) m["dataset"]["subsample"] = {{"size", *cfg.subsample}, {"seed", subsample_seed(cfg.seed)}};
  auto& c = m["config"];
  c["objective"] = to_string(cfg.objective);
  c["seed"] = cfg.seed;
  c["trials"] = cfg.trials;
  if (kind == ExperimentKind::Strategies) {
    c["height"] = cfg.height;
    c["ordering"] = to_string(cfg.ordering);
    auto& s = c["strategies"] = nlohmann::ordered_json::array();
    for (Strategy x : cfg.strategies) s.push_back(to_string(x));
  } else {
    c["condition"] = to_string(cfg.condition);
    c["split"] = cfg.split;
  }
  auto& seeds = m["trial_seeds"] = nlohmann::ordered_json::array();
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    const auto s = trial_seeds(cfg.seed, t);
    seeds.push_back({{"trial", t}, {"ordering", s.ordering}, {"split", s.split}});
  }
  return m;
}

// Writes results.csv, timing.csv and manifest.json into `dir`. Results and
// manifest depend only on the config; wall times go to timing.csv alone.
inline void write_experiment(const std::filesystem::path& dir, const ExperimentConfig& cfg, ExperimentKind kind,
                             const Dataset& d, const std::vector<StrategyRun>* strategies,
                             const std::vector<ValidationRun>* validation) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw Error("cannot write " + (dir / name).string());
    return f;
  };
  {
    auto f = open("results.csv");
    if (strategies) write_strategy_csv(f, *strategies, cfg);
    if (validation) write_validation_csv(f, *validation);
  }
  {
    auto f = open("timing.csv");
    if (strategies) write_strategy_timing(f, *strategies);
    if (validation) write_validation_timing(f, *validation);
  }
  open("manifest.json") << manifest(cfg, kind, d).dump(2) << '\n';
}

}  // namespace iterclust
