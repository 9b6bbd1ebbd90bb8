// iterclust: build, optimize, validate and evaluate categorization trees
// over nominal CSV data, and run multi-trial experiments.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "iterclust/iterclust.hpp"

namespace ic = iterclust;

namespace {

struct Common {
  std::string data;
  bool no_header = false;
  std::string objective = "pu";
  std::size_t height = 2;
  std::uint64_t seed = 1;
  std::string out;
  std::optional<std::size_t> subsample;
};

void add_common(CLI::App* cmd, Common& c, bool with_height = true) {
  cmd->add_option("--data", c.data, "CSV file of nominal observations")->required()->check(CLI::ExistingFile);
  cmd->add_flag("--no-header", c.no_header, "first row is data, not variable names");
  cmd->add_option("--objective", c.objective, "pu, pu-info, norm-gr or norm-dm")->capture_default_str();
  if (with_height) {
    cmd->add_option("--height", c.height, "height bound of sorted trees (0: unbounded)")->capture_default_str();
  }
  cmd->add_option("--seed", c.seed, "base random seed")->capture_default_str();
  cmd->add_option("--subsample", c.subsample, "draw this many observations first");
}

ic::Dataset load(const Common& c) {
  ic::Dataset d = ic::load_csv(c.data, !c.no_header);
  if (c.subsample) d = ic::subsample(d, *c.subsample, ic::subsample_seed(c.seed));
  return d;
}

std::optional<std::size_t> bound_of(std::size_t height) {
  if (height == 0) return std::nullopt;
  if (height < 2) throw ic::ConfigError("height must be 0 (unbounded) or at least 2");
  return height;
}

// Writes to --out when given, otherwise to stdout.
void emit(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ic::Error("cannot write " + path);
  f << text;
}

void summarize(const ic::Tree& t, ic::ObjectiveId obj) {
  const auto m = ic::structure_metrics(t);
  std::printf("observations %u\nscore %s\nclusters %zu\nheight %zu\nnodes %zu\nleaves %.0f\n",
              t.node(t.root()).size, ic::fmt(ic::level1_score(t, obj)).c_str(), t.node(t.root()).children.size(),
              t.height(t.root()), t.node_count(), m.leaves);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical conceptual clustering with iterative optimization and frontier pruning"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(ic::kVersion));

  Common c;

  auto* build_cmd = app.add_subcommand("build", "sort observations into a tree");
  add_common(build_cmd, c);
  build_cmd->add_option("--out", c.out, "write the tree as JSON here");

  std::string order_kind = "similarity";
  auto* order_cmd = app.add_subcommand("order", "extract an ordering from a randomly ordered sort");
  add_common(order_cmd, c);
  order_cmd->add_option("--kind", order_kind, "random, similarity or dissimilarity")->capture_default_str();
  order_cmd->add_option("--out", c.out, "write ids here, one per line");

  std::string strategy = "hier", ordering = "random";
  auto* optimize_cmd = app.add_subcommand("optimize", "sort, then apply one optimization strategy");
  add_common(optimize_cmd, c);
  optimize_cmd->add_option("--strategy", strategy, "sort, reorder, single or hier")->capture_default_str();
  optimize_cmd->add_option("--ordering", ordering, "random or similarity")->capture_default_str();
  optimize_cmd->add_option("--out", c.out, "write the tree as JSON here");

  std::string condition = "optimized";
  auto* validate_cmd = app.add_subcommand("validate", "one train/validation/test run with frontier pruning");
  add_common(validate_cmd, c, false);
  validate_cmd->add_option("--condition", condition, "optimized or unoptimized")->capture_default_str();
  validate_cmd->add_option("--out", c.out, "write the frontier report as JSON here");

  double leaves = 0, epl = 0;
  bool tabulated = false;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "depth, breadth and cost from leaves and path length");
  evaluate_cmd->add_option("--leaves", leaves, "leaf count L")->required();
  evaluate_cmd->add_option("--epl", epl, "external path length EPL")->required();
  evaluate_cmd->add_flag("--tabulated", tabulated, "round each value to two decimals before the next");

  std::string kind = "strategies";
  std::vector<std::string> strategies;
  std::size_t trials = 20, workers = 0;
  auto* experiment_cmd = app.add_subcommand("experiment", "multi-trial strategy or validation experiment");
  add_common(experiment_cmd, c);
  experiment_cmd->add_option("--kind", kind, "strategies or validation")->capture_default_str();
  experiment_cmd->add_option("--strategy", strategies, "strategies to run (default: all four)");
  experiment_cmd->add_option("--ordering", ordering, "random or similarity")->capture_default_str();
  experiment_cmd->add_option("--condition", condition, "optimized or unoptimized")->capture_default_str();
  experiment_cmd->add_option("--trials", trials, "number of trials")->capture_default_str();
  experiment_cmd->add_option("--workers", workers, "worker threads (0: all cores)")->capture_default_str();
  experiment_cmd->add_option("--out", c.out, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*evaluate_cmd) {
      const auto m = tabulated ? ic::tabulated_metrics(leaves, epl) : ic::metrics_from(leaves, epl);
      std::printf("leaves %s\nepl %s\ndepth %s\nbreadth %s\ncost %s\n", ic::fmt(m.leaves).c_str(),
                  ic::fmt(m.epl).c_str(), ic::fmt(m.depth).c_str(), ic::fmt(m.breadth).c_str(),
                  ic::fmt(m.cost).c_str());
      if (m.degenerate) std::printf("degenerate\n");
      return 0;
    }

    const auto obj = ic::parse_objective(c.objective);
    const ic::Dataset d = load(c);

    if (*build_cmd) {
      const ic::Tree t = ic::build(d, ic::random_ordering(d, c.seed), bound_of(c.height), obj);
      summarize(t, obj);
      if (!c.out.empty()) emit(c.out, ic::tree_to_json(t, d).dump(2) + "\n");
    } else if (*order_cmd) {
      ic::Ordering ord = ic::random_ordering(d, c.seed);
      if (order_kind != "random") {
        const ic::Tree t = ic::build(d, ord, bound_of(c.height), obj);
        if (order_kind == "similarity") {
          ord = ic::similarity_ordering(t);
        } else if (order_kind == "dissimilarity") {
          ord = ic::dissimilarity_ordering(t);
        } else {
          throw ic::ConfigError("unknown ordering kind '" + order_kind + "'");
        }
      }
      std::string text;
      for (ic::ObsId id : ord.permutation) text += std::to_string(id) + "\n";
      emit(c.out, text);
    } else if (*optimize_cmd) {
      ic::ExperimentConfig cfg;
      cfg.objective = obj;
      cfg.seed = c.seed;
      cfg.height = c.height;
      cfg.ordering = ic::parse_ordering_condition(ordering);
      const auto s = ic::parse_strategy(strategy);
      const auto bound = bound_of(c.height);
      std::vector<ic::ObsId> ids(d.size());
      for (ic::ObsId i = 0; i < d.size(); ++i) ids[i] = i;
      const ic::Ordering ord = ic::initial_ordering(d, ids, cfg, bound, 0);
      ic::Tree t = ic::build(d, ord, bound, obj);
      std::printf("initial %s\n", ic::fmt(ic::level1_score(t, obj)).c_str());
      ic::OptimizerReport report;
      if (s == ic::Strategy::Reorder) {
        auto [best, r] = ic::reorder_resort(d, ord, bound, obj);
        t = std::move(best);
        report = r;
      } else if (s == ic::Strategy::Single) {
        report = ic::redistribute_single(t, obj);
      } else if (s == ic::Strategy::Hier) {
        report = ic::hierarchical_redistribution(t, obj);
      }
      std::printf("passes %zu\nmoves %zu\nseconds %s\n", report.passes, report.moves,
                  ic::fmt(report.wall_time.count()).c_str());
      summarize(t, obj);
      if (!c.out.empty()) emit(c.out, ic::tree_to_json(t, d).dump(2) + "\n");
    } else if (*validate_cmd) {
      ic::ExperimentConfig cfg;
      cfg.objective = obj;
      cfg.seed = c.seed;
      cfg.condition = ic::parse_tree_condition(condition);
      const auto parts = ic::split(d, cfg.split, ic::trial_seeds(cfg.seed, 0).split);
      const ic::Tree full = ic::training_tree(d, parts.train, cfg, 0);
      const auto table = ic::accumulate(full, ic::observations_of(d, parts.validation), obj);
      const auto f = ic::select_frontiers(table, full);
      const ic::Tree pruned = ic::prune(full, f);
      const auto test = ic::observations_of(d, parts.test);
      const auto before = ic::structure_metrics(full);
      const auto after = ic::structure_metrics(pruned);
      std::printf("train %zu\nvalidation %zu\ntest %zu\n", parts.train.size(), parts.validation.size(),
                  parts.test.size());
      std::printf("unvalidated leaves %.0f accuracy %s\n", before.leaves,
                  ic::fmt(ic::accuracy(full, test, nullptr, obj)).c_str());
      std::printf("validated leaves %.0f accuracy %s frontier %s\n", after.leaves,
                  ic::fmt(ic::accuracy(pruned, test, &f, obj)).c_str(), ic::fmt(ic::frontier_stats(f).mean).c_str());
      if (!c.out.empty()) emit(c.out, ic::frontier_to_json(full, d, f, table).dump(2) + "\n");
    } else if (*experiment_cmd) {
      ic::ExperimentConfig cfg;
      cfg.data_path = c.data;
      cfg.objective = obj;
      cfg.seed = c.seed;
      cfg.height = c.height;
      cfg.trials = trials;
      cfg.workers = workers;
      cfg.subsample = c.subsample;
      cfg.ordering = ic::parse_ordering_condition(ordering);
      cfg.condition = ic::parse_tree_condition(condition);
      if (!strategies.empty()) {
        cfg.strategies.clear();
        for (const auto& s : strategies) cfg.strategies.push_back(ic::parse_strategy(s));
      }
      cfg.validate();
      if (kind == "strategies") {
        const auto runs = ic::run_strategies(d, cfg);
        ic::write_experiment(c.out, cfg, ic::ExperimentKind::Strategies, d, &runs, nullptr);
        ic::write_strategy_csv(std::cout, runs, cfg);
      } else if (kind == "validation") {
        const auto runs = ic::run_validation(d, cfg);
        ic::write_experiment(c.out, cfg, ic::ExperimentKind::Validation, d, nullptr, &runs);
        ic::write_validation_csv(std::cout, runs);
      } else {
        throw ic::ConfigError("unknown experiment kind '" + kind + "' (expected strategies or validation)");
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "iterclust: error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
