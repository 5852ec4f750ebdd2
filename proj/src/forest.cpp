#include "drsf/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "drsf/parallel.hpp"
#include "drsf/survival.hpp"

namespace drsf {

namespace {

void check_config(const SurvivalDataset& data, const ForestConfig& config) {
  if (config.ntree < 1) throw std::invalid_argument("ntree must be positive");
  if (config.mtry < 1 || config.mtry > data.p())
    throw std::invalid_argument("mtry must lie in [1, p]");
  if (config.nodesize < 1) throw std::invalid_argument("nodesize must be positive");
  if (config.nodedepth < 1) throw std::invalid_argument("nodedepth must be positive");
  if (config.nsplit < 0) throw std::invalid_argument("nsplit must be non-negative");
  if (config.split_params.omega1 < 0.0 || config.split_params.omega1 > 1.0)
    throw std::invalid_argument("omega1 must lie in [0, 1]");
  if (!(config.split_params.omega2 > 0.0))
    throw std::invalid_argument("omega2 must be positive");
  if (!config.xvar_weights.empty()) {
    if (static_cast<Eigen::Index>(config.xvar_weights.size()) != data.p())
      throw std::invalid_argument("xvar_weights length must equal p");
    double total = 0.0;
    for (double w : config.xvar_weights) {
      if (w < 0.0) throw std::invalid_argument("xvar_weights must be non-negative");
      total += w;
    }
    if (!(total > 0.0)) throw std::invalid_argument("xvar_weights must sum to a positive value");
  }
}

std::vector<int> sample_variables(const SurvivalDataset& data, const ForestConfig& config,
                                  Rng& rng) {
  const int p = static_cast<int>(data.p());
  const int m = std::min(config.mtry, p);
  std::vector<int> vars;
  vars.reserve(static_cast<std::size_t>(m));
  if (config.xvar_weights.empty()) {
    std::vector<int> pool(static_cast<std::size_t>(p));
    std::iota(pool.begin(), pool.end(), 0);
    for (int k = 0; k < m; ++k) {
      const auto j = k + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(p - k)));
      std::swap(pool[static_cast<std::size_t>(k)], pool[static_cast<std::size_t>(j)]);
      vars.push_back(pool[static_cast<std::size_t>(k)]);
    }
  } else {
    std::vector<double> w = config.xvar_weights;
    for (int k = 0; k < m; ++k) {
      const double total = std::accumulate(w.begin(), w.end(), 0.0);
      if (!(total > 0.0)) break;
      const double u = rng.uniform01() * total;
      double acc = 0.0;
      int pick = -1;
      for (int j = 0; j < p; ++j) {
        acc += w[static_cast<std::size_t>(j)];
        if (u < acc) { pick = j; break; }
      }
      if (pick < 0)  // guard against accumulated round-off at u ~ total
        for (int j = p - 1; j >= 0; --j)
          if (w[static_cast<std::size_t>(j)] > 0.0) { pick = j; break; }
      if (pick < 0) break;
      vars.push_back(pick);
      w[static_cast<std::size_t>(pick)] = 0.0;
    }
  }
  std::sort(vars.begin(), vars.end());
  return vars;
}

std::vector<double> numeric_thresholds(const std::vector<int>& node_rows, int variable,
                                       const SurvivalDataset& data, int nsplit, Rng& rng) {
  std::vector<double> values;
  values.reserve(node_rows.size());
  for (int row : node_rows) values.push_back(data.covariate(row, variable));
  std::vector<double> thresholds;
  if (nsplit == 0) {
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    for (std::size_t k = 0; k + 1 < values.size(); ++k)
      thresholds.push_back(0.5 * (values[k] + values[k + 1]));
  } else {
    for (int k = 0; k < nsplit; ++k)
      thresholds.push_back(values[rng.uniform_int(values.size())]);
    std::sort(thresholds.begin(), thresholds.end());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  }
  return thresholds;
}

std::vector<int> observed_levels(const std::vector<int>& node_rows, int variable,
                                 const SurvivalDataset& data) {
  std::vector<int> levels;
  for (int row : node_rows)
    levels.push_back(static_cast<int>(std::llround(data.covariate(row, variable))));
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  return levels;
}

}  // namespace

bool Split::send_left(double value) const {
  if (!categorical) return value <= threshold;
  const int level = static_cast<int>(std::llround(value));
  return std::binary_search(left_levels.begin(), left_levels.end(), level);
}

int Tree::route(const SurvivalDataset& data, Eigen::Index row) const {
  int idx = 0;
  while (!nodes[static_cast<std::size_t>(idx)].is_terminal) {
    const TreeNode& node = nodes[static_cast<std::size_t>(idx)];
    idx = node.split.send_left(data.covariate(row, node.split.variable)) ? node.left : node.right;
  }
  return nodes[static_cast<std::size_t>(idx)].terminal_id;
}

double split_score(double a1, double a2, const SplitRuleParams& params) {
  return params.omega1 * (a1 - 0.5) / 2.0 + (1.0 - params.omega1) * (a2 / params.omega2);
}

SplitEvaluation evaluate_split(const std::vector<int>& node_rows, const Split& split,
                               const SurvivalDataset& data, const SplitRuleParams& params,
                               int min_child_size) {
  SplitEvaluation eval;
  const auto m = static_cast<Eigen::Index>(node_rows.size());
  Eigen::VectorXd v(m);
  int n_left = 0, n_right = 0;
  int events_left = 0, events_right = 0;
  int arms_left[2] = {0, 0}, arms_right[2] = {0, 0};
  for (Eigen::Index k = 0; k < m; ++k) {
    const int row = node_rows[static_cast<std::size_t>(k)];
    const bool left = split.send_left(data.covariate(row, split.variable));
    v[k] = left ? 0.0 : 1.0;
    (left ? n_left : n_right) += 1;
    (left ? events_left : events_right) += data.event(row) ? 1 : 0;
    (left ? arms_left : arms_right)[data.treatment(row)] += 1;
  }
  if (n_left < min_child_size || n_right < min_child_size) return eval;
  if (events_left < 1 || events_right < 1) return eval;
  if (arms_left[0] == 0 || arms_left[1] == 0 || arms_right[0] == 0 || arms_right[1] == 0)
    return eval;

  Eigen::VectorXd times(m);
  std::vector<std::uint8_t> events(static_cast<std::size_t>(m));
  Eigen::MatrixXd design(m, 3);
  for (Eigen::Index k = 0; k < m; ++k) {
    const int row = node_rows[static_cast<std::size_t>(k)];
    times[k] = data.time(row);
    events[static_cast<std::size_t>(k)] = data.event(row) ? 1 : 0;
    design(k, 0) = v[k];
    design(k, 1) = static_cast<double>(data.treatment(row));
    design(k, 2) = v[k] * static_cast<double>(data.treatment(row));
  }

  CoxOptions options;
  options.max_iterations = 15;
  options.score_tol = 1e-6;
  options.step_tol = 1e-6;
  CoxFit fit;
  try {
    fit = cox_fit(times, events, design, options);
  } catch (const std::invalid_argument&) {
    return eval;  // non-identifiable node model
  }
  if (!fit.converged) return eval;
  const double z = fit.z_scores[2];
  if (!std::isfinite(z) || !std::isfinite(fit.concordance)) return eval;

  eval.feasible = true;
  eval.cindex = fit.concordance;
  eval.interaction_z = std::abs(z);
  eval.score = split_score(eval.cindex, eval.interaction_z, params);
  return eval;
}

std::optional<ScoredSplit> best_split(const std::vector<int>& node_rows,
                                      const SurvivalDataset& data, const ForestConfig& config,
                                      Rng& rng) {
  if (node_rows.size() < 2 * static_cast<std::size_t>(config.nodesize)) return std::nullopt;
  const std::vector<int> vars = sample_variables(data, config, rng);

  std::optional<ScoredSplit> best;
  const auto consider = [&](const Split& candidate) {
    const SplitEvaluation eval =
        evaluate_split(node_rows, candidate, data, config.split_params, config.nodesize);
    if (!eval.feasible) return;
    if (!best || eval.score > best->evaluation.score) best = ScoredSplit{candidate, eval};
  };

  for (int var : vars) {
    if (data.schema()[static_cast<std::size_t>(var)].kind == CovariateKind::Categorical) {
      const std::vector<int> levels = observed_levels(node_rows, var, data);
      if (levels.size() < 2) continue;
      const unsigned n_masks = 1u << (levels.size() - 1);
      for (unsigned mask = 1; mask < n_masks; ++mask) {
        Split candidate;
        candidate.variable = var;
        candidate.categorical = true;
        for (std::size_t b = 0; b < levels.size(); ++b)
          if (mask & (1u << b)) candidate.left_levels.push_back(levels[b]);
        consider(candidate);
      }
    } else {
      for (double threshold : numeric_thresholds(node_rows, var, data, config.nsplit, rng)) {
        Split candidate;
        candidate.variable = var;
        candidate.threshold = threshold;
        consider(candidate);
      }
    }
  }
  return best;
}

namespace {

struct TreeBuilder {
  const SurvivalDataset& data;
  const ForestConfig& config;
  Rng& rng;
  Tree tree;

  int build(std::vector<int>&& rows, int depth) {
    const int idx = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    std::optional<ScoredSplit> chosen;
    if (depth < config.nodedepth &&
        rows.size() >= 2 * static_cast<std::size_t>(config.nodesize))
      chosen = best_split(rows, data, config, rng);
    if (!chosen) {
      tree.nodes[static_cast<std::size_t>(idx)].terminal_id = tree.n_terminals++;
      return idx;
    }
    std::vector<int> left_rows, right_rows;
    left_rows.reserve(rows.size());
    right_rows.reserve(rows.size());
    for (int row : rows) {
      const double value = data.covariate(row, chosen->split.variable);
      (chosen->split.send_left(value) ? left_rows : right_rows).push_back(row);
    }
    rows.clear();
    tree.nodes[static_cast<std::size_t>(idx)].is_terminal = false;
    tree.nodes[static_cast<std::size_t>(idx)].split = chosen->split;
    const int left = build(std::move(left_rows), depth + 1);
    tree.nodes[static_cast<std::size_t>(idx)].left = left;
    const int right = build(std::move(right_rows), depth + 1);
    tree.nodes[static_cast<std::size_t>(idx)].right = right;
    return idx;
  }
};

}  // namespace

GrownTree grow_tree(const SurvivalDataset& data, const ForestConfig& config, int tree_index) {
  check_config(data, config);
  Rng rng(config.seed, stream::kTree, static_cast<std::uint64_t>(tree_index));
  const auto n = data.n();
  GrownTree grown;
  grown.inbag = Eigen::VectorXi::Zero(n);
  std::vector<int> rows(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < n; ++k) {
    const int row = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n)));
    rows[static_cast<std::size_t>(k)] = row;
    grown.inbag[row] += 1;
  }
  std::sort(rows.begin(), rows.end());
  TreeBuilder builder{data, config, rng, Tree{}};
  builder.build(std::move(rows), 0);
  grown.tree = std::move(builder.tree);
  return grown;
}

TrainedForest train_forest(const SurvivalDataset& data, const ForestConfig& config,
                           int workers) {
  check_config(data, config);
  const auto n = data.n();
  TrainedForest result;
  result.trees.resize(static_cast<std::size_t>(config.ntree));
  result.membership.terminal_ids.resize(n, config.ntree);
  result.membership.inbag_counts.resize(n, config.ntree);
  parallel_for(config.ntree, resolve_workers(workers), [&](int t) {
    GrownTree grown = grow_tree(data, config, t);
    for (Eigen::Index i = 0; i < n; ++i)
      result.membership.terminal_ids(i, t) = grown.tree.route(data, i);
    result.membership.inbag_counts.col(t) = grown.inbag;
    result.trees[static_cast<std::size_t>(t)] = std::move(grown.tree);
  });
  return result;
}

void accumulate_cooccurrence(const MembershipMatrix& membership,
                             Eigen::Ref<Eigen::MatrixXi> counts) {
  const Eigen::Index n = membership.terminal_ids.rows();
  if (counts.rows() != n || counts.cols() != n)
    throw std::invalid_argument("co-occurrence accumulator has wrong shape");
  std::vector<std::vector<int>> buckets;
  for (Eigen::Index t = 0; t < membership.terminal_ids.cols(); ++t) {
    const int max_id = membership.terminal_ids.col(t).maxCoeff();
    buckets.assign(static_cast<std::size_t>(max_id) + 1, {});
    for (Eigen::Index i = 0; i < n; ++i)
      buckets[static_cast<std::size_t>(membership.terminal_ids(i, t))].push_back(
          static_cast<int>(i));
    for (const auto& bucket : buckets) {
      for (std::size_t a = 0; a < bucket.size(); ++a) {
        counts(bucket[a], bucket[a]) += 1;
        for (std::size_t b = a + 1; b < bucket.size(); ++b) {
          counts(bucket[a], bucket[b]) += 1;
          counts(bucket[b], bucket[a]) += 1;
        }
      }
    }
  }
}

ProximityMatrix proximity_from_membership(const MembershipMatrix& membership) {
  const Eigen::Index n = membership.terminal_ids.rows();
  const auto ntree = static_cast<int>(membership.terminal_ids.cols());
  if (ntree < 1) throw std::invalid_argument("membership has no trees");
  Eigen::MatrixXi counts = Eigen::MatrixXi::Zero(n, n);
  accumulate_cooccurrence(membership, counts);
  ProximityMatrix proximity;
  proximity.values = counts.cast<double>() / static_cast<double>(ntree);
  proximity.tree_count = ntree;
  return proximity;
}

}  // namespace drsf
