#include "drsf/profile.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "drsf/survival.hpp"

namespace drsf {

namespace {

double gini_from_counts(const std::vector<int>& counts, int total) {
  if (total == 0) return 0.0;
  double sum_sq = 0.0;
  for (int c : counts) sum_sq += static_cast<double>(c) * c;
  return 1.0 - sum_sq / (static_cast<double>(total) * total);
}

struct GiniSplit {
  Split split;
  double weighted_impurity = std::numeric_limits<double>::infinity();
};

// Best Gini bipartition of one node, honoring the leaf-size floor.
std::optional<GiniSplit> best_gini_split(const SurvivalDataset& data,
                                         const Eigen::VectorXi& labels, int n_classes,
                                         const std::vector<int>& rows, int min_leaf_size) {
  const int n = static_cast<int>(rows.size());
  std::vector<int> parent_counts(static_cast<std::size_t>(n_classes), 0);
  for (int row : rows) parent_counts[static_cast<std::size_t>(labels[row])] += 1;
  const double parent_impurity = gini_from_counts(parent_counts, n);

  std::optional<GiniSplit> best;
  const auto consider = [&](const Split& split, const std::vector<int>& left_counts,
                            int n_left) {
    const int n_right = n - n_left;
    if (n_left < min_leaf_size || n_right < min_leaf_size) return;
    std::vector<int> right_counts(static_cast<std::size_t>(n_classes));
    for (int c = 0; c < n_classes; ++c)
      right_counts[static_cast<std::size_t>(c)] =
          parent_counts[static_cast<std::size_t>(c)] - left_counts[static_cast<std::size_t>(c)];
    const double weighted = (n_left * gini_from_counts(left_counts, n_left) +
                             n_right * gini_from_counts(right_counts, n_right)) /
                            n;
    if (weighted >= parent_impurity - 1e-12) return;  // no impurity reduction
    if (!best || weighted < best->weighted_impurity) best = GiniSplit{split, weighted};
  };

  for (int var = 0; var < data.p(); ++var) {
    if (data.schema()[static_cast<std::size_t>(var)].kind == CovariateKind::Categorical) {
      std::vector<int> levels;
      for (int row : rows)
        levels.push_back(static_cast<int>(std::llround(data.covariate(row, var))));
      std::sort(levels.begin(), levels.end());
      levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
      if (levels.size() < 2) continue;
      // class counts per level
      std::vector<std::vector<int>> level_counts(
          levels.size(), std::vector<int>(static_cast<std::size_t>(n_classes), 0));
      std::vector<int> level_sizes(levels.size(), 0);
      for (int row : rows) {
        const int level = static_cast<int>(std::llround(data.covariate(row, var)));
        const auto pos = static_cast<std::size_t>(
            std::lower_bound(levels.begin(), levels.end(), level) - levels.begin());
        level_counts[pos][static_cast<std::size_t>(labels[row])] += 1;
        level_sizes[pos] += 1;
      }
      const unsigned n_masks = 1u << (levels.size() - 1);
      for (unsigned mask = 1; mask < n_masks; ++mask) {
        Split split;
        split.variable = var;
        split.categorical = true;
        std::vector<int> left_counts(static_cast<std::size_t>(n_classes), 0);
        int n_left = 0;
        for (std::size_t b = 0; b < levels.size(); ++b) {
          if (!(mask & (1u << b))) continue;
          split.left_levels.push_back(levels[b]);
          n_left += level_sizes[b];
          for (int c = 0; c < n_classes; ++c)
            left_counts[static_cast<std::size_t>(c)] += level_counts[b][static_cast<std::size_t>(c)];
        }
        consider(split, left_counts, n_left);
      }
    } else {
      std::vector<int> order = rows;
      std::sort(order.begin(), order.end(), [&](int a, int b) {
        return data.covariate(a, var) < data.covariate(b, var);
      });
      std::vector<int> left_counts(static_cast<std::size_t>(n_classes), 0);
      int n_left = 0;
      for (int i = 0; i + 1 < n; ++i) {
        left_counts[static_cast<std::size_t>(labels[order[static_cast<std::size_t>(i)]])] += 1;
        ++n_left;
        const double here = data.covariate(order[static_cast<std::size_t>(i)], var);
        const double next = data.covariate(order[static_cast<std::size_t>(i + 1)], var);
        if (here == next) continue;
        Split split;
        split.variable = var;
        split.threshold = 0.5 * (here + next);
        consider(split, left_counts, n_left);
      }
    }
  }
  return best;
}

struct ProfileBuilder {
  const SurvivalDataset& data;
  const Eigen::VectorXi& labels;
  int n_classes;
  int min_leaf_size;
  ProfileTree tree;

  int build(std::vector<int>&& rows) {
    const int idx = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    std::optional<GiniSplit> chosen;
    if (rows.size() >= 2 * static_cast<std::size_t>(min_leaf_size))
      chosen = best_gini_split(data, labels, n_classes, rows, min_leaf_size);
    if (!chosen) {
      tree.nodes[static_cast<std::size_t>(idx)].terminal_id = tree.n_leaves++;
      return idx;
    }
    std::vector<int> left_rows, right_rows;
    for (int row : rows) {
      const double value = data.covariate(row, chosen->split.variable);
      (chosen->split.send_left(value) ? left_rows : right_rows).push_back(row);
    }
    rows.clear();
    tree.nodes[static_cast<std::size_t>(idx)].is_terminal = false;
    tree.nodes[static_cast<std::size_t>(idx)].split = chosen->split;
    const int left = build(std::move(left_rows));
    tree.nodes[static_cast<std::size_t>(idx)].left = left;
    const int right = build(std::move(right_rows));
    tree.nodes[static_cast<std::size_t>(idx)].right = right;
    return idx;
  }
};

}  // namespace

ProfileTree fit_profile_tree(const SurvivalDataset& data, const ClusterLabels& labels,
                             int min_leaf_size) {
  if (min_leaf_size < 1) throw std::invalid_argument("min_leaf_size must be positive");
  if (labels.labels.size() != data.n())
    throw std::invalid_argument("label length mismatch");
  if (data.n() < min_leaf_size)
    throw std::invalid_argument("fewer rows than min_leaf_size");
  std::vector<int> rows(static_cast<std::size_t>(data.n()));
  std::iota(rows.begin(), rows.end(), 0);
  ProfileBuilder builder{data, labels.labels, labels.k, min_leaf_size, ProfileTree{}};
  builder.tree.min_leaf_size = min_leaf_size;
  builder.build(std::move(rows));
  return builder.tree;
}

Eigen::VectorXi assign_leaves(const ProfileTree& tree,
                              const Eigen::Ref<const Eigen::MatrixXd>& covariates) {
  for (const auto& node : tree.nodes)
    if (!node.is_terminal && node.split.variable >= covariates.cols())
      throw std::invalid_argument("covariate outside schema");
  Eigen::VectorXi ids(covariates.rows());
  for (Eigen::Index i = 0; i < covariates.rows(); ++i) {
    int idx = 0;
    while (!tree.nodes[static_cast<std::size_t>(idx)].is_terminal) {
      const TreeNode& node = tree.nodes[static_cast<std::size_t>(idx)];
      idx = node.split.send_left(covariates(i, node.split.variable)) ? node.left : node.right;
    }
    ids[i] = tree.nodes[static_cast<std::size_t>(idx)].terminal_id;
  }
  return ids;
}

HeterogeneityResult heterogeneity_test(const SurvivalDataset& data,
                                       const Eigen::Ref<const Eigen::VectorXi>& leaf_ids,
                                       DfConvention df_convention) {
  if (leaf_ids.size() != data.n()) throw std::invalid_argument("leaf id length mismatch");
  std::vector<int> leaves(leaf_ids.data(), leaf_ids.data() + leaf_ids.size());
  std::sort(leaves.begin(), leaves.end());
  leaves.erase(std::unique(leaves.begin(), leaves.end()), leaves.end());
  const int n_leaves = static_cast<int>(leaves.size());

  HeterogeneityResult result;
  result.df = df_convention == DfConvention::LeavesMinusOne ? n_leaves - 1
                                                            : 2 * (n_leaves - 1);
  if (n_leaves == 1) return result;  // models (4) and (5) coincide

  // every leaf must hold both arms or the interaction block is degenerate
  std::vector<int> arm_counts(static_cast<std::size_t>(n_leaves) * 2, 0);
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const auto pos = static_cast<std::size_t>(
        std::lower_bound(leaves.begin(), leaves.end(), leaf_ids[i]) - leaves.begin());
    arm_counts[pos * 2 + static_cast<std::size_t>(data.treatment(i))] += 1;
  }
  for (int l = 0; l < n_leaves; ++l)
    if (arm_counts[static_cast<std::size_t>(l) * 2] == 0 ||
        arm_counts[static_cast<std::size_t>(l) * 2 + 1] == 0) {
      result.identifiable = false;
      return result;
    }

  const Eigen::Index n = data.n();
  Eigen::VectorXd times = data.times();
  const std::vector<std::uint8_t>& events = data.events();
  Eigen::MatrixXd design_null(n, 1);
  Eigen::MatrixXd design_full(n, 1 + 2 * (n_leaves - 1));
  design_full.setZero();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double w = static_cast<double>(data.treatment(i));
    design_null(i, 0) = w;
    design_full(i, 0) = w;
    const auto pos = static_cast<std::size_t>(
        std::lower_bound(leaves.begin(), leaves.end(), leaf_ids[i]) - leaves.begin());
    if (pos > 0) {
      design_full(i, static_cast<Eigen::Index>(pos)) = 1.0;                      // leaf dummy
      design_full(i, n_leaves - 1 + static_cast<Eigen::Index>(pos)) = w;         // leaf x W
    }
  }

  try {
    const CoxFit null_fit = cox_fit(times, events, design_null);
    const CoxFit full_fit = cox_fit(times, events, design_full);
    result.loglik_null = null_fit.loglik_at_estimate;
    result.loglik_full = full_fit.loglik_at_estimate;
    if (!null_fit.converged || !full_fit.converged) {
      result.identifiable = false;
      return result;
    }
    result.p_leaf = likelihood_ratio_test(result.loglik_null, result.loglik_full, result.df);
  } catch (const std::invalid_argument&) {
    result.identifiable = false;
    result.p_leaf = 1.0;
  }
  return result;
}

double selection_metric(double p_leaf, double p_star) {
  return p_leaf < p_star ? p_leaf : 0.0;
}

std::vector<LeafEffect> leaf_effects(const SurvivalDataset& data,
                                     const Eigen::Ref<const Eigen::VectorXi>& leaf_ids) {
  if (leaf_ids.size() != data.n()) throw std::invalid_argument("leaf id length mismatch");
  std::vector<int> leaves(leaf_ids.data(), leaf_ids.data() + leaf_ids.size());
  std::sort(leaves.begin(), leaves.end());
  leaves.erase(std::unique(leaves.begin(), leaves.end()), leaves.end());

  std::vector<LeafEffect> effects;
  for (int leaf : leaves) {
    LeafEffect effect;
    effect.leaf = leaf;
    std::vector<int> treated_rows, control_rows, rows;
    for (Eigen::Index i = 0; i < data.n(); ++i) {
      if (leaf_ids[i] != leaf) continue;
      rows.push_back(static_cast<int>(i));
      if (data.treatment(i)) {
        treated_rows.push_back(static_cast<int>(i));
        effect.events_treatment += data.event(i) ? 1 : 0;
      } else {
        control_rows.push_back(static_cast<int>(i));
        effect.events_control += data.event(i) ? 1 : 0;
      }
    }
    effect.n_treatment = static_cast<int>(treated_rows.size());
    effect.n_control = static_cast<int>(control_rows.size());

    if (!treated_rows.empty() && !control_rows.empty() &&
        effect.events_treatment + effect.events_control > 0) {
      const auto m = static_cast<Eigen::Index>(rows.size());
      Eigen::VectorXd times(m);
      std::vector<std::uint8_t> events(static_cast<std::size_t>(m));
      Eigen::MatrixXd design(m, 1);
      for (Eigen::Index k = 0; k < m; ++k) {
        const int row = rows[static_cast<std::size_t>(k)];
        times[k] = data.time(row);
        events[static_cast<std::size_t>(k)] = data.event(row) ? 1 : 0;
        design(k, 0) = static_cast<double>(data.treatment(row));
      }
      try {
        const CoxFit fit = cox_fit(times, events, design);
        if (fit.converged) {
          effect.hazard_ratio = std::exp(fit.coefficients[0]);
          const auto lr = logrank_test(data.subset(treated_rows), data.subset(control_rows));
          effect.logrank_p = lr.p_value;
          effect.defined = true;
        }
      } catch (const std::invalid_argument&) {
        // leave undefined
      }
    }
    effects.push_back(effect);
  }
  return effects;
}

std::vector<ProfileCandidate> scan_cluster_counts(const SurvivalDataset& data,
                                                  const FusedProximity& fused,
                                                  const ProfileSearchConfig& config) {
  if (config.k_min < 2 || config.k_min > config.k_max ||
      static_cast<Eigen::Index>(config.k_max) >= data.n())
    throw std::invalid_argument("cluster count range out of bounds");
  const SymmetricEig eig = symmetric_eig(normalized_laplacian(fused.values));

  std::vector<ProfileCandidate> candidates;
  for (int k = config.k_min; k <= config.k_max; ++k) {
    ProfileCandidate candidate;
    candidate.k = k;
    const Embedding embedding = embed_from_eig(eig, k);
    ClusterLabels labels;
    try {
      labels = kmeans(embedding.points, k, config.seed);
    } catch (const std::invalid_argument&) {
      continue;  // fewer distinct embedded points than clusters
    }
    candidate.tree = fit_profile_tree(data, labels, config.min_leaf_size);
    candidate.leaf_ids = assign_leaves(candidate.tree, data.covariates());
    candidate.num_leaves = candidate.tree.n_leaves;
    candidate.test = heterogeneity_test(data, candidate.leaf_ids, config.df_convention);
    candidates.push_back(std::move(candidate));
  }
  return candidates;
}

ProfileResult select_from_candidates(const SurvivalDataset& data,
                                     const std::vector<ProfileCandidate>& candidates,
                                     const ProfileSearchConfig& config) {
  const ProfileCandidate* best = nullptr;
  for (const auto& candidate : candidates) {
    if (!(candidate.test.p_leaf < config.p_star)) continue;
    if (!best || candidate.test.p_leaf < best->test.p_leaf) best = &candidate;
  }

  ProfileResult result;
  if (best) {
    result.tree = best->tree;
    result.k = best->k;
    result.num_leaves = best->num_leaves;
    result.p_leaf = best->test.p_leaf;
    result.metric = selection_metric(result.p_leaf, config.p_star);
    result.leaf_ids = best->leaf_ids;
    result.heterogeneous = true;
  } else {
    // no k clears the threshold: report homogeneity as a single-leaf profile
    result.tree.min_leaf_size = config.min_leaf_size;
    result.tree.nodes.emplace_back();
    result.tree.nodes[0].terminal_id = 0;
    result.tree.n_leaves = 1;
    result.leaf_ids = Eigen::VectorXi::Zero(data.n());
  }
  result.leaf_effects = leaf_effects(data, result.leaf_ids);
  return result;
}

ProfileResult select_best_profile(const SurvivalDataset& data, const FusedProximity& fused,
                                  const ProfileSearchConfig& config) {
  return select_from_candidates(data, scan_cluster_counts(data, fused, config), config);
}

}  // namespace drsf
