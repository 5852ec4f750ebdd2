#include "drsf/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

namespace drsf {

GradientGrid gradient_for_profile(const ProfileResult& profile,
                                  const SurvivalDataset& eval_data,
                                  std::pair<int, int> pair) {
  const Eigen::MatrixXd& x = eval_data.covariates();
  if (pair.first < 0 || pair.second < 0 || pair.first >= x.cols() ||
      pair.second >= x.cols() || pair.first == pair.second)
    throw std::invalid_argument("covariate pair out of range");

  const Eigen::VectorXi ids = assign_leaves(profile.tree, x);
  const std::vector<LeafEffect> effects = leaf_effects(eval_data, ids);
  // leaves the evaluation sample never reaches keep the undefined value 0
  std::vector<double> value_by_leaf(static_cast<std::size_t>(profile.tree.n_leaves), 0.0);
  for (const auto& effect : effects) {
    if (!effect.defined) continue;
    const double magnitude = 1.0 - effect.logrank_p;
    value_by_leaf[static_cast<std::size_t>(effect.leaf)] =
        effect.hazard_ratio <= 1.0 ? magnitude : -magnitude;
  }

  bool off_pair = false;
  for (const auto& node : profile.tree.nodes)
    if (!node.is_terminal && node.split.variable != pair.first &&
        node.split.variable != pair.second)
      off_pair = true;

  const auto route = [&](double first_value, double second_value, Eigen::Index base) {
    int idx = 0;
    while (!profile.tree.nodes[static_cast<std::size_t>(idx)].is_terminal) {
      const TreeNode& node = profile.tree.nodes[static_cast<std::size_t>(idx)];
      double value;
      if (node.split.variable == pair.first)
        value = first_value;
      else if (node.split.variable == pair.second)
        value = second_value;
      else
        value = x(base, node.split.variable);
      idx = node.split.send_left(value) ? node.left : node.right;
    }
    return profile.tree.nodes[static_cast<std::size_t>(idx)].terminal_id;
  };

  GradientGrid grid;
  for (int i = 0; i < GradientGrid::kSize; ++i) {
    const double a = GradientGrid::axis_value(i);
    for (int j = 0; j < GradientGrid::kSize; ++j) {
      const double b = GradientGrid::axis_value(j);
      Eigen::Index base = 0;
      if (off_pair) {
        // off-pair covariates come from the nearest patient in the plotted
        // plane; ties keep the first index
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index r = 0; r < x.rows(); ++r) {
          const double da = x(r, pair.first) - a;
          const double db = x(r, pair.second) - b;
          const double dist = da * da + db * db;
          if (dist < best) {
            best = dist;
            base = r;
          }
        }
      }
      grid.values(i, j) = value_by_leaf[static_cast<std::size_t>(route(a, b, base))];
    }
  }
  return grid;
}

GradientGrid averaged_gradient(const std::vector<GradientGrid>& grids) {
  if (grids.empty()) throw std::invalid_argument("empty grid list");
  GradientGrid out;
  out.values = Eigen::MatrixXd::Zero(grids.front().values.rows(),
                                     grids.front().values.cols());
  for (const auto& grid : grids) {
    if (grid.values.rows() != out.values.rows() ||
        grid.values.cols() != out.values.cols())
      throw std::invalid_argument("grid shape mismatch");
    out.values += grid.values;
  }
  out.values /= static_cast<double>(grids.size());
  return out;
}

std::vector<int> profile_split_variables(const ProfileResult& profile) {
  std::set<int> used;
  for (const auto& node : profile.tree.nodes)
    if (!node.is_terminal) used.insert(node.split.variable);
  return {used.begin(), used.end()};
}

RecoveryReport covariate_recovery(const std::vector<ProfileResult>& profiles,
                                  std::pair<int, int> targets) {
  if (profiles.empty()) throw std::invalid_argument("need at least one profile");

  RecoveryReport report;
  std::vector<int> counts;
  counts.reserve(profiles.size());
  for (const auto& profile : profiles) {
    const std::vector<int> used = profile_split_variables(profile);
    const bool first = std::find(used.begin(), used.end(), targets.first) != used.end();
    const bool second = std::find(used.begin(), used.end(), targets.second) != used.end();
    report.rate_first += first ? 1.0 : 0.0;
    report.rate_second += second ? 1.0 : 0.0;
    report.rate_both += first && second ? 1.0 : 0.0;
    counts.push_back(static_cast<int>(used.size()));
  }
  const double m = static_cast<double>(profiles.size());
  report.rate_first /= m;
  report.rate_second /= m;
  report.rate_both /= m;

  const int max_count = *std::max_element(counts.begin(), counts.end());
  report.count_distribution.assign(static_cast<std::size_t>(max_count) + 1, 0.0);
  for (const int c : counts)
    report.count_distribution[static_cast<std::size_t>(c)] += 1.0 / m;
  return report;
}

Eigen::MatrixXd encode_covariates(const SurvivalDataset& data) {
  Eigen::Index cols = 0;
  for (const auto& info : data.schema())
    cols += info.kind == CovariateKind::Categorical ? info.level_count : 1;
  Eigen::MatrixXd out(data.n(), cols);
  Eigen::Index at = 0;
  for (Eigen::Index j = 0; j < data.p(); ++j) {
    const auto& info = data.schema()[static_cast<std::size_t>(j)];
    if (info.kind == CovariateKind::Categorical) {
      for (int level = 0; level < info.level_count; ++level)
        out.col(at++) = (data.covariates().col(j).array() ==
                         static_cast<double>(level))
                            .cast<double>();
    } else {
      out.col(at++) = data.covariates().col(j);
    }
  }
  return out;
}

Eigen::MatrixXd standardize_columns(const Eigen::Ref<const Eigen::MatrixXd>& matrix) {
  if (matrix.rows() < 2) throw std::invalid_argument("need at least two rows");
  Eigen::MatrixXd out = matrix;
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    const double mean = out.col(j).mean();
    out.col(j).array() -= mean;
    const double sd = std::sqrt(out.col(j).squaredNorm() /
                                static_cast<double>(out.rows() - 1));
    if (sd > 1e-12)
      out.col(j) /= sd;
    else
      out.col(j).setZero();
  }
  return out;
}

ProfileResult kmeans_baseline(const SurvivalDataset& data, const BaselineConfig& config) {
  if (config.k_min < 2 || config.k_min > config.k_max)
    throw std::invalid_argument("cluster count range out of bounds");

  const Eigen::MatrixXd points = standardize_columns(encode_covariates(data));

  ClusterLabels best;
  double best_score = -std::numeric_limits<double>::infinity();
  for (int k = config.k_min; k <= config.k_max; ++k) {
    ClusterLabels labels;
    try {
      labels = kmeans(points, k, config.seed);
    } catch (const std::invalid_argument&) {
      continue;  // fewer distinct covariate rows than clusters
    }
    const double score = silhouette_score(points, labels);
    if (score > best_score) {
      best_score = score;
      best = labels;
    }
  }
  if (best.k == 0) throw std::invalid_argument("no feasible cluster count");

  ProfileResult result;
  result.tree = fit_profile_tree(data, best, config.min_leaf_size);
  result.k = best.k;
  result.num_leaves = result.tree.n_leaves;
  result.leaf_ids = assign_leaves(result.tree, data.covariates());
  result.p_leaf = heterogeneity_test(data, result.leaf_ids).p_leaf;
  result.metric = 0.0;  // no calibrated threshold on the comparator path
  result.heterogeneous = result.num_leaves > 1;
  result.leaf_effects = leaf_effects(data, result.leaf_ids);
  return result;
}

}  // namespace drsf
