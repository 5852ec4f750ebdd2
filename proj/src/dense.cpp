#include "drsf/dense.hpp"

#include <stdexcept>

namespace drsf {

std::vector<ForestConfig> expand_grid(const ParamGrid& grid) {
  if (grid.mtry.empty() || grid.nodedepth.empty() || grid.nsplit.empty() ||
      grid.nodesize.empty() || grid.weight.empty())
    throw std::invalid_argument("empty parameter list in grid");
  if (grid.ntree_per_config < 1)
    throw std::invalid_argument("ntree_per_config must be positive");

  std::vector<ForestConfig> configs;
  configs.reserve(grid.mtry.size() * grid.nodedepth.size() * grid.nsplit.size() *
                  grid.nodesize.size() * grid.weight.size());
  std::uint64_t index = 0;
  for (int mtry : grid.mtry)
    for (int nodedepth : grid.nodedepth)
      for (int nsplit : grid.nsplit)
        for (int nodesize : grid.nodesize)
          for (double weight : grid.weight) {
            ForestConfig config;
            config.ntree = grid.ntree_per_config;
            config.mtry = mtry;
            config.nodedepth = nodedepth;
            config.nsplit = nsplit;
            config.nodesize = nodesize;
            config.split_params = SplitRuleParams{weight, grid.den};
            config.seed = grid.base_seed + index;
            configs.push_back(std::move(config));
            ++index;
          }
  return configs;
}

FusedProximity fuse_proximity(const std::vector<ProximityMatrix>& parts) {
  if (parts.empty()) throw std::invalid_argument("nothing to fuse");
  const Eigen::Index n = parts.front().values.rows();
  FusedProximity fused;
  fused.values = Eigen::MatrixXd::Zero(n, n);
  for (const auto& part : parts) {
    if (part.values.rows() != n || part.values.cols() != n)
      throw std::invalid_argument("proximity parts disagree on n");
    if (part.tree_count < 1) throw std::invalid_argument("part with no trees");
    fused.values += static_cast<double>(part.tree_count) * part.values;
    fused.total_trees += part.tree_count;
  }
  fused.values /= static_cast<double>(fused.total_trees);
  fused.config_count = static_cast<int>(parts.size());
  return fused;
}

FusedProximity dense_train(const SurvivalDataset& data, const ParamGrid& grid, int workers) {
  const std::vector<ForestConfig> configs = expand_grid(grid);
  const Eigen::Index n = data.n();
  Eigen::MatrixXi counts = Eigen::MatrixXi::Zero(n, n);
  FusedProximity fused;
  for (const auto& config : configs) {
    const TrainedForest trained = train_forest(data, config, workers);
    accumulate_cooccurrence(trained.membership, counts);
    fused.total_trees += config.ntree;
  }
  fused.values = counts.cast<double>() / static_cast<double>(fused.total_trees);
  fused.config_count = static_cast<int>(configs.size());
  return fused;
}

}  // namespace drsf
