#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "drsf/dataset.hpp"
#include "drsf/forest.hpp"

namespace drsf {

// Hyperparameter grid: one forest per Cartesian-product cell.
struct ParamGrid {
  std::vector<int> mtry;
  std::vector<int> nodedepth;
  std::vector<int> nsplit;
  std::vector<int> nodesize;
  std::vector<double> weight;  // omega1 values
  int ntree_per_config = 500;
  double den = 3.5;  // omega2, shared across the grid
  std::uint64_t base_seed = 0;
};

struct FusedProximity {
  Eigen::MatrixXd values;
  long long total_trees = 0;
  int config_count = 0;
};

// Cartesian product in field order (mtry, nodedepth, nsplit, nodesize,
// weight), innermost last; configuration i is seeded base_seed + i.
std::vector<ForestConfig> expand_grid(const ParamGrid& grid);

// Tree-count-weighted mean of per-configuration proximities: Eq. (1) taken
// over the pooled multiset of all trees.
FusedProximity fuse_proximity(const std::vector<ProximityMatrix>& parts);

FusedProximity dense_train(const SurvivalDataset& data, const ParamGrid& grid,
                           int workers = 1);

}  // namespace drsf
