#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "drsf/dataset.hpp"
#include "drsf/rng.hpp"

namespace drsf {

struct SplitRuleParams {
  double omega1 = 0.5;  // weight on the C-index term of G(s)
  double omega2 = 3.5;  // denominator of the interaction term of G(s)
};

struct ForestConfig {
  int ntree = 500;
  int mtry = 1;
  int nodesize = 50;   // minimum in-bag rows per node
  int nodedepth = 2;   // maximum number of internal nodes on any path
  int nsplit = 0;      // 0 = exhaustive midpoint search
  SplitRuleParams split_params;
  std::vector<double> xvar_weights;  // optional variable sampling weights
  std::uint64_t seed = 0;
};

// One split decision: numeric sends x <= threshold left, categorical sends
// levels in left_levels left (unlisted levels go right).
struct Split {
  int variable = -1;
  bool categorical = false;
  double threshold = 0.0;
  std::vector<int> left_levels;

  bool send_left(double value) const;
};

struct TreeNode {
  bool is_terminal = true;
  int terminal_id = -1;
  Split split;
  int left = -1;
  int right = -1;
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  int n_terminals = 0;

  int route(const SurvivalDataset& data, Eigen::Index row) const;
};

struct MembershipMatrix {
  Eigen::MatrixXi terminal_ids;  // n x ntree
  Eigen::MatrixXi inbag_counts;  // n x ntree bootstrap multiplicities
};

struct ProximityMatrix {
  Eigen::MatrixXd values;  // n x n, symmetric, unit diagonal
  int tree_count = 0;
};

struct SplitEvaluation {
  bool feasible = false;
  double cindex = 0.5;         // a1
  double interaction_z = 0.0;  // a2, |z| of the V*W coefficient
  double score = 0.0;          // G(s)
};

struct ScoredSplit {
  Split split;
  SplitEvaluation evaluation;
};

double split_score(double a1, double a2, const SplitRuleParams& params);

// Scores one candidate split of `node_rows` (dataset row indices, bootstrap
// duplicates included) by the interaction splitting rule.
SplitEvaluation evaluate_split(const std::vector<int>& node_rows, const Split& split,
                               const SurvivalDataset& data, const SplitRuleParams& params,
                               int min_child_size = 1);

std::optional<ScoredSplit> best_split(const std::vector<int>& node_rows,
                                      const SurvivalDataset& data, const ForestConfig& config,
                                      Rng& rng);

struct GrownTree {
  Tree tree;
  Eigen::VectorXi inbag;  // bootstrap multiplicity per dataset row
};

GrownTree grow_tree(const SurvivalDataset& data, const ForestConfig& config, int tree_index);

struct TrainedForest {
  std::vector<Tree> trees;
  MembershipMatrix membership;
};

TrainedForest train_forest(const SurvivalDataset& data, const ForestConfig& config,
                           int workers = 1);

// Per-pair count of trees whose terminal node both observations share,
// added onto `counts` (n x n, caller-zeroed or carrying other trees).
void accumulate_cooccurrence(const MembershipMatrix& membership,
                             Eigen::Ref<Eigen::MatrixXi> counts);

ProximityMatrix proximity_from_membership(const MembershipMatrix& membership);

}  // namespace drsf
