#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <vector>

#include "drsf/clustering.hpp"
#include "drsf/dataset.hpp"
#include "drsf/dense.hpp"
#include "drsf/forest.hpp"

namespace drsf {

// Interpretable decision tree fit to cluster labels (CART, Gini impurity).
struct ProfileTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  int n_leaves = 0;
  int min_leaf_size = 120;
};

struct LeafEffect {
  int leaf = 0;
  int n_treatment = 0;
  int n_control = 0;
  int events_treatment = 0;
  int events_control = 0;
  double hazard_ratio = std::numeric_limits<double>::quiet_NaN();
  double logrank_p = std::numeric_limits<double>::quiet_NaN();
  bool defined = false;  // false when a leaf lacks an arm or the fit degenerates
};

enum class DfConvention {
  LeavesMinusOne,     // df = L - 1, Eq. (6) read literally
  TwoLeavesMinusTwo,  // df = 2(L - 1), nested-model parameter count
};

struct HeterogeneityResult {
  double p_leaf = 1.0;
  bool identifiable = true;
  double loglik_null = 0.0;
  double loglik_full = 0.0;
  int df = 0;
};

struct ProfileResult {
  ProfileTree tree;
  int k = 1;           // cluster count behind the selected profile
  int num_leaves = 1;  // L
  double p_leaf = 1.0;
  double metric = 0.0;
  std::vector<LeafEffect> leaf_effects;
  bool heterogeneous = false;
  Eigen::VectorXi leaf_ids;  // per-row leaf assignment of the selected profile
};

struct ProfileSearchConfig {
  int k_min = 2;
  int k_max = 7;
  double p_star = 0.01;
  int min_leaf_size = 120;
  std::uint64_t seed = 0;
  DfConvention df_convention = DfConvention::LeavesMinusOne;
};

ProfileTree fit_profile_tree(const SurvivalDataset& data, const ClusterLabels& labels,
                             int min_leaf_size);

Eigen::VectorXi assign_leaves(const ProfileTree& tree,
                              const Eigen::Ref<const Eigen::MatrixXd>& covariates);

HeterogeneityResult heterogeneity_test(const SurvivalDataset& data,
                                       const Eigen::Ref<const Eigen::VectorXi>& leaf_ids,
                                       DfConvention df_convention = DfConvention::LeavesMinusOne);

// Eq. (7): p_leaf when strictly below the threshold, otherwise zero.
double selection_metric(double p_leaf, double p_star);

std::vector<LeafEffect> leaf_effects(const SurvivalDataset& data,
                                     const Eigen::Ref<const Eigen::VectorXi>& leaf_ids);

// One candidate profile per k: cluster, fit tree, test leaf heterogeneity.
struct ProfileCandidate {
  int k = 0;
  ProfileTree tree;
  Eigen::VectorXi leaf_ids;
  int num_leaves = 1;
  HeterogeneityResult test;
};

std::vector<ProfileCandidate> scan_cluster_counts(const SurvivalDataset& data,
                                                  const FusedProximity& fused,
                                                  const ProfileSearchConfig& config);

// Smallest p_leaf strictly below p_star wins; ties keep the smaller k.
ProfileResult select_from_candidates(const SurvivalDataset& data,
                                     const std::vector<ProfileCandidate>& candidates,
                                     const ProfileSearchConfig& config);

ProfileResult select_best_profile(const SurvivalDataset& data, const FusedProximity& fused,
                                  const ProfileSearchConfig& config);

}  // namespace drsf
