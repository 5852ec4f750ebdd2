#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

#include "drsf/dataset.hpp"
#include "drsf/profile.hpp"

namespace drsf {

// Pixel map over [-1.5, 1.5]^2 at spacing 0.01: 301 x 301 values in [-1, 1].
// Rows follow the first plotted covariate, columns the second.
struct GradientGrid {
  static constexpr int kSize = 301;
  static constexpr double kMin = -1.5;
  static constexpr double kSpacing = 0.01;

  Eigen::MatrixXd values = Eigen::MatrixXd::Zero(kSize, kSize);

  static double axis_value(int index) { return kMin + kSpacing * index; }
};

// Routes every pixel through the profile tree (pixel coordinates for the
// plotted pair, nearest evaluation patient for anything else) and colors it
// by the landing leaf's effect on eval_data: 1 - p when HR <= 1, -(1 - p)
// when HR > 1, zero when the leaf effect is undefined.
GradientGrid gradient_for_profile(const ProfileResult& profile,
                                  const SurvivalDataset& eval_data,
                                  std::pair<int, int> pair = {5, 6});

GradientGrid averaged_gradient(const std::vector<GradientGrid>& grids);

// Distinct covariates used by the profile's internal splits, ascending.
std::vector<int> profile_split_variables(const ProfileResult& profile);

struct RecoveryReport {
  double rate_first = 0.0;   // share of profiles splitting on the first target
  double rate_second = 0.0;  // same for the second target
  double rate_both = 0.0;
  // index c = share of profiles using exactly c distinct covariates
  std::vector<double> count_distribution;
};

RecoveryReport covariate_recovery(const std::vector<ProfileResult>& profiles,
                                  std::pair<int, int> targets = {5, 6});

// Categorical columns expanded to one 0/1 indicator per level.
Eigen::MatrixXd encode_covariates(const SurvivalDataset& data);

// Column z-scores (sample sd); constant columns map to zero.
Eigen::MatrixXd standardize_columns(const Eigen::Ref<const Eigen::MatrixXd>& matrix);

struct BaselineConfig {
  int k_min = 2;
  int k_max = 7;
  int min_leaf_size = 120;
  std::uint64_t seed = 0;
};

// Covariate-only comparator: k-means on standardized encoded covariates with
// k picked by silhouette, then a decision tree on the original covariates.
// No outcome or treatment information enters the clustering.
ProfileResult kmeans_baseline(const SurvivalDataset& data, const BaselineConfig& config);

}  // namespace drsf
