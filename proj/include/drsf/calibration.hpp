#pragma once

#include <cstdint>
#include <vector>

#include "drsf/dataset.hpp"
#include "drsf/dense.hpp"
#include "drsf/profile.hpp"
#include "drsf/rng.hpp"

namespace drsf {

enum class CalibrationSource { SimulationPooled, Permutation };

struct CalibrationResult {
  double p_star = 0.0;
  int sample_count = 0;  // m
  double alpha = 0.01;
  CalibrationSource source = CalibrationSource::SimulationPooled;
  std::vector<double> p_leaf_values;  // raw pooled values, kept for the ECDF
};

// Lower empirical quantile: the ceil(alpha * m)-th order statistic.
double empirical_quantile(const std::vector<double>& values, double alpha);

CalibrationResult calibrate_by_simulation(const std::vector<double>& null_pleafs,
                                          const std::vector<double>& global_pleafs,
                                          double alpha = 0.01);

// What "randomly permuted" rearranges; covariate rows by default, which
// breaks covariate-treatment interactions while preserving the marginal
// treatment effect.
enum class PermutationTarget { Covariates, Treatment };

SurvivalDataset apply_permutation(const SurvivalDataset& data, const std::vector<int>& perm,
                                  PermutationTarget target = PermutationTarget::Covariates);

SurvivalDataset permute_for_null(const SurvivalDataset& data, Rng& rng,
                                 PermutationTarget target = PermutationTarget::Covariates);

// The decision statistic: the minimum p_leaf over the scanned k range, from
// the same scan the selection rule uses. 1 when no k is feasible.
double min_p_leaf(const SurvivalDataset& data, const FusedProximity& fused,
                  const ProfileSearchConfig& config);

struct PermutationCalibrationConfig {
  ParamGrid grid;
  ProfileSearchConfig search;
  int n_perm = 100;
  double alpha = 0.01;
  std::uint64_t seed = 0;
  PermutationTarget target = PermutationTarget::Covariates;
  int workers = 1;
};

CalibrationResult calibrate_by_permutation(const SurvivalDataset& data,
                                           const PermutationCalibrationConfig& config);

// Two-sample Kolmogorov-Smirnov distance between empirical CDFs.
double ks_distance(std::vector<double> a, std::vector<double> b);

}  // namespace drsf
