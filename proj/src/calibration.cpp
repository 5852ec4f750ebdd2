#include "drsf/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace drsf {

double empirical_quantile(const std::vector<double>& values, double alpha) {
  if (values.empty()) throw std::invalid_argument("empty value list");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha out of range");
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  const auto m = static_cast<double>(sorted.size());
  // the 1e-9 slack keeps round-off in alpha*m (e.g. 0.07*100 = 7.0000...009)
  // from bumping the rank
  auto rank = static_cast<std::size_t>(std::ceil(alpha * m - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

CalibrationResult calibrate_by_simulation(const std::vector<double>& null_pleafs,
                                          const std::vector<double>& global_pleafs,
                                          double alpha) {
  if (null_pleafs.empty() || global_pleafs.empty())
    throw std::invalid_argument("empty value list");
  CalibrationResult result;
  result.p_leaf_values = null_pleafs;
  result.p_leaf_values.insert(result.p_leaf_values.end(), global_pleafs.begin(),
                              global_pleafs.end());
  result.p_star = empirical_quantile(result.p_leaf_values, alpha);
  result.sample_count = static_cast<int>(result.p_leaf_values.size());
  result.alpha = alpha;
  result.source = CalibrationSource::SimulationPooled;
  return result;
}

SurvivalDataset apply_permutation(const SurvivalDataset& data, const std::vector<int>& perm,
                                  PermutationTarget target) {
  if (static_cast<Eigen::Index>(perm.size()) != data.n())
    throw std::invalid_argument("permutation length mismatch");
  if (target == PermutationTarget::Covariates) {
    Eigen::MatrixXd covariates(data.n(), data.p());
    for (Eigen::Index i = 0; i < data.n(); ++i)
      covariates.row(i) = data.covariates().row(perm[static_cast<std::size_t>(i)]);
    return data.with_covariates(std::move(covariates));
  }
  std::vector<std::uint8_t> treatments(static_cast<std::size_t>(data.n()));
  for (Eigen::Index i = 0; i < data.n(); ++i)
    treatments[static_cast<std::size_t>(i)] = data.treatment(perm[static_cast<std::size_t>(i)]);
  return SurvivalDataset(data.times(), data.events(), std::move(treatments),
                         data.covariates(), data.schema());
}

SurvivalDataset permute_for_null(const SurvivalDataset& data, Rng& rng,
                                 PermutationTarget target) {
  if (data.n() < 2) throw std::invalid_argument("need at least two observations");
  std::vector<int> perm(static_cast<std::size_t>(data.n()));
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(perm.begin(), perm.end());
  return apply_permutation(data, perm, target);
}

double min_p_leaf(const SurvivalDataset& data, const FusedProximity& fused,
                  const ProfileSearchConfig& config) {
  double smallest = 1.0;
  for (const auto& candidate : scan_cluster_counts(data, fused, config))
    smallest = std::min(smallest, candidate.test.p_leaf);
  return smallest;
}

CalibrationResult calibrate_by_permutation(const SurvivalDataset& data,
                                           const PermutationCalibrationConfig& config) {
  if (config.n_perm < 20) throw std::invalid_argument("need at least 20 permutations");
  CalibrationResult result;
  result.p_leaf_values.reserve(static_cast<std::size_t>(config.n_perm));
  for (int r = 0; r < config.n_perm; ++r) {
    Rng rng(config.seed, stream::kPermutation, static_cast<std::uint64_t>(r));
    const SurvivalDataset permuted = permute_for_null(data, rng, config.target);
    const FusedProximity fused = dense_train(permuted, config.grid, config.workers);
    result.p_leaf_values.push_back(min_p_leaf(permuted, fused, config.search));
  }
  result.p_star = empirical_quantile(result.p_leaf_values, config.alpha);
  result.sample_count = config.n_perm;
  result.alpha = config.alpha;
  result.source = CalibrationSource::Permutation;
  return result;
}

double ks_distance(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("empty value list");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const auto na = static_cast<double>(a.size());
  const auto nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    // step past every copy of the smaller value in both samples, so ties
    // move the two ECDFs together
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

}  // namespace drsf
