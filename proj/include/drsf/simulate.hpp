#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "drsf/dataset.hpp"
#include "drsf/rng.hpp"

namespace drsf {

enum class KappaMultiplier {
  Constant,         // pure region x treatment interaction
  SumOfCovariates,  // the literal sum-over-j form
};

// One threshold condition: x[covariate] > threshold (or < when !greater).
struct ThresholdCondition {
  int covariate = 0;
  bool greater = true;
  double threshold = 0.0;

  bool matches(double value) const { return greater ? value > threshold : value < threshold; }
};

// One interaction term of kappa(W, X). The coefficient is benefit-coded: it
// is added to the linear predictor of patients in `arm` inside the region,
// so a negative value lowers that arm's hazard there.
struct KappaTerm {
  std::vector<ThresholdCondition> region;
  int arm = 1;
  double coefficient = 0.0;
  KappaMultiplier multiplier = KappaMultiplier::Constant;
};

// Eq. (8) generative model. Time unit: days, 1 month = 30; the Weibull is
// parameterized by its scale in time units (see module ledger on lambda).
struct ScenarioSpec {
  int n = 1000;
  double shape = 2.0;   // nu
  double scale = 300.0;
  double gamma_w = 0.0;
  Eigen::VectorXd gamma;  // main effects, length n_binary + n_normal
  std::vector<KappaTerm> kappa;
  double followup = 1200.0;  // 40 months
  double accrual = 1200.0;
  double random_censor_rate = 4e-4;
  int n_binary = 5;  // X(1)..X(5) ~ Bernoulli(0.5), coded 0/1
  int n_normal = 5;  // X(6)..X(10) ~ N(0, 1)

  int p() const { return n_binary + n_normal; }
};

ScenarioSpec scenario_1();
ScenarioSpec scenario_2();
ScenarioSpec scenario_3();
ScenarioSpec scenario_4();
ScenarioSpec global_scenario();
ScenarioSpec null_scenario();

// "scenario1".."scenario4", "global", "null".
ScenarioSpec scenario_by_name(const std::string& name);

// Region labels from the kappa conjunctions.
inline constexpr int kRegionNeutral = 0;
inline constexpr int kRegionPositive = 1;  // a treated-arm term applies
inline constexpr int kRegionNegative = 2;  // a control-arm term applies

struct GeneratedDataset {
  SurvivalDataset data;
  Eigen::VectorXd true_times;    // latent U
  Eigen::VectorXd censor_times;  // latent C = min(administrative, random)
  Eigen::VectorXi region;        // kRegion* labels
};

// Inverse-CDF Weibull draw at a fixed uniform u.
double weibull_time_from_u(double u, double linear_predictor, double shape, double scale);

double sample_survival_time(double linear_predictor, double shape, double scale, Rng& rng);

double linear_predictor(const ScenarioSpec& spec, const Eigen::Ref<const Eigen::RowVectorXd>& x,
                        int w);

Eigen::VectorXi true_region(const ScenarioSpec& spec,
                            const Eigen::Ref<const Eigen::MatrixXd>& covariates);

GeneratedDataset generate_dataset(const ScenarioSpec& spec, std::uint64_t seed);

}  // namespace drsf
