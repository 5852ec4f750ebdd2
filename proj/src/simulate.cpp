#include "drsf/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace drsf {

namespace {

std::vector<ThresholdCondition> box(double x6_threshold, bool x6_greater, double x7_threshold,
                                    bool x7_greater) {
  // X(6) and X(7) are columns 5 and 6
  return {{5, x6_greater, x6_threshold}, {6, x7_greater, x7_threshold}};
}

ScenarioSpec base_spec() {
  ScenarioSpec spec;
  spec.gamma = Eigen::VectorXd::Zero(spec.p());
  return spec;
}

bool term_region_matches(const KappaTerm& term, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  for (const auto& condition : term.region)
    if (!condition.matches(x[condition.covariate])) return false;
  return true;
}

}  // namespace

ScenarioSpec scenario_1() {
  ScenarioSpec spec = base_spec();
  spec.gamma[5] = -0.61;
  spec.gamma[6] = -0.61;
  spec.kappa = {{box(0.0, true, 0.0, true), 1, -0.57}};
  return spec;
}

ScenarioSpec scenario_2() {
  ScenarioSpec spec = base_spec();
  spec.gamma[5] = -0.61;
  spec.gamma[6] = -0.61;
  spec.kappa = {{box(-1.0, true, -1.0, true), 1, -0.57}};
  return spec;
}

ScenarioSpec scenario_3() {
  ScenarioSpec spec = base_spec();
  spec.kappa = {{box(0.0, true, 0.0, true), 1, -0.44},
                {box(0.0, false, 0.0, false), 0, -0.44}};
  return spec;
}

ScenarioSpec scenario_4() {
  ScenarioSpec spec = scenario_1();
  spec.followup = 1800.0;  // 60 months
  spec.accrual = 1800.0;
  return spec;
}

ScenarioSpec global_scenario() {
  ScenarioSpec spec = base_spec();
  spec.gamma_w = -0.7;
  return spec;
}

ScenarioSpec null_scenario() { return base_spec(); }

ScenarioSpec scenario_by_name(const std::string& name) {
  if (name == "scenario1") return scenario_1();
  if (name == "scenario2") return scenario_2();
  if (name == "scenario3") return scenario_3();
  if (name == "scenario4") return scenario_4();
  if (name == "global") return global_scenario();
  if (name == "null") return null_scenario();
  throw std::invalid_argument("unknown scenario: " + name);
}

double weibull_time_from_u(double u, double linear_predictor, double shape, double scale) {
  if (!(shape > 0.0) || !(scale > 0.0))
    throw std::invalid_argument("shape and scale must be positive");
  if (!(u > 0.0 && u < 1.0)) throw std::invalid_argument("u must be in (0, 1)");
  return scale * std::pow(-std::log(u) / std::exp(linear_predictor), 1.0 / shape);
}

double sample_survival_time(double linear_predictor, double shape, double scale, Rng& rng) {
  return weibull_time_from_u(rng.uniform01(), linear_predictor, shape, scale);
}

double linear_predictor(const ScenarioSpec& spec, const Eigen::Ref<const Eigen::RowVectorXd>& x,
                        int w) {
  double lp = spec.gamma_w * w + x.dot(spec.gamma);
  for (const auto& term : spec.kappa) {
    if (w != term.arm || !term_region_matches(term, x)) continue;
    const double multiplier =
        term.multiplier == KappaMultiplier::Constant ? 1.0 : x.sum();
    lp += term.coefficient * multiplier;
  }
  return lp;
}

Eigen::VectorXi true_region(const ScenarioSpec& spec,
                            const Eigen::Ref<const Eigen::MatrixXd>& covariates) {
  Eigen::VectorXi labels = Eigen::VectorXi::Constant(covariates.rows(), kRegionNeutral);
  for (Eigen::Index i = 0; i < covariates.rows(); ++i)
    for (const auto& term : spec.kappa) {
      if (!term_region_matches(term, covariates.row(i))) continue;
      labels[i] = term.arm == 1 ? kRegionPositive : kRegionNegative;
      break;
    }
  return labels;
}

GeneratedDataset generate_dataset(const ScenarioSpec& spec, std::uint64_t seed) {
  if (spec.n < 2) throw std::invalid_argument("need at least two observations");
  if (spec.gamma.size() != spec.p())
    throw std::invalid_argument("gamma length does not match covariate count");
  if (!(spec.followup > 0.0) || !(spec.accrual > 0.0))
    throw std::invalid_argument("followup and accrual must be positive");
  if (spec.accrual > spec.followup)
    throw std::invalid_argument("accrual cannot exceed followup");
  if (spec.random_censor_rate < 0.0)
    throw std::invalid_argument("random censor rate must be non-negative");
  for (const auto& term : spec.kappa)
    for (const auto& condition : term.region)
      if (condition.covariate < 0 || condition.covariate >= spec.p())
        throw std::invalid_argument("region threshold references an unknown covariate");

  const int n = spec.n;
  Eigen::MatrixXd x(n, spec.p());
  Eigen::VectorXd u_surv(n), enroll_frac(n), random_censor(n);
  // one counter-based stream per patient: covariates, survival u, enrollment
  // fraction, then the random-censor draw, in that order
  for (int i = 0; i < n; ++i) {
    Rng rng(seed, stream::kPatient, static_cast<std::uint64_t>(i));
    for (int j = 0; j < spec.n_binary; ++j) x(i, j) = rng.bernoulli(0.5) ? 1.0 : 0.0;
    for (int j = 0; j < spec.n_normal; ++j) x(i, spec.n_binary + j) = rng.normal();
    u_surv[i] = rng.uniform01();
    enroll_frac[i] = rng.uniform01();
    random_censor[i] = spec.random_censor_rate > 0.0
                           ? rng.exponential(spec.random_censor_rate)
                           : std::numeric_limits<double>::infinity();
  }

  // 1:1 randomization: ceil(n/2) treated, shuffled
  std::vector<std::uint8_t> treatments(static_cast<std::size_t>(n), 0);
  std::fill(treatments.begin(), treatments.begin() + (n + 1) / 2, std::uint8_t{1});
  Rng arm_rng(seed, stream::kTreatment, 0);
  arm_rng.shuffle(treatments.begin(), treatments.end());

  Eigen::VectorXd times(n), true_times(n), censor_times(n);
  std::vector<std::uint8_t> events(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double lp = linear_predictor(spec, x.row(i), treatments[static_cast<std::size_t>(i)]);
    const double u_time = weibull_time_from_u(u_surv[i], lp, spec.shape, spec.scale);
    const double administrative = spec.followup - enroll_frac[i] * spec.accrual;
    const double c_time = std::min(administrative, random_censor[i]);
    true_times[i] = u_time;
    censor_times[i] = c_time;
    times[i] = std::min(u_time, c_time);
    events[static_cast<std::size_t>(i)] = u_time <= c_time ? 1 : 0;
  }

  std::vector<CovariateInfo> schema;
  for (int j = 0; j < spec.p(); ++j)
    schema.push_back(CovariateInfo::numeric("x" + std::to_string(j + 1)));

  GeneratedDataset out{
      SurvivalDataset(std::move(times), std::move(events), std::move(treatments), x,
                      std::move(schema)),
      std::move(true_times), std::move(censor_times), true_region(spec, x)};
  return out;
}

}  // namespace drsf
