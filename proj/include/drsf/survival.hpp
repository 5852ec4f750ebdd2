#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "drsf/dataset.hpp"

namespace drsf {

// Kaplan-Meier product-limit curve. `times` lists the distinct event times
// in ascending order; S(t) = 1 before the first entry.
struct KmCurve {
  Eigen::VectorXd times;
  Eigen::VectorXd survival;
  Eigen::VectorXi at_risk;
  Eigen::VectorXi n_events;

  double survival_at(double t) const;
};

struct LogrankResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

struct CoxOptions {
  int max_iterations = 25;
  double score_tol = 1e-7;
  double step_tol = 1e-8;
  double divergence_bound = 15.0;  // |beta_j| beyond this flags monotone likelihood
};

struct CoxFit {
  Eigen::VectorXd coefficients;
  Eigen::VectorXd standard_errors;
  Eigen::VectorXd z_scores;
  double loglik_at_estimate = 0.0;
  double loglik_at_zero = 0.0;
  double concordance = 0.5;
  bool converged = false;
  int iterations = 0;
};

KmCurve km_estimate(const SurvivalDataset& data);

LogrankResult logrank_test(const SurvivalDataset& group_a, const SurvivalDataset& group_b);

// Breslow partial log-likelihood at a fixed coefficient vector.
double cox_partial_loglik(const Eigen::Ref<const Eigen::VectorXd>& times,
                          const std::vector<std::uint8_t>& events,
                          const Eigen::Ref<const Eigen::MatrixXd>& design,
                          const Eigen::Ref<const Eigen::VectorXd>& beta);

// Newton-Raphson maximizer of the Breslow partial likelihood.
CoxFit cox_fit(const Eigen::Ref<const Eigen::VectorXd>& times,
               const std::vector<std::uint8_t>& events,
               const Eigen::Ref<const Eigen::MatrixXd>& design,
               const CoxOptions& options = CoxOptions());

// Harrell's C-index. A pair is comparable iff the strictly earlier time is an
// event, or the times tie and exactly one member is an event (the event is
// taken as earlier). Tied risk scores in a comparable pair earn 0.5.
double concordance_index(const Eigen::Ref<const Eigen::VectorXd>& risk_scores,
                         const Eigen::Ref<const Eigen::VectorXd>& times,
                         const std::vector<std::uint8_t>& events);

double likelihood_ratio_test(double loglik_null, double loglik_full, int df);

}  // namespace drsf
