#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "drsf/rng.hpp"
#include "drsf/simulate.hpp"
#include "drsf/survival.hpp"

namespace {

// One-sample Kolmogorov-Smirnov distance against Uniform(0, 1).
double ks_uniform(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const auto m = static_cast<double>(values.size());
  double d = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double hi = (i + 1) / m - values[i];
    const double lo = values[i] - i / m;
    d = std::max({d, hi, lo});
  }
  return d;
}

}  // namespace

TEST_CASE("Weibull inverse-CDF identities") {
  SUBCASE("u = e^{-1} at lp = 0 lands exactly on the scale") {
    CHECK(drsf::weibull_time_from_u(std::exp(-1.0), 0.0, 2.0, 300.0) ==
          doctest::Approx(300.0).epsilon(1e-12));
  }

  SUBCASE("lp = ln 2 shrinks the median by 2^{-1/nu}") {
    const double median_null = drsf::weibull_time_from_u(0.5, 0.0, 2.0, 300.0);
    const double median_fast = drsf::weibull_time_from_u(0.5, std::log(2.0), 2.0, 300.0);
    CHECK(median_fast / median_null ==
          doctest::Approx(std::pow(2.0, -0.5)).epsilon(1e-12));
  }

  SUBCASE("draws follow the closed-form survival curve") {
    const int m = 100000;
    drsf::Rng rng(601, drsf::stream::kPatient, 0);
    std::vector<double> draws(m);
    for (int i = 0; i < m; ++i) draws[i] = drsf::sample_survival_time(0.0, 2.0, 300.0, rng);
    std::sort(draws.begin(), draws.end());
    double worst = 0.0;
    for (double t = 30.0; t <= 900.0; t += 30.0) {
      const double empirical =
          1.0 - static_cast<double>(std::lower_bound(draws.begin(), draws.end(), t) -
                                    draws.begin()) /
                    m;
      const double closed_form = std::exp(-std::pow(t / 300.0, 2.0));
      worst = std::max(worst, std::abs(empirical - closed_form));
    }
    CHECK(worst < 0.01);
  }

  SUBCASE("domain errors") {
    CHECK_THROWS_WITH(drsf::weibull_time_from_u(0.0, 0.0, 2.0, 300.0), "u must be in (0, 1)");
    CHECK_THROWS_WITH(drsf::weibull_time_from_u(0.5, 0.0, -1.0, 300.0),
                      "shape and scale must be positive");
  }
}

TEST_CASE("generated datasets satisfy the structural invariants") {
  auto spec = drsf::scenario_1();
  spec.n = 2001;  // odd, to exercise the 1:1 rule
  const auto gen = drsf::generate_dataset(spec, 602);

  SUBCASE("event iff the latent time beat the censor time") {
    for (int i = 0; i < spec.n; ++i) {
      CHECK(gen.data.time(i) == std::min(gen.true_times[i], gen.censor_times[i]));
      CHECK(gen.data.event(i) == (gen.true_times[i] <= gen.censor_times[i]));
      CHECK(gen.data.time(i) > 0.0);
    }
  }

  SUBCASE("arm sizes differ by at most one") {
    int treated = 0;
    for (int i = 0; i < spec.n; ++i) treated += gen.data.treatment(i);
    CHECK(std::abs(2 * treated - spec.n) <= 1);
  }

  SUBCASE("region labels match the kappa conjunction") {
    for (int i = 0; i < spec.n; ++i) {
      const bool inside =
          gen.data.covariate(i, 5) > 0.0 && gen.data.covariate(i, 6) > 0.0;
      CHECK(gen.region[i] == (inside ? drsf::kRegionPositive : drsf::kRegionNeutral));
    }
  }
}

TEST_CASE("generated covariates match the schema moments") {
  auto spec = drsf::null_scenario();
  spec.n = 10000;
  const auto gen = drsf::generate_dataset(spec, 603);
  const auto& x = gen.data.covariates();
  for (int j = 0; j < 5; ++j) {
    CHECK(std::abs(x.col(j).mean() - 0.5) < 0.02);
    // binary coding: x(x - 1) = 0
    CHECK((x.col(j).array() * (x.col(j).array() - 1.0) == 0.0).all());
  }
  for (int j = 5; j < 10; ++j) {
    CHECK(std::abs(x.col(j).mean()) < 0.02);
    const double var = (x.col(j).array() - x.col(j).mean()).square().mean();
    CHECK(var == doctest::Approx(1.0).epsilon(0.05));
  }
}

TEST_CASE("null scenario arms are exchangeable") {
  std::vector<double> pvalues;
  auto spec = drsf::null_scenario();
  spec.n = 150;
  for (int rep = 0; rep < 300; ++rep) {
    const auto gen = drsf::generate_dataset(spec, 10000 + static_cast<std::uint64_t>(rep));
    std::vector<int> treated, control;
    for (int i = 0; i < spec.n; ++i)
      (gen.data.treatment(i) ? treated : control).push_back(i);
    pvalues.push_back(
        drsf::logrank_test(gen.data.subset(treated), gen.data.subset(control)).p_value);
  }
  CHECK(ks_uniform(pvalues) < 0.1);
}

TEST_CASE("scenario-1 true-region hazard ratio approaches exp(gamma_11)") {
  auto spec = drsf::scenario_1();
  spec.n = 12000;
  const auto gen = drsf::generate_dataset(spec, 604);
  std::vector<int> rows;
  for (int i = 0; i < spec.n; ++i)
    if (gen.region[i] == drsf::kRegionPositive) rows.push_back(i);
  REQUIRE(rows.size() > 2500);

  // adjust for the in-region main effects: the conditional model is
  // correctly specified, so the W coefficient estimates gamma_w + gamma_11;
  // the unadjusted marginal HR attenuates toward 1 (non-collapsibility)
  const auto sub = gen.data.subset(rows);
  Eigen::MatrixXd design(sub.n(), 3);
  for (Eigen::Index i = 0; i < sub.n(); ++i) {
    design(i, 0) = sub.treatment(i);
    design(i, 1) = sub.covariate(i, 5);
    design(i, 2) = sub.covariate(i, 6);
  }
  const auto fit = drsf::cox_fit(sub.times(), sub.events(), design);
  REQUIRE(fit.converged);
  CHECK(std::abs(std::exp(fit.coefficients[0]) - std::exp(-0.57)) < 0.05);
  CHECK(fit.coefficients[1] == doctest::Approx(-0.61).epsilon(0.15));
  CHECK(fit.coefficients[2] == doctest::Approx(-0.61).epsilon(0.15));
}

TEST_CASE("longer follow-up only adds information") {
  auto short_spec = drsf::scenario_1();
  short_spec.n = 2000;
  auto long_spec = drsf::scenario_4();
  long_spec.n = 2000;
  const auto short_run = drsf::generate_dataset(short_spec, 605);
  const auto long_run = drsf::generate_dataset(long_spec, 605);

  int short_events = 0, long_events = 0;
  for (int i = 0; i < 2000; ++i) {
    CHECK(long_run.data.time(i) >= short_run.data.time(i));
    if (short_run.data.event(i)) CHECK(long_run.data.event(i));
    short_events += short_run.data.event(i);
    long_events += long_run.data.event(i);
  }
  CHECK(long_events > short_events);

  // same seed, same draws: latent event times agree exactly
  CHECK((short_run.true_times.array() == long_run.true_times.array()).all());
}

TEST_CASE("true_region labels the scenario conjunctions") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(4, 10);
  x(0, 5) = 1.0;
  x(0, 6) = 1.0;  // upper right
  x(1, 5) = -0.5;
  x(1, 6) = -0.5;  // lower left, inside the scenario-2 border
  x(2, 5) = 1.0;
  x(2, 6) = -1.5;  // mixed
  x(3, 5) = -2.0;
  x(3, 6) = -2.0;  // deep lower left

  SUBCASE("scenario 1") {
    const auto labels = drsf::true_region(drsf::scenario_1(), x);
    CHECK(labels[0] == drsf::kRegionPositive);
    CHECK(labels[1] == drsf::kRegionNeutral);
    CHECK(labels[2] == drsf::kRegionNeutral);
  }

  SUBCASE("scenario 2 widens the border to -1") {
    const auto labels = drsf::true_region(drsf::scenario_2(), x);
    CHECK(labels[0] == drsf::kRegionPositive);
    CHECK(labels[1] == drsf::kRegionPositive);
    CHECK(labels[3] == drsf::kRegionNeutral);
  }

  SUBCASE("scenario 3 adds the negative region") {
    const auto labels = drsf::true_region(drsf::scenario_3(), x);
    CHECK(labels[0] == drsf::kRegionPositive);
    CHECK(labels[1] == drsf::kRegionNegative);
    CHECK(labels[2] == drsf::kRegionNeutral);
    CHECK(labels[3] == drsf::kRegionNegative);
  }

  SUBCASE("null scenario is all neutral") {
    const auto labels = drsf::true_region(drsf::null_scenario(), x);
    CHECK((labels.array() == drsf::kRegionNeutral).all());
  }
}

TEST_CASE("scenario-3 regions pull the arms in opposite directions") {
  auto spec = drsf::scenario_3();
  spec.n = 8000;
  const auto gen = drsf::generate_dataset(spec, 606);
  const auto hr_in = [&](int region) {
    std::vector<int> rows;
    for (int i = 0; i < spec.n; ++i)
      if (gen.region[i] == region) rows.push_back(i);
    const auto sub = gen.data.subset(rows);
    Eigen::MatrixXd design(sub.n(), 1);
    for (Eigen::Index i = 0; i < sub.n(); ++i) design(i, 0) = sub.treatment(i);
    return std::exp(drsf::cox_fit(sub.times(), sub.events(), design).coefficients[0]);
  };
  CHECK(hr_in(drsf::kRegionPositive) < 0.75);
  CHECK(hr_in(drsf::kRegionNegative) > 1.3);
  CHECK(hr_in(drsf::kRegionNeutral) == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("random censoring preempts about a tenth of events") {
  auto spec = drsf::null_scenario();
  spec.n = 20000;
  const auto with_censor = drsf::generate_dataset(spec, 607);
  spec.random_censor_rate = 0.0;
  const auto without = drsf::generate_dataset(spec, 607);
  int would_be = 0, preempted = 0;
  for (int i = 0; i < spec.n; ++i)
    if (without.data.event(i)) {
      ++would_be;
      if (!with_censor.data.event(i)) ++preempted;
    }
  const double share = static_cast<double>(preempted) / would_be;
  CHECK(share > 0.05);
  CHECK(share < 0.15);
}

TEST_CASE("scenario lookup by name") {
  CHECK(drsf::scenario_by_name("scenario4").followup == 1800.0);
  CHECK(drsf::scenario_by_name("global").gamma_w == -0.7);
  CHECK(drsf::scenario_by_name("null").kappa.empty());
  CHECK_THROWS_WITH(drsf::scenario_by_name("scenario9"), "unknown scenario: scenario9");
}

TEST_CASE("generation is deterministic and patient-keyed") {
  auto spec = drsf::scenario_2();
  spec.n = 400;
  const auto a = drsf::generate_dataset(spec, 608);
  const auto b = drsf::generate_dataset(spec, 608);
  CHECK(a.data == b.data);
  CHECK((a.true_times.array() == b.true_times.array()).all());

  // a different seed changes the draw
  const auto c = drsf::generate_dataset(spec, 609);
  CHECK_FALSE((a.data.times().array() == c.data.times().array()).all());

  // patient streams are index-keyed: growing n leaves earlier patients'
  // covariate draws untouched (arm assignment reshuffles, so times may move)
  auto bigger = spec;
  bigger.n = 500;
  const auto d = drsf::generate_dataset(bigger, 608);
  CHECK((d.data.covariates().topRows(400).array() == a.data.covariates().array()).all());
}