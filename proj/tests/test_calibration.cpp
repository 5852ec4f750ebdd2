#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "drsf/calibration.hpp"
#include "drsf/rng.hpp"
#include "drsf/survival.hpp"
#include "test_helpers.hpp"

namespace {

// Homogeneous trial: a marginal treatment effect but no covariate-treatment
// interaction, so permutation calibration sees a true null.
drsf::SurvivalDataset make_null_trial(int n, std::uint64_t seed) {
  drsf::Rng rng(seed, drsf::stream::kEvaluation, 3);
  Eigen::MatrixXd x(n, 2);
  std::vector<double> times(static_cast<std::size_t>(n));
  std::vector<int> events(static_cast<std::size_t>(n)), treatments(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    x(i, 0) = rng.normal();
    x(i, 1) = rng.normal();
    const bool treated = rng.bernoulli(0.5);
    treatments[static_cast<std::size_t>(i)] = treated ? 1 : 0;
    times[static_cast<std::size_t>(i)] = rng.exponential(treated ? 0.7 : 1.0);
    events[static_cast<std::size_t>(i)] = rng.uniform01() < 0.85 ? 1 : 0;
  }
  events[0] = 1;
  return testutil::make_data(times, events, treatments, x);
}

}  // namespace

TEST_CASE("empirical quantile is the ceil(alpha m)-th order statistic") {
  SUBCASE("m = 200, alpha = 0.01 selects the second smallest") {
    std::vector<double> values;
    for (int i = 200; i >= 1; --i) values.push_back(i / 200.0);
    CHECK(drsf::empirical_quantile(values, 0.01) == 2 / 200.0);
  }

  SUBCASE("a single value is every quantile") {
    CHECK(drsf::empirical_quantile({0.5}, 0.01) == 0.5);
    CHECK(drsf::empirical_quantile({0.5}, 0.99) == 0.5);
  }

  SUBCASE("m = 100, alpha = 0.01 selects the smallest") {
    std::vector<double> values;
    for (int i = 1; i <= 100; ++i) values.push_back(i / 100.0);
    CHECK(drsf::empirical_quantile(values, 0.01) == 1 / 100.0);
  }

  SUBCASE("round-off in alpha * m cannot bump the rank") {
    // 0.07 * 100 lands a hair above 7 in binary floating point
    std::vector<double> values;
    for (int i = 1; i <= 100; ++i) values.push_back(i / 100.0);
    CHECK(drsf::empirical_quantile(values, 0.07) == 7 / 100.0);
  }

  SUBCASE("input order is irrelevant") {
    std::vector<double> values{0.9, 0.1, 0.5, 0.3, 0.7};
    CHECK(drsf::empirical_quantile(values, 0.35) == 0.3);  // ceil(1.75) = 2
  }

  SUBCASE("non-decreasing in alpha") {
    drsf::Rng rng(501, drsf::stream::kEvaluation, 0);
    std::vector<double> values;
    for (int i = 0; i < 50; ++i) values.push_back(rng.uniform01());
    double previous = 0.0;
    for (double alpha = 0.01; alpha < 1.0; alpha += 0.02) {
      const double q = drsf::empirical_quantile(values, alpha);
      CHECK(q >= previous);
      previous = q;
    }
  }

  SUBCASE("errors") {
    CHECK_THROWS_WITH(drsf::empirical_quantile({}, 0.01), "empty value list");
    CHECK_THROWS_WITH(drsf::empirical_quantile({0.5}, 0.0), "alpha out of range");
    CHECK_THROWS_WITH(drsf::empirical_quantile({0.5}, 1.0), "alpha out of range");
  }
}

TEST_CASE("simulation calibration pools the two homogeneous scenarios") {
  SUBCASE("50 + 50 values at alpha = 0.01 give the pooled minimum") {
    std::vector<double> null_p, global_p;
    for (int i = 1; i <= 50; ++i) {
      null_p.push_back(i / 50.0);
      global_p.push_back(0.005 + i / 50.0);
    }
    const auto result = drsf::calibrate_by_simulation(null_p, global_p, 0.01);
    CHECK(result.p_star == 1 / 50.0);
    CHECK(result.sample_count == 100);
    CHECK(result.alpha == 0.01);
    CHECK(result.source == drsf::CalibrationSource::SimulationPooled);
    CHECK(result.p_leaf_values.size() == 100);
  }

  SUBCASE("pooling two copies of one distribution keeps its percentile") {
    std::vector<double> values;
    for (int i = 1; i <= 100; ++i) values.push_back(i / 100.0);
    const auto result = drsf::calibrate_by_simulation(values, values, 0.01);
    CHECK(result.p_star == drsf::empirical_quantile(values, 0.01));
  }

  SUBCASE("p_star is a value from the pooled list") {
    std::vector<double> null_p{0.4, 0.02, 0.77};
    std::vector<double> global_p{0.3, 0.009};
    const auto result = drsf::calibrate_by_simulation(null_p, global_p, 0.25);
    CHECK(std::count(result.p_leaf_values.begin(), result.p_leaf_values.end(),
                     result.p_star) > 0);
  }

  SUBCASE("empty scenario list is an error") {
    CHECK_THROWS_WITH(drsf::calibrate_by_simulation({}, {0.5}), "empty value list");
    CHECK_THROWS_WITH(drsf::calibrate_by_simulation({0.5}, {}), "empty value list");
  }
}

TEST_CASE("covariate permutation preserves margins and destroys associations") {
  const auto data = make_null_trial(120, 502);

  SUBCASE("identity permutation leaves the dataset unchanged") {
    std::vector<int> identity(120);
    std::iota(identity.begin(), identity.end(), 0);
    CHECK(drsf::apply_permutation(data, identity) == data);
  }

  SUBCASE("survival triplets and covariate row multiset are intact") {
    drsf::Rng rng(503, drsf::stream::kPermutation, 0);
    const auto permuted = drsf::permute_for_null(data, rng);
    CHECK((permuted.times().array() == data.times().array()).all());
    CHECK(permuted.events() == data.events());
    CHECK(permuted.treatments() == data.treatments());

    const auto row_key = [](const Eigen::MatrixXd& m, Eigen::Index i) {
      return std::make_pair(m(i, 0), m(i, 1));
    };
    std::vector<std::pair<double, double>> before, after;
    for (Eigen::Index i = 0; i < 120; ++i) {
      before.push_back(row_key(data.covariates(), i));
      after.push_back(row_key(permuted.covariates(), i));
    }
    std::sort(before.begin(), before.end());
    std::sort(after.begin(), after.end());
    CHECK(before == after);
    // and rows really moved
    CHECK_FALSE((permuted.covariates().array() == data.covariates().array()).all());
  }

  SUBCASE("per-arm KM curves are untouched") {
    drsf::Rng rng(504, drsf::stream::kPermutation, 0);
    const auto permuted = drsf::permute_for_null(data, rng);
    std::vector<int> treated, control;
    for (Eigen::Index i = 0; i < data.n(); ++i)
      (data.treatment(i) ? treated : control).push_back(static_cast<int>(i));
    for (const auto& arm : {treated, control}) {
      const auto before = drsf::km_estimate(data.subset(arm));
      const auto after = drsf::km_estimate(permuted.subset(arm));
      REQUIRE(before.times.size() == after.times.size());
      CHECK((before.survival.array() == after.survival.array()).all());
    }
  }

  SUBCASE("treatment mode permutes the arm labels instead") {
    drsf::Rng rng(505, drsf::stream::kPermutation, 0);
    const auto permuted =
        drsf::permute_for_null(data, rng, drsf::PermutationTarget::Treatment);
    CHECK((permuted.covariates().array() == data.covariates().array()).all());
    CHECK(permuted.treatments() != data.treatments());
    auto sorted_before = data.treatments();
    auto sorted_after = permuted.treatments();
    std::sort(sorted_before.begin(), sorted_before.end());
    std::sort(sorted_after.begin(), sorted_after.end());
    CHECK(sorted_before == sorted_after);
  }

  SUBCASE("covariate-outcome z-scores center near zero under permutation") {
    // build a trial with a strong covariate effect
    const int n = 120;
    drsf::Rng rng(506, drsf::stream::kEvaluation, 0);
    Eigen::MatrixXd x(n, 1);
    std::vector<double> times(n);
    std::vector<int> events(n, 1), treatments(n);
    for (int i = 0; i < n; ++i) {
      x(i, 0) = rng.normal();
      treatments[static_cast<std::size_t>(i)] = i % 2;
      times[static_cast<std::size_t>(i)] = rng.exponential(std::exp(0.8 * x(i, 0)));
    }
    const auto strong = testutil::make_data(times, events, treatments, x);

    const auto z_of = [](const drsf::SurvivalDataset& d) {
      const auto fit = drsf::cox_fit(d.times(), d.events(), d.covariates());
      return fit.z_scores[0];
    };
    CHECK(std::abs(z_of(strong)) > 3.0);

    double sum_z = 0.0, sum_z2 = 0.0;
    const int reps = 200;
    for (int r = 0; r < reps; ++r) {
      drsf::Rng perm_rng(507, drsf::stream::kPermutation, static_cast<std::uint64_t>(r));
      const double z = z_of(drsf::permute_for_null(strong, perm_rng));
      sum_z += z;
      sum_z2 += z * z;
    }
    const double mean = sum_z / reps;
    const double sd = std::sqrt(sum_z2 / reps - mean * mean);
    CHECK(std::abs(mean) < 0.25);
    CHECK(sd > 0.7);
    CHECK(sd < 1.3);
  }
}

TEST_CASE("permutation calibration pins the decision statistic's null quantile") {
  const auto data = make_null_trial(90, 508);
  drsf::PermutationCalibrationConfig config;
  config.grid.mtry = {1};
  config.grid.nodedepth = {2};
  config.grid.nsplit = {3};
  config.grid.nodesize = {15};
  config.grid.weight = {0.5};
  config.grid.ntree_per_config = 25;
  config.grid.base_seed = 5;
  config.search.k_min = 2;
  config.search.k_max = 3;
  config.search.min_leaf_size = 20;
  config.search.seed = 9;
  config.n_perm = 20;
  config.alpha = 0.05;
  config.seed = 510;

  const auto result = drsf::calibrate_by_permutation(data, config);
  CHECK(result.sample_count == 20);
  CHECK(result.p_leaf_values.size() == 20);
  CHECK(result.source == drsf::CalibrationSource::Permutation);

  // alpha = 0.05 over 20 permutations: ceil(1) = 1st order statistic
  CHECK(result.p_star == *std::min_element(result.p_leaf_values.begin(),
                                           result.p_leaf_values.end()));

  SUBCASE("deterministic given the seed") {
    const auto again = drsf::calibrate_by_permutation(data, config);
    CHECK(again.p_star == result.p_star);
    CHECK(again.p_leaf_values == result.p_leaf_values);
  }

  SUBCASE("the unpermuted null statistic sits above the calibrated threshold") {
    const auto fused = drsf::dense_train(data, config.grid);
    const double original = drsf::min_p_leaf(data, fused, config.search);
    CHECK(original > result.p_star);
  }

  SUBCASE("too few permutations is an error") {
    config.n_perm = 10;
    CHECK_THROWS_WITH(drsf::calibrate_by_permutation(data, config),
                      "need at least 20 permutations");
  }
}

TEST_CASE("Kolmogorov-Smirnov distance between ECDF samples") {
  SUBCASE("identical samples are at distance zero") {
    CHECK(drsf::ks_distance({1, 2, 3, 4}, {1, 2, 3, 4}) == 0.0);
    CHECK(drsf::ks_distance({0.5}, {0.5}) == 0.0);
  }

  SUBCASE("disjoint supports are at distance one") {
    CHECK(drsf::ks_distance({1, 2}, {5, 6}) == 1.0);
  }

  SUBCASE("hand-computed interleaved example") {
    // ECDF gap peaks at 0.5 right after each a-step
    CHECK(drsf::ks_distance({0.1, 0.2}, {0.15, 0.25}) == 0.5);
  }

  SUBCASE("ties move both ECDFs together") {
    CHECK(drsf::ks_distance({1, 1, 2}, {1, 2, 2}) == doctest::Approx(1.0 / 3).epsilon(1e-12));
  }

  SUBCASE("close distributions score low, shifted ones high") {
    drsf::Rng rng(511, drsf::stream::kEvaluation, 0);
    std::vector<double> a, b, shifted;
    for (int i = 0; i < 400; ++i) {
      a.push_back(rng.normal());
      b.push_back(rng.normal());
      shifted.push_back(rng.normal() + 3.0);
    }
    CHECK(drsf::ks_distance(a, b) < 0.15);
    CHECK(drsf::ks_distance(a, shifted) > 0.8);
  }
}
