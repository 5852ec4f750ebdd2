#include "drsf/survival.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "drsf/stats.hpp"

namespace drsf {

namespace {

// Indices sorted by descending time; tied times form contiguous runs.
std::vector<int> descending_time_order(const Eigen::Ref<const Eigen::VectorXd>& times) {
  std::vector<int> order(static_cast<std::size_t>(times.size()));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return times[a] > times[b] || (times[a] == times[b] && a < b); });
  return order;
}

// One pass over the risk sets: Breslow partial log-likelihood, optionally
// score and observed information. Linear predictors are shifted by their
// maximum before exponentiation.
double cox_pass(const Eigen::Ref<const Eigen::VectorXd>& times,
                const std::vector<std::uint8_t>& events,
                const Eigen::Ref<const Eigen::MatrixXd>& design,
                const Eigen::Ref<const Eigen::VectorXd>& beta,
                const std::vector<int>& order,
                Eigen::VectorXd* score, Eigen::MatrixXd* info) {
  const Eigen::Index n = times.size();
  const Eigen::Index q = design.cols();
  Eigen::VectorXd lp = design * beta;
  const double shift = lp.maxCoeff();
  lp.array() -= shift;

  double loglik = 0.0;
  double s0 = 0.0;
  Eigen::VectorXd s1;
  Eigen::MatrixXd s2;
  const bool derivs = score != nullptr;
  if (derivs) {
    s1 = Eigen::VectorXd::Zero(q);
    s2 = Eigen::MatrixXd::Zero(q, q);
    score->setZero(q);
    info->setZero(q, q);
  }

  Eigen::Index g = 0;
  while (g < n) {
    Eigen::Index g_end = g;
    while (g_end < n && times[order[g_end]] == times[order[g]]) ++g_end;
    // the whole tied group enters the risk set before any of its events score
    for (Eigen::Index k = g; k < g_end; ++k) {
      const int i = order[k];
      const double w = std::exp(lp[i]);
      s0 += w;
      if (derivs) {
        s1.noalias() += w * design.row(i).transpose();
        s2.noalias() += w * design.row(i).transpose() * design.row(i);
      }
    }
    for (Eigen::Index k = g; k < g_end; ++k) {
      const int i = order[k];
      if (!events[static_cast<std::size_t>(i)]) continue;
      loglik += lp[i] - std::log(s0);
      if (derivs) {
        const Eigen::VectorXd mean = s1 / s0;
        score->noalias() += design.row(i).transpose() - mean;
        info->noalias() += s2 / s0 - mean * mean.transpose();
      }
    }
    g = g_end;
  }
  return loglik;
}

void check_cox_inputs(const Eigen::Ref<const Eigen::VectorXd>& times,
                      const std::vector<std::uint8_t>& events,
                      const Eigen::Ref<const Eigen::MatrixXd>& design) {
  const Eigen::Index n = times.size();
  if (n == 0) throw std::invalid_argument("empty dataset");
  if (static_cast<Eigen::Index>(events.size()) != n || design.rows() != n)
    throw std::invalid_argument("dimension mismatch in cox model inputs");
  if (design.cols() < 1) throw std::invalid_argument("design matrix has no columns");
  if (std::find(events.begin(), events.end(), std::uint8_t{1}) == events.end())
    throw std::invalid_argument("no events");
}

struct Fenwick {
  std::vector<int> tree;
  explicit Fenwick(int n) : tree(static_cast<std::size_t>(n) + 1, 0) {}
  void add(int i) {
    for (++i; i < static_cast<int>(tree.size()); i += i & -i) ++tree[static_cast<std::size_t>(i)];
  }
  // count of inserted ranks <= i
  long long prefix(int i) const {
    long long s = 0;
    for (++i; i > 0; i -= i & -i) s += tree[static_cast<std::size_t>(i)];
    return s;
  }
};

}  // namespace

double KmCurve::survival_at(double t) const {
  // last event time <= t
  Eigen::Index lo = 0, hi = times.size();
  while (lo < hi) {
    const Eigen::Index mid = (lo + hi) / 2;
    if (times[mid] <= t) lo = mid + 1; else hi = mid;
  }
  return lo == 0 ? 1.0 : survival[lo - 1];
}

KmCurve km_estimate(const SurvivalDataset& data) {
  const Eigen::Index n = data.n();
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return data.time(a) < data.time(b) || (data.time(a) == data.time(b) && a < b);
  });

  std::vector<double> t_out, s_out;
  std::vector<int> r_out, d_out;
  double s = 1.0;
  Eigen::Index g = 0;
  while (g < n) {
    Eigen::Index g_end = g;
    int d = 0;
    while (g_end < n && data.time(order[g_end]) == data.time(order[g])) {
      if (data.event(order[g_end])) ++d;
      ++g_end;
    }
    if (d > 0) {
      const int at_risk = static_cast<int>(n - g);
      s *= 1.0 - static_cast<double>(d) / at_risk;
      t_out.push_back(data.time(order[g]));
      s_out.push_back(s);
      r_out.push_back(at_risk);
      d_out.push_back(d);
    }
    g = g_end;
  }

  KmCurve curve;
  curve.times = Eigen::Map<const Eigen::VectorXd>(t_out.data(), static_cast<Eigen::Index>(t_out.size()));
  curve.survival = Eigen::Map<const Eigen::VectorXd>(s_out.data(), static_cast<Eigen::Index>(s_out.size()));
  curve.at_risk = Eigen::Map<const Eigen::VectorXi>(r_out.data(), static_cast<Eigen::Index>(r_out.size()));
  curve.n_events = Eigen::Map<const Eigen::VectorXi>(d_out.data(), static_cast<Eigen::Index>(d_out.size()));
  return curve;
}

LogrankResult logrank_test(const SurvivalDataset& group_a, const SurvivalDataset& group_b) {
  const Eigen::Index na = group_a.n();
  const Eigen::Index nb = group_b.n();
  struct Obs { double time; bool event; bool in_a; };
  std::vector<Obs> obs;
  obs.reserve(static_cast<std::size_t>(na + nb));
  for (Eigen::Index i = 0; i < na; ++i)
    obs.push_back({group_a.time(i), group_a.event(i), true});
  for (Eigen::Index i = 0; i < nb; ++i)
    obs.push_back({group_b.time(i), group_b.event(i), false});
  if (std::none_of(obs.begin(), obs.end(), [](const Obs& o) { return o.event; }))
    throw std::invalid_argument("no events");
  std::sort(obs.begin(), obs.end(), [](const Obs& x, const Obs& y) { return x.time < y.time; });

  double observed_minus_expected = 0.0;
  double variance = 0.0;
  double ra = static_cast<double>(na);
  double rb = static_cast<double>(nb);
  std::size_t g = 0;
  while (g < obs.size()) {
    std::size_t g_end = g;
    int d = 0, da = 0, leave_a = 0, leave_b = 0;
    while (g_end < obs.size() && obs[g_end].time == obs[g].time) {
      d += obs[g_end].event ? 1 : 0;
      da += (obs[g_end].event && obs[g_end].in_a) ? 1 : 0;
      (obs[g_end].in_a ? leave_a : leave_b) += 1;
      ++g_end;
    }
    const double r = ra + rb;
    if (d > 0 && r > 0) {
      observed_minus_expected += da - d * ra / r;
      if (r > 1) variance += d * (ra / r) * (rb / r) * (r - d) / (r - 1);
    }
    ra -= leave_a;
    rb -= leave_b;
    g = g_end;
  }

  LogrankResult result;
  result.statistic = variance > 0 ? observed_minus_expected * observed_minus_expected / variance : 0.0;
  result.p_value = chi2_sf(result.statistic, 1);
  return result;
}

double cox_partial_loglik(const Eigen::Ref<const Eigen::VectorXd>& times,
                          const std::vector<std::uint8_t>& events,
                          const Eigen::Ref<const Eigen::MatrixXd>& design,
                          const Eigen::Ref<const Eigen::VectorXd>& beta) {
  check_cox_inputs(times, events, design);
  if (beta.size() != design.cols())
    throw std::invalid_argument("dimension mismatch in cox model inputs");
  const std::vector<int> order = descending_time_order(times);
  return cox_pass(times, events, design, beta, order, nullptr, nullptr);
}

CoxFit cox_fit(const Eigen::Ref<const Eigen::VectorXd>& times,
               const std::vector<std::uint8_t>& events,
               const Eigen::Ref<const Eigen::MatrixXd>& design,
               const CoxOptions& options) {
  check_cox_inputs(times, events, design);
  const Eigen::Index q = design.cols();
  for (Eigen::Index j = 0; j < q; ++j)
    if (design.col(j).maxCoeff() == design.col(j).minCoeff())
      throw std::invalid_argument("non-identifiable covariate");

  const std::vector<int> order = descending_time_order(times);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(q);
  Eigen::VectorXd score(q);
  Eigen::MatrixXd info(q, q);

  CoxFit fit;
  double loglik = cox_pass(times, events, design, beta, order, &score, &info);
  fit.loglik_at_zero = loglik;
  bool diverged = false;
  fit.converged = score.cwiseAbs().maxCoeff() < options.score_tol;

  while (!fit.converged && !diverged && fit.iterations < options.max_iterations) {
    Eigen::VectorXd step = info.ldlt().solve(score);
    if (!step.allFinite()) { diverged = true; break; }

    double scale = 1.0;
    Eigen::VectorXd candidate = beta + step;
    double loglik_new = cox_pass(times, events, design, candidate, order, nullptr, nullptr);
    for (int h = 0; h < 30 && !(loglik_new >= loglik - 1e-12); ++h) {
      scale *= 0.5;
      candidate = beta + scale * step;
      loglik_new = cox_pass(times, events, design, candidate, order, nullptr, nullptr);
    }
    beta = candidate;
    ++fit.iterations;

    if (beta.cwiseAbs().maxCoeff() > options.divergence_bound) {
      // monotone partial likelihood: estimate runs away
      diverged = true;
      loglik = cox_pass(times, events, design, beta, order, &score, &info);
      break;
    }
    loglik = cox_pass(times, events, design, beta, order, &score, &info);
    fit.converged = score.cwiseAbs().maxCoeff() < options.score_tol &&
                    (scale * step).cwiseAbs().maxCoeff() < options.step_tol;
  }
  if (diverged) fit.converged = false;

  fit.coefficients = beta;
  fit.loglik_at_estimate = loglik;
  fit.standard_errors.resize(q);
  fit.z_scores.resize(q);
  const Eigen::MatrixXd cov = info.ldlt().solve(Eigen::MatrixXd::Identity(q, q));
  for (Eigen::Index j = 0; j < q; ++j) {
    const double v = cov(j, j);
    fit.standard_errors[j] = (std::isfinite(v) && v > 0) ? std::sqrt(v)
                                                         : std::numeric_limits<double>::quiet_NaN();
    fit.z_scores[j] = beta[j] / fit.standard_errors[j];
  }

  try {
    fit.concordance = concordance_index(design * beta, times, events);
  } catch (const std::invalid_argument&) {
    fit.concordance = 0.5;  // no comparable pairs: no ordering information
  }
  return fit;
}

double concordance_index(const Eigen::Ref<const Eigen::VectorXd>& risk_scores,
                         const Eigen::Ref<const Eigen::VectorXd>& times,
                         const std::vector<std::uint8_t>& events) {
  const Eigen::Index n = times.size();
  if (n < 2) throw std::invalid_argument("need at least two observations");
  if (risk_scores.size() != n || static_cast<Eigen::Index>(events.size()) != n)
    throw std::invalid_argument("dimension mismatch in concordance inputs");

  std::vector<double> levels(risk_scores.data(), risk_scores.data() + n);
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  const auto rank_of = [&](double r) {
    return static_cast<int>(std::lower_bound(levels.begin(), levels.end(), r) - levels.begin());
  };

  const std::vector<int> order = descending_time_order(times);
  Fenwick bit(static_cast<int>(levels.size()));
  long long inserted = 0, conc = 0, tied = 0, comparable = 0;

  Eigen::Index g = 0;
  while (g < n) {
    Eigen::Index g_end = g;
    while (g_end < n && times[order[g_end]] == times[order[g]]) ++g_end;
    // censored members of a tied-time group outlive its events, so they join
    // the eligible pool before the group's events are scored; tied-time
    // event/event pairs never become comparable
    for (Eigen::Index k = g; k < g_end; ++k) {
      const int i = order[k];
      if (!events[static_cast<std::size_t>(i)]) { bit.add(rank_of(risk_scores[i])); ++inserted; }
    }
    for (Eigen::Index k = g; k < g_end; ++k) {
      const int i = order[k];
      if (!events[static_cast<std::size_t>(i)]) continue;
      const int r = rank_of(risk_scores[i]);
      comparable += inserted;
      conc += bit.prefix(r - 1);
      tied += bit.prefix(r) - bit.prefix(r - 1);
    }
    for (Eigen::Index k = g; k < g_end; ++k) {
      const int i = order[k];
      if (events[static_cast<std::size_t>(i)]) { bit.add(rank_of(risk_scores[i])); ++inserted; }
    }
    g = g_end;
  }

  if (comparable == 0) throw std::invalid_argument("no comparable pairs");
  return static_cast<double>(2 * conc + tied) / static_cast<double>(2 * comparable);
}

double likelihood_ratio_test(double loglik_null, double loglik_full, int df) {
  if (df <= 0) throw std::invalid_argument("df must be positive");
  if (loglik_full < loglik_null - 1e-8)
    throw std::invalid_argument("full-model loglik below null");
  const double statistic = std::max(0.0, 2.0 * (loglik_full - loglik_null));
  return chi2_sf(statistic, df);
}

}  // namespace drsf
