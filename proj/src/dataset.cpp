#include "drsf/dataset.hpp"

#include <stdexcept>
#include <utility>

namespace drsf {

SurvivalDataset::SurvivalDataset(Eigen::VectorXd times,
                                 std::vector<std::uint8_t> events,
                                 std::vector<std::uint8_t> treatments,
                                 Eigen::MatrixXd covariates,
                                 std::vector<CovariateInfo> schema)
    : times_(std::move(times)),
      events_(std::move(events)),
      treatments_(std::move(treatments)),
      covariates_(std::move(covariates)),
      schema_(std::move(schema)) {
  validate();
}

void SurvivalDataset::validate() const {
  const Eigen::Index n = times_.size();
  if (n < 1) throw std::invalid_argument("empty dataset");
  if (static_cast<Eigen::Index>(events_.size()) != n ||
      static_cast<Eigen::Index>(treatments_.size()) != n ||
      covariates_.rows() != n) {
    throw std::invalid_argument("dataset columns have mismatched lengths");
  }
  if (covariates_.cols() != static_cast<Eigen::Index>(schema_.size())) {
    throw std::invalid_argument("covariate matrix does not match schema");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(times_[i] >= 0.0)) throw std::invalid_argument("negative time");
    const int w = treatments_[static_cast<std::size_t>(i)];
    if (w != 0 && w != 1) throw std::invalid_argument("treatment must be 0 or 1");
  }
  for (Eigen::Index j = 0; j < covariates_.cols(); ++j) {
    const auto& info = schema_[static_cast<std::size_t>(j)];
    if (info.kind != CovariateKind::Categorical) continue;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double v = covariates_(i, j);
      const int level = static_cast<int>(v);
      if (v != level || level < 0 || level >= info.level_count) {
        throw std::invalid_argument("categorical level out of range in column " +
                                    info.name);
      }
    }
  }
}

SurvivalRecord SurvivalDataset::record(Eigen::Index i) const {
  return SurvivalRecord{time(i), event(i), treatment(i),
                        covariates_.row(i).transpose()};
}

int SurvivalDataset::event_count() const {
  int count = 0;
  for (const auto e : events_) count += e != 0;
  return count;
}

SurvivalDataset SurvivalDataset::subset(std::span<const Eigen::Index> rows) const {
  const Eigen::Index m = static_cast<Eigen::Index>(rows.size());
  Eigen::VectorXd times(m);
  std::vector<std::uint8_t> events(static_cast<std::size_t>(m));
  std::vector<std::uint8_t> treatments(static_cast<std::size_t>(m));
  Eigen::MatrixXd covariates(m, p());
  for (Eigen::Index k = 0; k < m; ++k) {
    const Eigen::Index i = rows[static_cast<std::size_t>(k)];
    times[k] = times_[i];
    events[static_cast<std::size_t>(k)] = events_[static_cast<std::size_t>(i)];
    treatments[static_cast<std::size_t>(k)] = treatments_[static_cast<std::size_t>(i)];
    covariates.row(k) = covariates_.row(i);
  }
  return SurvivalDataset(std::move(times), std::move(events), std::move(treatments),
                         std::move(covariates), schema_);
}

SurvivalDataset SurvivalDataset::subset(const std::vector<int>& rows) const {
  std::vector<Eigen::Index> idx(rows.begin(), rows.end());
  return subset(std::span<const Eigen::Index>(idx));
}

SurvivalDataset SurvivalDataset::with_covariates(Eigen::MatrixXd covariates) const {
  return SurvivalDataset(times_, events_, treatments_, std::move(covariates), schema_);
}

bool SurvivalDataset::operator==(const SurvivalDataset& other) const {
  return times_.size() == other.times_.size() &&
         covariates_.rows() == other.covariates_.rows() &&
         covariates_.cols() == other.covariates_.cols() &&
         (times_.array() == other.times_.array()).all() &&
         events_ == other.events_ && treatments_ == other.treatments_ &&
         (covariates_.array() == other.covariates_.array()).all() &&
         schema_ == other.schema_;
}

}  // namespace drsf
