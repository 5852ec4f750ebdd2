#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace drsf {

enum class CovariateKind { Numeric, Categorical };

struct CovariateInfo {
  std::string name;
  CovariateKind kind = CovariateKind::Numeric;
  // Categorical columns store a level index in [0, level_count); level_names
  // keeps the original labels for round-tripping (index i -> level_names[i]).
  int level_count = 0;
  std::vector<std::string> level_names;

  static CovariateInfo numeric(std::string name) {
    return CovariateInfo{std::move(name), CovariateKind::Numeric, 0, {}};
  }
  static CovariateInfo categorical(std::string name,
                                   std::vector<std::string> levels) {
    CovariateInfo info;
    info.name = std::move(name);
    info.kind = CovariateKind::Categorical;
    info.level_count = static_cast<int>(levels.size());
    info.level_names = std::move(levels);
    return info;
  }

  bool operator==(const CovariateInfo&) const = default;
};

// One observed patient: follow-up time, event indicator, arm, covariate row.
struct SurvivalRecord {
  double time = 0.0;
  bool event = false;
  int treatment = 0;
  Eigen::VectorXd covariates;
};

// Column-oriented survival dataset. Covariates live in one dense matrix;
// categorical columns hold level indices as doubles.
class SurvivalDataset {
 public:
  SurvivalDataset() = default;
  SurvivalDataset(Eigen::VectorXd times, std::vector<std::uint8_t> events,
                  std::vector<std::uint8_t> treatments, Eigen::MatrixXd covariates,
                  std::vector<CovariateInfo> schema);

  Eigen::Index n() const { return times_.size(); }
  Eigen::Index p() const { return covariates_.cols(); }

  const Eigen::VectorXd& times() const { return times_; }
  const std::vector<std::uint8_t>& events() const { return events_; }
  const std::vector<std::uint8_t>& treatments() const { return treatments_; }
  const Eigen::MatrixXd& covariates() const { return covariates_; }
  const std::vector<CovariateInfo>& schema() const { return schema_; }

  double time(Eigen::Index i) const { return times_[i]; }
  bool event(Eigen::Index i) const { return events_[static_cast<std::size_t>(i)] != 0; }
  int treatment(Eigen::Index i) const { return treatments_[static_cast<std::size_t>(i)]; }
  double covariate(Eigen::Index i, Eigen::Index j) const { return covariates_(i, j); }

  SurvivalRecord record(Eigen::Index i) const;

  int event_count() const;

  // Copies the given rows into a new dataset with the same schema.
  SurvivalDataset subset(std::span<const Eigen::Index> rows) const;
  SurvivalDataset subset(const std::vector<int>& rows) const;

  // Replaces the covariate block, keeping (time, event, treatment) fixed.
  SurvivalDataset with_covariates(Eigen::MatrixXd covariates) const;

  bool operator==(const SurvivalDataset& other) const;

 private:
  void validate() const;

  Eigen::VectorXd times_;
  std::vector<std::uint8_t> events_;
  std::vector<std::uint8_t> treatments_;
  Eigen::MatrixXd covariates_;
  std::vector<CovariateInfo> schema_;
};

}  // namespace drsf
