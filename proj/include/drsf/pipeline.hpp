#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "drsf/calibration.hpp"
#include "drsf/dataset.hpp"
#include "drsf/dense.hpp"
#include "drsf/profile.hpp"

namespace drsf {

enum class CalibrationMode { FixedPStar, Simulation, Permutation };

struct PipelineConfig {
  // exactly one of dataset_path / scenario is set
  std::string dataset_path;
  std::string scenario;
  int scenario_n = 1000;

  ParamGrid grid;

  int k_min = 2;
  int k_max = 7;
  int min_leaf_size = 120;
  DfConvention df_convention = DfConvention::LeavesMinusOne;

  CalibrationMode mode = CalibrationMode::FixedPStar;
  double p_star = 0.01;  // fixed mode
  double alpha = 0.01;   // empirical quantile level for the other modes
  int n_perm = 100;
  int n_null = 50;   // simulation-mode replicates per arm
  int n_global = 50;
  int calibration_n = 400;  // rows per simulated calibration replicate

  std::uint64_t seed = 0;
  int workers = 1;          // execution environment; never changes output bytes
  std::string output_dir;   // empty = no artifacts written
};

struct PipelineResult {
  SurvivalDataset data;  // the analysis dataset (ingested or simulated)
  ProfileResult profile;
  double p_star = 0.0;
  CalibrationResult calibration;  // sample_count 0 under FixedPStar
  FusedProximity fused;
  std::vector<ProfileCandidate> candidates;  // per-k diagnostics
};

PipelineConfig config_from_text(const std::string& text);
PipelineConfig config_from_file(const std::string& path);

// Manifest with config, seeds and artifact checksums. Stable bytes: the
// worker count and output directory are execution environment, not identity.
std::string manifest_json(
    const PipelineConfig& config,
    const std::vector<std::pair<std::string, std::string>>& checksums);

// The calibration stage alone. `data` is the analysis dataset; only the
// permutation mode reads it.
CalibrationResult run_calibration(const PipelineConfig& config,
                                  const SurvivalDataset& data);

// Ingest/simulate, calibrate p*, train the dense ensemble, scan cluster
// counts, select the profile, then write the artifact set when an output
// directory is configured. Stage failures rethrow with a stage tag.
PipelineResult run_pipeline(const PipelineConfig& config);

}  // namespace drsf
