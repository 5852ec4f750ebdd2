#pragma once

#include <map>
#include <string>
#include <vector>

#include "drsf/dataset.hpp"
#include "drsf/dense.hpp"
#include "drsf/evaluation.hpp"
#include "drsf/profile.hpp"
#include "drsf/simulate.hpp"

namespace drsf {

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& bytes);

// Survival CSV: header id,time,event,treatment,<covariates...>; covariate
// kinds are declared or inferred (every cell numeric -> numeric, otherwise
// at most 10 distinct values -> categorical with lexicographic levels).
// Errors carry 1-based data-row coordinates and the column name.
SurvivalDataset dataset_from_csv(const std::string& text);
SurvivalDataset dataset_from_csv(const std::string& text,
                                 const std::vector<CovariateInfo>& schema);
SurvivalDataset ingest_csv(const std::string& path);
SurvivalDataset ingest_csv(const std::string& path,
                           const std::vector<CovariateInfo>& schema);
std::string dataset_to_csv(const SurvivalDataset& data);
void export_csv(const SurvivalDataset& data, const std::string& path);

// Simulation ground truth, one row per patient: region and latent times.
std::string truth_to_csv(const GeneratedDataset& generated);

// Fused proximity on disk: 8-byte magic, then rows, cols, total_trees and
// config_count as little-endian int64, then row-major float64 values.
void write_proximity(const FusedProximity& fused, const std::string& path);
FusedProximity read_proximity(const std::string& path);

// Machine-readable profile document (JSON, sorted keys, stable bytes).
std::string profile_to_json(const ProfileResult& profile,
                            const std::vector<CovariateInfo>& schema, double p_star);
ProfileResult profile_from_json(const std::string& text);

// Human-readable rendering of the selected profile and its leaf effects.
std::string render_profile_text(const ProfileResult& profile,
                                const std::vector<CovariateInfo>& schema,
                                double p_star);

// value,probability rows of the empirical CDF at the sorted sample points.
std::string ecdf_csv(std::vector<double> values);

// 301 comma-separated columns per row, six decimal places.
std::string gradient_csv(const GradientGrid& grid);

// Plain PGM (P2), 256 levels; -1 maps to 0, +1 to 255, top row is the
// second covariate's upper end.
std::string gradient_pgm(const GradientGrid& grid);

// Flat `key = value` config text with optional [section] headers and
// #-comments. Top-level keys live under the empty section name.
using ConfigDoc = std::map<std::string, std::map<std::string, std::string>>;
ConfigDoc parse_config_text(const std::string& text);

}  // namespace drsf
