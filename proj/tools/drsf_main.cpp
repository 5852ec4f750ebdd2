#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "drsf/evaluation.hpp"
#include "drsf/io.hpp"
#include "drsf/pipeline.hpp"
#include "drsf/rng.hpp"
#include "drsf/simulate.hpp"

namespace {

std::string short_num(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, "%.6g", value);
  return buffer;
}

const char* mode_label(drsf::CalibrationMode mode) {
  switch (mode) {
    case drsf::CalibrationMode::FixedPStar: return "fixed";
    case drsf::CalibrationMode::Simulation: return "simulation";
    case drsf::CalibrationMode::Permutation: return "permutation";
  }
  return "fixed";
}

drsf::SurvivalDataset load_input(const drsf::PipelineConfig& config) {
  if (!config.dataset_path.empty()) return drsf::ingest_csv(config.dataset_path);
  auto spec = drsf::scenario_by_name(config.scenario);
  spec.n = config.scenario_n;
  return drsf::generate_dataset(spec, config.seed).data;
}

int run_simulate(const std::string& scenario, int n, std::uint64_t seed,
                 const std::string& out, const std::string& truth) {
  auto spec = drsf::scenario_by_name(scenario);
  spec.n = n;
  const drsf::GeneratedDataset generated = drsf::generate_dataset(spec, seed);
  drsf::export_csv(generated.data, out);
  std::cout << "wrote " << generated.data.n() << " patients to " << out << "\n";
  if (!truth.empty()) {
    drsf::write_file(truth, drsf::truth_to_csv(generated));
    std::cout << "wrote ground truth to " << truth << "\n";
  }
  return 0;
}

int run_run(const std::string& config_path, const std::string& output, int workers) {
  drsf::PipelineConfig config = drsf::config_from_file(config_path);
  if (!output.empty()) config.output_dir = output;
  config.workers = workers;
  const drsf::PipelineResult result = drsf::run_pipeline(config);

  std::cout << "n = " << result.data.n() << ", p = " << result.data.p() << "\n";
  std::cout << "p* = " << short_num(result.p_star) << " (" << mode_label(config.mode);
  if (result.calibration.sample_count > 0)
    std::cout << ", m = " << result.calibration.sample_count
              << ", alpha = " << short_num(result.calibration.alpha);
  std::cout << ")\n\n";
  std::cout << drsf::render_profile_text(result.profile, result.data.schema(),
                                         result.p_star);
  if (!config.output_dir.empty())
    std::cout << "\nartifacts in " << config.output_dir << "\n";
  return 0;
}

int run_calibrate(const std::string& config_path, int workers,
                  const std::string& ecdf_out) {
  drsf::PipelineConfig config = drsf::config_from_file(config_path);
  config.workers = workers;
  const drsf::SurvivalDataset data = load_input(config);
  const drsf::CalibrationResult calibration = drsf::run_calibration(config, data);
  std::cout << "p* = " << short_num(calibration.p_star) << " (" << mode_label(config.mode);
  if (calibration.sample_count > 0)
    std::cout << ", m = " << calibration.sample_count
              << ", alpha = " << short_num(calibration.alpha);
  std::cout << ")\n";
  if (!ecdf_out.empty()) {
    if (calibration.p_leaf_values.empty())
      throw std::runtime_error("no calibration distribution under a fixed threshold");
    drsf::write_file(ecdf_out, drsf::ecdf_csv(calibration.p_leaf_values));
    std::cout << "wrote ECDF to " << ecdf_out << "\n";
  }
  return 0;
}

// Replicate-averaged treatment-benefit gradient over a covariate pair. Each
// replicate simulates an analysis dataset, selects a profile with the
// configured fixed threshold, and evaluates it on a fresh dataset from the
// same scenario.
int run_gradient(const std::string& config_path, int workers, int replicates,
                 int first, int second, const std::string& out_dir) {
  drsf::PipelineConfig config = drsf::config_from_file(config_path);
  if (config.scenario.empty())
    throw std::runtime_error("gradient needs a scenario config");
  config.workers = workers;

  drsf::ProfileSearchConfig search;
  search.k_min = config.k_min;
  search.k_max = config.k_max;
  search.p_star = config.p_star;
  search.min_leaf_size = config.min_leaf_size;
  search.seed = config.seed;
  search.df_convention = config.df_convention;

  auto spec = drsf::scenario_by_name(config.scenario);
  spec.n = config.scenario_n;

  std::vector<drsf::GradientGrid> grids;
  for (int r = 0; r < replicates; ++r) {
    const auto index = static_cast<std::uint64_t>(r);
    const std::uint64_t analysis_seed =
        drsf::Rng(config.seed, drsf::stream::kEvaluation, 2 * index).next_u64();
    const std::uint64_t eval_seed =
        drsf::Rng(config.seed, drsf::stream::kEvaluation, 2 * index + 1).next_u64();
    const drsf::SurvivalDataset data =
        drsf::generate_dataset(spec, analysis_seed).data;
    const drsf::FusedProximity fused =
        drsf::dense_train(data, config.grid, config.workers);
    const drsf::ProfileResult profile = drsf::select_best_profile(data, fused, search);
    const drsf::SurvivalDataset eval = drsf::generate_dataset(spec, eval_seed).data;
    grids.push_back(drsf::gradient_for_profile(profile, eval, {first, second}));
  }
  const drsf::GradientGrid mean = drsf::averaged_gradient(grids);

  std::filesystem::create_directories(out_dir);
  const auto path = [&](const char* name) {
    return (std::filesystem::path(out_dir) / name).string();
  };
  drsf::write_file(path("gradient.csv"), drsf::gradient_csv(mean));
  drsf::write_file(path("gradient.pgm"), drsf::gradient_pgm(mean));
  std::cout << "averaged " << replicates << " replicates over columns " << first
            << " and " << second << "\n";
  std::cout << "wrote gradient.csv and gradient.pgm to " << out_dir << "\n";
  return 0;
}

int run_baseline(const std::string& dataset, int k_min, int k_max, int min_leaf,
                 std::uint64_t seed, const std::string& out) {
  const drsf::SurvivalDataset data = drsf::ingest_csv(dataset);
  drsf::BaselineConfig config;
  config.k_min = k_min;
  config.k_max = k_max;
  config.min_leaf_size = min_leaf;
  config.seed = seed;
  const drsf::ProfileResult profile = drsf::kmeans_baseline(data, config);
  std::cout << "baseline k = " << profile.k << ", leaves = " << profile.num_leaves
            << ", p_leaf = " << short_num(profile.p_leaf) << "\n";
  if (!out.empty()) {
    drsf::write_file(out, drsf::profile_to_json(
                              profile, data.schema(),
                              std::numeric_limits<double>::quiet_NaN()));
    std::cout << "wrote baseline profile to " << out << "\n";
  }
  return 0;
}

int run_report(const std::vector<std::string>& profile_paths, int first, int second,
               const std::string& out) {
  std::vector<drsf::ProfileResult> profiles;
  for (const auto& path : profile_paths)
    profiles.push_back(drsf::profile_from_json(drsf::read_file(path)));
  const drsf::RecoveryReport report =
      drsf::covariate_recovery(profiles, {first, second});

  std::cout << "profiles: " << profiles.size() << "\n";
  std::cout << "uses column " << first << ": " << short_num(report.rate_first) << "\n";
  std::cout << "uses column " << second << ": " << short_num(report.rate_second) << "\n";
  std::cout << "uses both: " << short_num(report.rate_both) << "\n";

  std::string csv = "metric,value\n";
  csv += "rate_first," + short_num(report.rate_first) + "\n";
  csv += "rate_second," + short_num(report.rate_second) + "\n";
  csv += "rate_both," + short_num(report.rate_both) + "\n";
  for (std::size_t c = 0; c < report.count_distribution.size(); ++c)
    csv += "count_" + std::to_string(c) + "," +
           short_num(report.count_distribution[c]) + "\n";
  if (!out.empty()) {
    drsf::write_file(out, csv);
    std::cout << "wrote recovery table to " << out << "\n";
  } else {
    std::cout << csv;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dense random survival forests for treatment-benefit subgroups"};
  app.require_subcommand(1);

  std::string scenario = "scenario1", sim_out, sim_truth;
  int sim_n = 1000;
  std::uint64_t sim_seed = 0;
  auto* simulate = app.add_subcommand("simulate", "draw a randomized trial from a scenario");
  simulate->add_option("--scenario", scenario,
                       "scenario1..scenario4, global or null")->required();
  simulate->add_option("--n", sim_n, "patients");
  simulate->add_option("--seed", sim_seed, "simulation seed");
  simulate->add_option("--out", sim_out, "dataset CSV path")->required();
  simulate->add_option("--truth", sim_truth, "ground-truth sidecar CSV path");

  std::string run_config, run_output;
  int run_workers = 1;
  auto* run = app.add_subcommand("run", "run the discovery pipeline from a config file");
  run->add_option("--config", run_config, "config file")->required();
  run->add_option("--output", run_output, "artifact directory (overrides the config)");
  run->add_option("--workers", run_workers, "worker threads")->check(CLI::PositiveNumber);

  std::string cal_config, cal_ecdf;
  int cal_workers = 1;
  auto* calibrate = app.add_subcommand("calibrate", "compute p* without the full run");
  calibrate->add_option("--config", cal_config, "config file")->required();
  calibrate->add_option("--workers", cal_workers, "worker threads")
      ->check(CLI::PositiveNumber);
  calibrate->add_option("--ecdf", cal_ecdf, "write the p_leaf ECDF here");

  std::string grad_config, grad_out;
  int grad_workers = 1, grad_replicates = 50, grad_first = 5, grad_second = 6;
  auto* gradient = app.add_subcommand("gradient",
                                      "replicate-averaged benefit gradient plot data");
  gradient->add_option("--config", grad_config, "scenario config file")->required();
  gradient->add_option("--out", grad_out, "output directory")->required();
  gradient->add_option("--replicates", grad_replicates, "simulated replicates")
      ->check(CLI::PositiveNumber);
  gradient->add_option("--first", grad_first, "first covariate column (0-based)");
  gradient->add_option("--second", grad_second, "second covariate column (0-based)");
  gradient->add_option("--workers", grad_workers, "worker threads")
      ->check(CLI::PositiveNumber);

  std::string base_dataset, base_out;
  int base_k_min = 2, base_k_max = 7, base_min_leaf = 120;
  std::uint64_t base_seed = 0;
  auto* baseline = app.add_subcommand("baseline",
                                      "outcome-blind k-means + tree comparator");
  baseline->add_option("--dataset", base_dataset, "dataset CSV")->required();
  baseline->add_option("--k-min", base_k_min, "smallest cluster count");
  baseline->add_option("--k-max", base_k_max, "largest cluster count");
  baseline->add_option("--min-leaf", base_min_leaf, "minimum leaf size");
  baseline->add_option("--seed", base_seed, "clustering seed");
  baseline->add_option("--out", base_out, "baseline profile JSON path");

  std::vector<std::string> report_profiles;
  std::string report_out;
  int report_first = 5, report_second = 6;
  auto* report = app.add_subcommand("report", "covariate recovery across profile JSONs");
  report->add_option("profiles", report_profiles, "profile JSON files")
      ->required()
      ->expected(-1);
  report->add_option("--first", report_first, "first target column (0-based)");
  report->add_option("--second", report_second, "second target column (0-based)");
  report->add_option("--out", report_out, "recovery CSV path");

  try {
    app.parse(argc, argv);
    if (*simulate) return run_simulate(scenario, sim_n, sim_seed, sim_out, sim_truth);
    if (*run) return run_run(run_config, run_output, run_workers);
    if (*calibrate) return run_calibrate(cal_config, cal_workers, cal_ecdf);
    if (*gradient)
      return run_gradient(grad_config, grad_workers, grad_replicates, grad_first,
                          grad_second, grad_out);
    if (*baseline)
      return run_baseline(base_dataset, base_k_min, base_k_max, base_min_leaf,
                          base_seed, base_out);
    if (*report)
      return run_report(report_profiles, report_first, report_second, report_out);
  } catch (const CLI::ParseError& error) {
    return app.exit(error);
  } catch (const std::exception& error) {
    std::cerr << "error: " << error.what() << "\n";
    return 1;
  }
  return 0;
}
