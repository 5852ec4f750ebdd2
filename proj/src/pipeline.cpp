#include "drsf/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "drsf/io.hpp"
#include "drsf/rng.hpp"
#include "drsf/simulate.hpp"

namespace drsf {

namespace {

using nlohmann::json;

template <typename F>
auto stage(const char* name, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const std::exception& error) {
    throw std::runtime_error(std::string(name) + ": " + error.what());
  }
}

[[noreturn]] void bad_value(const std::string& key) {
  throw std::invalid_argument("bad value for " + key);
}

int to_int(const std::string& value, const std::string& key) {
  try {
    std::size_t used = 0;
    const int parsed = std::stoi(value, &used);
    if (used != value.size()) bad_value(key);
    return parsed;
  } catch (const std::invalid_argument&) {
    bad_value(key);
  } catch (const std::out_of_range&) {
    bad_value(key);
  }
}

std::uint64_t to_u64(const std::string& value, const std::string& key) {
  try {
    std::size_t used = 0;
    const std::uint64_t parsed = std::stoull(value, &used);
    if (used != value.size()) bad_value(key);
    return parsed;
  } catch (const std::invalid_argument&) {
    bad_value(key);
  } catch (const std::out_of_range&) {
    bad_value(key);
  }
}

double to_double(const std::string& value, const std::string& key) {
  try {
    std::size_t used = 0;
    const double parsed = std::stod(value, &used);
    if (used != value.size() || !std::isfinite(parsed)) bad_value(key);
    return parsed;
  } catch (const std::invalid_argument&) {
    bad_value(key);
  } catch (const std::out_of_range&) {
    bad_value(key);
  }
}

std::vector<std::string> split_words(const std::string& value) {
  std::istringstream in(value);
  std::vector<std::string> words;
  std::string word;
  while (in >> word) words.push_back(word);
  return words;
}

std::vector<int> to_int_list(const std::string& value, const std::string& key) {
  std::vector<int> out;
  for (const auto& word : split_words(value)) out.push_back(to_int(word, key));
  if (out.empty()) bad_value(key);
  return out;
}

std::vector<double> to_double_list(const std::string& value, const std::string& key) {
  std::vector<double> out;
  for (const auto& word : split_words(value)) out.push_back(to_double(word, key));
  if (out.empty()) bad_value(key);
  return out;
}

const char* mode_name(CalibrationMode mode) {
  switch (mode) {
    case CalibrationMode::FixedPStar: return "fixed";
    case CalibrationMode::Simulation: return "simulation";
    case CalibrationMode::Permutation: return "permutation";
  }
  return "fixed";
}

const char* df_name(DfConvention convention) {
  return convention == DfConvention::LeavesMinusOne ? "leaves-minus-one"
                                                    : "two-leaves-minus-two";
}

void validate_config(const PipelineConfig& config) {
  if (config.dataset_path.empty() == config.scenario.empty())
    throw std::invalid_argument("config needs exactly one of dataset or scenario");
  if (!(config.alpha > 0.0 && config.alpha < 1.0))
    throw std::invalid_argument("alpha out of range");
  if (config.workers < 1) throw std::invalid_argument("workers must be positive");
}

json config_to_json(const PipelineConfig& config) {
  json grid;
  grid["mtry"] = config.grid.mtry;
  grid["nodedepth"] = config.grid.nodedepth;
  grid["nsplit"] = config.grid.nsplit;
  grid["nodesize"] = config.grid.nodesize;
  grid["weight"] = config.grid.weight;
  grid["ntree"] = config.grid.ntree_per_config;
  grid["den"] = config.grid.den;
  grid["base_seed"] = config.grid.base_seed;

  json doc;
  doc["dataset"] = config.dataset_path;
  doc["scenario"] = config.scenario;
  doc["scenario_n"] = config.scenario_n;
  doc["grid"] = grid;
  doc["k_min"] = config.k_min;
  doc["k_max"] = config.k_max;
  doc["minimum_leaf_size"] = config.min_leaf_size;
  doc["df"] = df_name(config.df_convention);
  doc["mode"] = mode_name(config.mode);
  doc["p_star"] = config.p_star;
  doc["alpha"] = config.alpha;
  doc["n_perm"] = config.n_perm;
  doc["n_null"] = config.n_null;
  doc["n_global"] = config.n_global;
  doc["calibration_n"] = config.calibration_n;
  doc["seed"] = config.seed;
  return doc;
}

std::string diagnostics_csv(const std::vector<ProfileCandidate>& candidates) {
  std::string out = "k,num_leaves,p_leaf,df,identifiable\n";
  char buffer[64];
  for (const auto& candidate : candidates) {
    std::snprintf(buffer, sizeof buffer, "%.17g", candidate.test.p_leaf);
    out += std::to_string(candidate.k) + "," + std::to_string(candidate.num_leaves) +
           "," + buffer + "," + std::to_string(candidate.test.df) + "," +
           (candidate.test.identifiable ? "1" : "0") + "\n";
  }
  return out;
}

std::string effects_csv(const std::vector<LeafEffect>& effects) {
  std::string out =
      "leaf,n_treatment,n_control,events_treatment,events_control,"
      "hazard_ratio,logrank_p,defined\n";
  char buffer[64];
  for (const auto& effect : effects) {
    out += std::to_string(effect.leaf) + "," + std::to_string(effect.n_treatment) +
           "," + std::to_string(effect.n_control) + "," +
           std::to_string(effect.events_treatment) + "," +
           std::to_string(effect.events_control);
    std::snprintf(buffer, sizeof buffer, "%.17g", effect.hazard_ratio);
    out += std::string(",") + buffer;
    std::snprintf(buffer, sizeof buffer, "%.17g", effect.logrank_p);
    out += std::string(",") + buffer;
    out += effect.defined ? ",1\n" : ",0\n";
  }
  return out;
}

}  // namespace

PipelineConfig config_from_text(const std::string& text) {
  const ConfigDoc doc = parse_config_text(text);

  PipelineConfig config;
  config.grid.mtry = {1};
  config.grid.nodedepth = {2};
  config.grid.nsplit = {0};
  config.grid.nodesize = {50};
  config.grid.weight = {0.5};

  for (const auto& [section, entries] : doc) {
    for (const auto& [key, value] : entries) {
      const std::string tag = section.empty() ? key : section + "." + key;
      if (section.empty()) {
        if (key == "dataset")
          config.dataset_path = value;
        else if (key == "scenario")
          config.scenario = value;
        else if (key == "n")
          config.scenario_n = to_int(value, tag);
        else if (key == "seed")
          config.seed = to_u64(value, tag);
        else if (key == "output")
          config.output_dir = value;
        else
          throw std::invalid_argument("unknown config key: " + tag);
      } else if (section == "grid") {
        if (key == "mtry")
          config.grid.mtry = to_int_list(value, tag);
        else if (key == "nodedepth")
          config.grid.nodedepth = to_int_list(value, tag);
        else if (key == "nsplit")
          config.grid.nsplit = to_int_list(value, tag);
        else if (key == "nodesize")
          config.grid.nodesize = to_int_list(value, tag);
        else if (key == "weight")
          config.grid.weight = to_double_list(value, tag);
        else if (key == "ntree")
          config.grid.ntree_per_config = to_int(value, tag);
        else if (key == "den")
          config.grid.den = to_double(value, tag);
        else if (key == "base_seed")
          config.grid.base_seed = to_u64(value, tag);
        else
          throw std::invalid_argument("unknown config key: " + tag);
      } else if (section == "profile") {
        if (key == "k_min")
          config.k_min = to_int(value, tag);
        else if (key == "k_max")
          config.k_max = to_int(value, tag);
        else if (key == "minimum_leaf_size")
          config.min_leaf_size = to_int(value, tag);
        else if (key == "df") {
          if (value == "leaves-minus-one")
            config.df_convention = DfConvention::LeavesMinusOne;
          else if (value == "two-leaves-minus-two")
            config.df_convention = DfConvention::TwoLeavesMinusTwo;
          else
            bad_value(tag);
        } else {
          throw std::invalid_argument("unknown config key: " + tag);
        }
      } else if (section == "calibration") {
        if (key == "mode") {
          if (value == "fixed")
            config.mode = CalibrationMode::FixedPStar;
          else if (value == "simulation")
            config.mode = CalibrationMode::Simulation;
          else if (value == "permutation")
            config.mode = CalibrationMode::Permutation;
          else
            bad_value(tag);
        } else if (key == "p_star") {
          config.p_star = to_double(value, tag);
        } else if (key == "alpha") {
          config.alpha = to_double(value, tag);
        } else if (key == "n_perm") {
          config.n_perm = to_int(value, tag);
        } else if (key == "n_null") {
          config.n_null = to_int(value, tag);
        } else if (key == "n_global") {
          config.n_global = to_int(value, tag);
        } else if (key == "n") {
          config.calibration_n = to_int(value, tag);
        } else {
          throw std::invalid_argument("unknown config key: " + tag);
        }
      } else {
        throw std::invalid_argument("unknown config section: " + section);
      }
    }
  }

  validate_config(config);
  return config;
}

PipelineConfig config_from_file(const std::string& path) {
  return config_from_text(read_file(path));
}

std::string manifest_json(
    const PipelineConfig& config,
    const std::vector<std::pair<std::string, std::string>>& checksums) {
  json doc;
  doc["format"] = "drsf-manifest/1";
  doc["config"] = config_to_json(config);
  doc["seeds"]["pipeline"] = config.seed;
  doc["seeds"]["grid_base"] = config.grid.base_seed;
  doc["artifacts"] = json::object();
  for (const auto& [name, digest] : checksums) doc["artifacts"][name] = digest;
  return doc.dump(2) + "\n";
}

CalibrationResult run_calibration(const PipelineConfig& config,
                                  const SurvivalDataset& data) {
  ProfileSearchConfig search;
  search.k_min = config.k_min;
  search.k_max = config.k_max;
  search.min_leaf_size = config.min_leaf_size;
  search.seed = config.seed;
  search.df_convention = config.df_convention;

  CalibrationResult calibration;
  switch (config.mode) {
    case CalibrationMode::FixedPStar:
      calibration.p_star = config.p_star;
      calibration.alpha = config.alpha;
      calibration.sample_count = 0;
      break;
    case CalibrationMode::Simulation: {
      std::vector<double> null_ps, global_ps;
      for (int r = 0; r < config.n_null + config.n_global; ++r) {
        auto spec = r < config.n_null ? null_scenario() : global_scenario();
        spec.n = config.calibration_n;
        const std::uint64_t data_seed =
            Rng(config.seed, stream::kCalibration, static_cast<std::uint64_t>(r))
                .next_u64();
        const GeneratedDataset replicate = generate_dataset(spec, data_seed);
        const FusedProximity fused =
            dense_train(replicate.data, config.grid, config.workers);
        const double p = min_p_leaf(replicate.data, fused, search);
        (r < config.n_null ? null_ps : global_ps).push_back(p);
      }
      calibration = calibrate_by_simulation(null_ps, global_ps, config.alpha);
      break;
    }
    case CalibrationMode::Permutation: {
      PermutationCalibrationConfig perm;
      perm.grid = config.grid;
      perm.search = search;
      perm.n_perm = config.n_perm;
      perm.alpha = config.alpha;
      perm.seed = config.seed;
      perm.workers = config.workers;
      calibration = calibrate_by_permutation(data, perm);
      break;
    }
  }
  return calibration;
}

PipelineResult run_pipeline(const PipelineConfig& config) {
  validate_config(config);

  PipelineResult result;
  GeneratedDataset generated;
  const bool simulated = !config.scenario.empty();
  stage("input", [&] {
    if (simulated) {
      auto spec = scenario_by_name(config.scenario);
      spec.n = config.scenario_n;
      generated = generate_dataset(spec, config.seed);
      result.data = generated.data;
    } else {
      result.data = ingest_csv(config.dataset_path);
    }
    return 0;
  });
  const SurvivalDataset& data = result.data;

  ProfileSearchConfig search;
  search.k_min = config.k_min;
  search.k_max = config.k_max;
  search.min_leaf_size = config.min_leaf_size;
  search.seed = config.seed;
  search.df_convention = config.df_convention;

  stage("calibration", [&] {
    result.calibration = run_calibration(config, data);
    return 0;
  });
  result.p_star = result.calibration.p_star;
  search.p_star = result.p_star;

  stage("dense-train", [&] {
    result.fused = dense_train(data, config.grid, config.workers);
    return 0;
  });

  stage("profile", [&] {
    result.candidates = scan_cluster_counts(data, result.fused, search);
    result.profile = select_from_candidates(data, result.candidates, search);
    return 0;
  });

  if (!config.output_dir.empty()) {
    stage("artifacts", [&] {
      std::filesystem::create_directories(config.output_dir);
      const auto path = [&](const char* name) {
        return (std::filesystem::path(config.output_dir) / name).string();
      };
      std::vector<std::pair<std::string, std::string>> checksums;
      const auto put = [&](const char* name, const std::string& bytes) {
        write_file(path(name), bytes);
        checksums.emplace_back(name, sha256_hex(bytes));
      };

      if (simulated) {
        put("data.csv", dataset_to_csv(data));
        put("truth.csv", truth_to_csv(generated));
      }
      write_proximity(result.fused, path("proximity.bin"));
      checksums.emplace_back("proximity.bin", sha256_file(path("proximity.bin")));
      put("profile.json", profile_to_json(result.profile, data.schema(), result.p_star));
      put("profile.txt",
          render_profile_text(result.profile, data.schema(), result.p_star));
      put("diagnostics.csv", diagnostics_csv(result.candidates));
      put("leaf_effects.csv", effects_csv(result.profile.leaf_effects));

      // the calibration distribution when one was computed, otherwise the
      // per-k candidate values
      std::vector<double> ecdf_values = result.calibration.p_leaf_values;
      if (ecdf_values.empty())
        for (const auto& candidate : result.candidates)
          ecdf_values.push_back(candidate.test.p_leaf);
      if (!ecdf_values.empty()) put("ecdf.csv", ecdf_csv(ecdf_values));

      write_file(path("manifest.json"), manifest_json(config, checksums));
      return 0;
    });
  }

  return result;
}

}  // namespace drsf
