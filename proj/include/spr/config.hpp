#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "spr/autodiff.hpp"
#include "spr/baselines.hpp"
#include "spr/datasim.hpp"
#include "spr/solver.hpp"

namespace spr {

struct DataConfig {
  int nx = 32, ny = 32, nt = 8;
  int n_coils = 4;
  int spokes_per_frame = 3;
  double noise_sigma = 0.02;
  int n_train = 16, n_val = 4, n_test = 4;
  std::uint64_t seed = 1234;
  int n_ellipses = 5;
  double motion_amplitude = 0.3;

  DatasetSpec dataset_spec() const;
};

struct ModelSection {
  int n_filters = 16;     // "K"
  int kernel_side = 3;    // "k_f"
  int unroll_steps = 4;   // "T"
  int n_cg = 4;
  double smooth_b = 0.001;
  std::uint64_t init_seed = 42;

  NetworkConfig network_config() const;
};

struct PretrainSection {
  double sparsity_alpha = -1.0;  // negative = auto scale
  int outer_iters = 30;
  std::uint64_t seed = 99;
};

struct EvalSection {
  double roi_fraction = 0.5;
  bool export_images = false;
};

/// Full run configuration. Every field has a default; parsing rejects unknown
/// keys and out-of-range values with ConfigError.
struct RunConfig {
  DataConfig data;
  ModelSection model;
  TrainConfig train;
  PretrainSection pretrain;
  EvalSection eval;
};

RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);  // missing sections allowed
nlohmann::json to_json(const RunConfig& cfg);

/// FNV-1a digest of the canonical JSON dump, for run manifests.
std::string config_digest(const RunConfig& cfg);

}  // namespace spr
