#include "spr/config.hpp"

#include <cinttypes>
#include <cstdio>

#include "spr/errors.hpp"
#include "spr/serialize.hpp"

namespace spr {

DatasetSpec DataConfig::dataset_spec() const {
  DatasetSpec spec;
  spec.shape = Shape3{nx, ny, nt};
  spec.acq.n_coils = n_coils;
  spec.acq.spokes_per_frame = spokes_per_frame;
  spec.acq.noise_sigma = noise_sigma;
  spec.n_train = n_train;
  spec.n_val = n_val;
  spec.n_test = n_test;
  spec.seed = seed;
  spec.n_ellipses = n_ellipses;
  spec.motion_amplitude = motion_amplitude;
  return spec;
}

NetworkConfig ModelSection::network_config() const {
  NetworkConfig cfg;
  cfg.unroll_steps = unroll_steps;
  cfg.n_cg = n_cg;
  return cfg;
}

namespace {

class SectionReader {
 public:
  SectionReader(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected a JSON object");
  }

  template <typename T>
  void read(const char* key, T& target) {
    seen_.push_back(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      target = it->get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(path_ + "." + key + ": wrong type");
    }
  }

  const nlohmann::json* subsection(const char* key) {
    seen_.push_back(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      bool known = false;
      for (const auto& k : seen_)
        if (it.key() == k) known = true;
      if (!known) throw ConfigError(path_ + ": unknown key '" + it.key() + "'");
    }
  }

 private:
  const nlohmann::json& j_;
  std::string path_;
  std::vector<std::string> seen_;
};

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

}  // namespace

RunConfig parse_run_config(const nlohmann::json& j) {
  RunConfig cfg;
  SectionReader root(j, "config");

  if (const auto* sec = root.subsection("data")) {
    SectionReader r(*sec, "data");
    r.read("nx", cfg.data.nx);
    r.read("ny", cfg.data.ny);
    r.read("nt", cfg.data.nt);
    r.read("n_coils", cfg.data.n_coils);
    r.read("spokes_per_frame", cfg.data.spokes_per_frame);
    r.read("noise_sigma", cfg.data.noise_sigma);
    r.read("n_train", cfg.data.n_train);
    r.read("n_val", cfg.data.n_val);
    r.read("n_test", cfg.data.n_test);
    r.read("seed", cfg.data.seed);
    r.read("n_ellipses", cfg.data.n_ellipses);
    r.read("motion_amplitude", cfg.data.motion_amplitude);
    r.finish();
  }
  if (const auto* sec = root.subsection("model")) {
    SectionReader r(*sec, "model");
    r.read("K", cfg.model.n_filters);
    r.read("k_f", cfg.model.kernel_side);
    r.read("T", cfg.model.unroll_steps);
    r.read("n_cg", cfg.model.n_cg);
    r.read("smooth_b", cfg.model.smooth_b);
    r.read("init_seed", cfg.model.init_seed);
    r.finish();
  }
  if (const auto* sec = root.subsection("train")) {
    SectionReader r(*sec, "train");
    r.read("learning_rate", cfg.train.learning_rate);
    r.read("epochs", cfg.train.epochs);
    r.read("batch_size", cfg.train.batch_size);
    r.read("adam_beta1", cfg.train.adam_beta1);
    r.read("adam_beta2", cfg.train.adam_beta2);
    r.read("adam_eps", cfg.train.adam_eps);
    r.read("seed", cfg.train.seed);
    r.finish();
  }
  if (const auto* sec = root.subsection("pretrain")) {
    SectionReader r(*sec, "pretrain");
    r.read("sparsity_alpha", cfg.pretrain.sparsity_alpha);
    r.read("outer_iters", cfg.pretrain.outer_iters);
    r.read("seed", cfg.pretrain.seed);
    r.finish();
  }
  if (const auto* sec = root.subsection("eval")) {
    SectionReader r(*sec, "eval");
    r.read("roi_fraction", cfg.eval.roi_fraction);
    r.read("export_images", cfg.eval.export_images);
    r.finish();
  }
  root.finish();

  require(cfg.data.nx >= 4 && cfg.data.ny >= 4 && cfg.data.nt >= 1,
          "data: image shape too small");
  require(cfg.data.n_coils >= 1, "data.n_coils: must be >= 1");
  require(cfg.data.spokes_per_frame >= 1, "data.spokes_per_frame: must be >= 1");
  require(cfg.data.noise_sigma >= 0.0, "data.noise_sigma: must be >= 0");
  require(cfg.data.n_train >= 1 && cfg.data.n_val >= 0 && cfg.data.n_test >= 0,
          "data: invalid split sizes");
  require(cfg.data.n_ellipses >= 1, "data.n_ellipses: must be >= 1");
  require(cfg.data.motion_amplitude >= 0.0 && cfg.data.motion_amplitude <= 0.5,
          "data.motion_amplitude: must be in [0, 0.5]");
  require(cfg.model.n_filters >= 1, "model.K: must be >= 1");
  require(cfg.model.kernel_side >= 1 && cfg.model.kernel_side % 2 == 1,
          "model.k_f: must be odd and >= 1");
  require(cfg.model.unroll_steps >= 0, "model.T: must be >= 0");
  require(cfg.model.n_cg >= 1, "model.n_cg: must be >= 1");
  require(cfg.model.smooth_b > 0.0, "model.smooth_b: must be > 0");
  require(cfg.train.learning_rate >= 0.0, "train.learning_rate: must be >= 0");
  require(cfg.train.epochs >= 0, "train.epochs: must be >= 0");
  require(cfg.train.batch_size == 1, "train.batch_size: only 1 is supported");
  require(cfg.train.adam_beta1 >= 0.0 && cfg.train.adam_beta1 < 1.0,
          "train.adam_beta1: must be in [0, 1)");
  require(cfg.train.adam_beta2 >= 0.0 && cfg.train.adam_beta2 < 1.0,
          "train.adam_beta2: must be in [0, 1)");
  require(cfg.train.adam_eps > 0.0, "train.adam_eps: must be > 0");
  require(cfg.pretrain.outer_iters >= 1, "pretrain.outer_iters: must be >= 1");
  require(cfg.eval.roi_fraction > 0.0 && cfg.eval.roi_fraction <= 1.0,
          "eval.roi_fraction: must be in (0, 1]");
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = load_json(path);
  } catch (const MissingInputError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("cannot parse config " + path.string() + ": " + e.what());
  }
  return parse_run_config(j);
}

nlohmann::json to_json(const RunConfig& cfg) {
  nlohmann::json j;
  j["data"] = {{"nx", cfg.data.nx},
               {"ny", cfg.data.ny},
               {"nt", cfg.data.nt},
               {"n_coils", cfg.data.n_coils},
               {"spokes_per_frame", cfg.data.spokes_per_frame},
               {"noise_sigma", cfg.data.noise_sigma},
               {"n_train", cfg.data.n_train},
               {"n_val", cfg.data.n_val},
               {"n_test", cfg.data.n_test},
               {"seed", cfg.data.seed},
               {"n_ellipses", cfg.data.n_ellipses},
               {"motion_amplitude", cfg.data.motion_amplitude}};
  j["model"] = {{"K", cfg.model.n_filters},
                {"k_f", cfg.model.kernel_side},
                {"T", cfg.model.unroll_steps},
                {"n_cg", cfg.model.n_cg},
                {"smooth_b", cfg.model.smooth_b},
                {"init_seed", cfg.model.init_seed}};
  j["train"] = {{"learning_rate", cfg.train.learning_rate},
                {"epochs", cfg.train.epochs},
                {"batch_size", cfg.train.batch_size},
                {"adam_beta1", cfg.train.adam_beta1},
                {"adam_beta2", cfg.train.adam_beta2},
                {"adam_eps", cfg.train.adam_eps},
                {"seed", cfg.train.seed}};
  j["pretrain"] = {{"sparsity_alpha", cfg.pretrain.sparsity_alpha},
                   {"outer_iters", cfg.pretrain.outer_iters},
                   {"seed", cfg.pretrain.seed}};
  j["eval"] = {{"roi_fraction", cfg.eval.roi_fraction},
               {"export_images", cfg.eval.export_images}};
  return j;
}

std::string config_digest(const RunConfig& cfg) {
  const std::string text = to_json(cfg).dump();
  std::uint64_t hash = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ull;
  }
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, hash);
  return buf;
}

}  // namespace spr
