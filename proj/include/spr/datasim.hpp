#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "spr/model.hpp"
#include "spr/tensor.hpp"

namespace spr {

struct PhantomSpec {
  Shape3 shape;
  std::uint64_t seed = 0;
  int n_ellipses = 5;              // random ellipses on top of body + ventricle
  double motion_amplitude = 0.3;   // fraction of the ventricle radius, in [0, 0.5]
  double intensity_min = 0.3;
  double intensity_max = 1.0;
};

/// Seeded dynamic ellipse phantom. One designated "ventricle" ellipse
/// breathes sinusoidally with one period across the frames (cosine phase, so
/// frame t and frame nt-t match exactly); everything else is static. Values
/// are piecewise constant per frame with the maximum magnitude normalized
/// to 1.
ComplexVolume make_cine_phantom(const PhantomSpec& spec);

/// Smooth complex Gaussian-bump coil profiles at equally spaced angles with
/// seeded jitter and gentle linear phases, normalized pixel-wise so that
/// sum_j |c_j|^2 = 1 everywhere.
CoilMaps make_coil_maps(int nx, int ny, int nc, std::uint64_t seed);

/// y = A x + e with e i.i.d. Gaussian of standard deviation sigma on the real
/// and imaginary parts independently, drawn in (coil, frame, sample) order.
MeasuredData simulate_kspace(const ComplexVolume& x, const AcquisitionModel& m,
                             double sigma, std::uint64_t seed);

/// Sub-stream seeds derived from a record's base seed; the phantom uses the
/// base seed itself.
std::uint64_t coil_seed(std::uint64_t record_seed);
std::uint64_t noise_seed(std::uint64_t record_seed);

struct AcquisitionParams {
  int n_coils = 4;
  int spokes_per_frame = 3;
  double noise_sigma = 0.02;
};

struct DatasetSpec {
  Shape3 shape{32, 32, 8};
  AcquisitionParams acq;
  int n_train = 16;
  int n_val = 4;
  int n_test = 4;
  std::uint64_t seed = 1234;
  int n_ellipses = 5;
  double motion_amplitude = 0.3;
};

/// Writes dataset/{train,val,test}/rec_####/{x_f.spt, y.spt, manifest.json}
/// plus a top-level dataset.json. Record directories are staged and renamed
/// so partially written records never appear. Refuses to overwrite an
/// existing directory unless asked.
void make_dataset(const DatasetSpec& spec, const std::filesystem::path& out_dir,
                  bool overwrite = false);

struct DatasetRecord {
  std::string id;
  ComplexVolume x_f;
  MeasuredData y;
  nlohmann::json manifest;
};

std::vector<std::filesystem::path> list_records(const std::filesystem::path& split_dir);
DatasetRecord load_record(const std::filesystem::path& record_dir);

/// Rebuilds acquisition models from record manifests, sharing NDFT plans
/// between records with identical trajectories.
class ModelFactory {
 public:
  std::shared_ptr<const ForwardModel> from_manifest(const nlohmann::json& manifest);

 private:
  struct Key {
    int nx, ny, nt, spokes;
    auto operator<=>(const Key&) const = default;
  };
  std::map<Key, std::shared_ptr<const ForwardModel::PlanSet>> plan_cache_;
};

}  // namespace spr
