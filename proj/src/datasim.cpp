#include "spr/datasim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "spr/errors.hpp"
#include "spr/rng.hpp"
#include "spr/serialize.hpp"

namespace spr {

namespace fs = std::filesystem;

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

struct Ellipse {
  double cx, cy;       // center, pixels
  double a, b;         // semi-axes, pixels
  double cos_t, sin_t; // orientation
  cplx amp;
};

bool inside(const Ellipse& e, double x, double y, double scale) {
  const double dx = x - e.cx;
  const double dy = y - e.cy;
  const double u = (e.cos_t * dx + e.sin_t * dy) / (e.a * scale);
  const double v = (-e.sin_t * dx + e.cos_t * dy) / (e.b * scale);
  return u * u + v * v <= 1.0;
}

}  // namespace

ComplexVolume make_cine_phantom(const PhantomSpec& spec) {
  const Shape3 s = spec.shape;
  if (!s.valid() || s.nx < 4 || s.ny < 4)
    throw std::invalid_argument("make_cine_phantom: degenerate shape");
  if (spec.n_ellipses < 1)
    throw std::invalid_argument("make_cine_phantom: need at least one ellipse");
  if (spec.motion_amplitude < 0.0 || spec.motion_amplitude > 0.5)
    throw std::invalid_argument("make_cine_phantom: motion amplitude outside [0, 0.5]");

  Rng rng(spec.seed);
  const double nx = s.nx, ny = s.ny;
  auto draw_amp = [&](double lo, double hi) {
    const double mag = rng.uniform(lo, hi);
    const double ph = rng.uniform(-kPi, kPi);
    return cplx(mag * std::cos(ph), mag * std::sin(ph));
  };
  auto draw_angle = [&]() {
    const double t = rng.uniform(0.0, kPi);
    return std::pair<double, double>{std::cos(t), std::sin(t)};
  };

  // Body, then the ventricle, then the clutter ellipses.
  Ellipse body;
  body.cx = nx / 2.0;
  body.cy = ny / 2.0;
  body.a = 0.45 * nx;
  body.b = 0.42 * ny;
  body.cos_t = 1.0;
  body.sin_t = 0.0;
  body.amp = draw_amp(0.2, 0.4);

  Ellipse ventricle;
  ventricle.cx = rng.uniform(0.40, 0.60) * nx;
  ventricle.cy = rng.uniform(0.40, 0.60) * ny;
  ventricle.a = rng.uniform(0.12, 0.20) * nx;
  ventricle.b = rng.uniform(0.12, 0.20) * ny;
  std::tie(ventricle.cos_t, ventricle.sin_t) = draw_angle();
  ventricle.amp = draw_amp(0.6, spec.intensity_max);

  std::vector<Ellipse> clutter;
  for (int i = 0; i < spec.n_ellipses; ++i) {
    Ellipse e;
    e.cx = rng.uniform(0.2, 0.8) * nx;
    e.cy = rng.uniform(0.2, 0.8) * ny;
    e.a = rng.uniform(0.06, 0.18) * nx;
    e.b = rng.uniform(0.06, 0.18) * ny;
    std::tie(e.cos_t, e.sin_t) = draw_angle();
    e.amp = draw_amp(spec.intensity_min, spec.intensity_max);
    clutter.push_back(e);
  }

  // Cosine-phase breathing, tabulated symmetrically so frames t and nt-t get
  // bit-identical scales.
  std::vector<double> vent_scale(s.nt);
  for (int t = 0; t < s.nt; ++t) {
    const int sym = std::min(t, s.nt - t);
    const double c = std::cos(2.0 * kPi * static_cast<double>(sym) / s.nt);
    vent_scale[t] = 1.0 - 0.5 * spec.motion_amplitude * (1.0 - c);
  }

  ComplexVolume vol(s);
  double max_mag = 0.0;
  for (int t = 0; t < s.nt; ++t) {
    auto frame = vol.frame(t);
    for (int x = 0; x < s.nx; ++x)
      for (int y = 0; y < s.ny; ++y) {
        cplx v(0.0, 0.0);
        const double px = x + 0.5;
        const double py = y + 0.5;
        if (inside(body, px, py, 1.0)) v += body.amp;
        if (inside(ventricle, px, py, vent_scale[t])) v += ventricle.amp;
        for (const auto& e : clutter)
          if (inside(e, px, py, 1.0)) v += e.amp;
        frame[static_cast<std::size_t>(x) * s.ny + y] = v;
        max_mag = std::max(max_mag, std::abs(v));
      }
  }
  if (max_mag == 0.0) throw std::runtime_error("make_cine_phantom: empty phantom");
  vol.scale(1.0 / max_mag);
  return vol;
}

CoilMaps make_coil_maps(int nx, int ny, int nc, std::uint64_t seed) {
  if (nc < 1) throw std::invalid_argument("make_coil_maps: need at least one coil");
  if (nx < 2 || ny < 2) throw std::invalid_argument("make_coil_maps: grid too small");

  Rng rng(seed);
  CoilMaps maps;
  maps.nc = nc;
  maps.nx = nx;
  maps.ny = ny;
  maps.data.assign(static_cast<std::size_t>(nc) * nx * ny, cplx(0.0, 0.0));

  const double ring = 0.45 * std::min(nx, ny);
  const double sigma = 0.40 * std::max(nx, ny);
  for (int j = 0; j < nc; ++j) {
    const double angle = 2.0 * kPi * j / nc + rng.uniform(-0.1, 0.1);
    const double cx = nx / 2.0 + ring * std::cos(angle);
    const double cy = ny / 2.0 + ring * std::sin(angle);
    const double ax = rng.uniform(-0.3, 0.3);
    const double ay = rng.uniform(-0.3, 0.3);
    const double ph0 = rng.uniform(-kPi, kPi);
    auto map = maps.map(j);
    for (int x = 0; x < nx; ++x)
      for (int y = 0; y < ny; ++y) {
        const double dx = x + 0.5 - cx;
        const double dy = y + 0.5 - cy;
        const double mag = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
        const double ph = ph0 + 2.0 * kPi * (ax * (x - nx / 2) / nx + ay * (y - ny / 2) / ny);
        map[static_cast<std::size_t>(x) * ny + y] =
            cplx(mag * std::cos(ph), mag * std::sin(ph));
      }
  }

  // Sum-of-squares normalization.
  const std::size_t frame = static_cast<std::size_t>(nx) * ny;
  for (std::size_t p = 0; p < frame; ++p) {
    double ss = 0.0;
    for (int j = 0; j < nc; ++j) ss += std::norm(maps.data[j * frame + p]);
    const double inv = 1.0 / std::sqrt(ss);
    for (int j = 0; j < nc; ++j) maps.data[j * frame + p] *= inv;
  }
  return maps;
}

MeasuredData simulate_kspace(const ComplexVolume& x, const AcquisitionModel& m,
                             double sigma, std::uint64_t seed) {
  if (sigma < 0.0) throw std::invalid_argument("simulate_kspace: sigma must be >= 0");
  MeasuredData y = m.forward(x);
  if (sigma == 0.0) return y;
  Rng rng(seed);
  for (int j = 0; j < y.n_coils; ++j)
    for (int t = 0; t < y.n_frames; ++t)
      for (auto& v : y.at(j, t))
        v += cplx(sigma * rng.normal(), sigma * rng.normal());
  return y;
}

namespace {

nlohmann::json record_manifest(const std::string& id, const std::string& split,
                               const DatasetSpec& spec, const Trajectory& traj,
                               std::uint64_t record_seed) {
  nlohmann::json m;
  m["record_id"] = id;
  m["split"] = split;
  m["nx"] = spec.shape.nx;
  m["ny"] = spec.shape.ny;
  m["nt"] = spec.shape.nt;
  m["n_coils"] = spec.acq.n_coils;
  m["n_frames"] = spec.shape.nt;
  m["spokes_per_frame"] = spec.acq.spokes_per_frame;
  m["readout"] = traj.readout;
  m["noise_sigma"] = spec.acq.noise_sigma;
  m["seed"] = record_seed;
  m["n_ellipses"] = spec.n_ellipses;
  m["motion_amplitude"] = spec.motion_amplitude;
  m["acceleration"] = acceleration_factor(spec.shape.nx, spec.acq.spokes_per_frame);
  return m;
}

void save_measured(const fs::path& path, const MeasuredData& y) {
  std::size_t per_frame = y.data.empty() ? 0 : y.data.front().size();
  std::vector<cplx> flat;
  flat.reserve(y.total_samples());
  for (const auto& v : y.data) {
    if (v.size() != per_frame)
      throw std::runtime_error("save_measured: ragged sample counts");
    flat.insert(flat.end(), v.begin(), v.end());
  }
  const std::int64_t shape[3] = {y.n_coils, y.n_frames,
                                 static_cast<std::int64_t>(per_frame)};
  save_spt_c128(path, shape, flat);
}

MeasuredData load_measured(const fs::path& path) {
  Spt t = load_spt(path);
  if (t.dtype != "c128" || t.shape.size() != 3)
    throw std::runtime_error("expected a c128 rank-3 tensor in " + path.string());
  MeasuredData y(static_cast<int>(t.shape[0]), static_cast<int>(t.shape[1]));
  const std::size_t per_frame = static_cast<std::size_t>(t.shape[2]);
  std::size_t off = 0;
  for (auto& v : y.data) {
    v.assign(t.c128.begin() + off, t.c128.begin() + off + per_frame);
    off += per_frame;
  }
  return y;
}

}  // namespace

// Seed layout: one base seed per record, derived sub-streams for the coil
// maps and the noise; the phantom uses the base seed itself.
std::uint64_t coil_seed(std::uint64_t record_seed) { return record_seed + 7919; }
std::uint64_t noise_seed(std::uint64_t record_seed) { return record_seed + 104729; }

void make_dataset(const DatasetSpec& spec, const fs::path& out_dir, bool overwrite) {
  if (spec.n_train < 1 || spec.n_val < 0 || spec.n_test < 0)
    throw std::invalid_argument("make_dataset: invalid split sizes");
  if (fs::exists(out_dir)) {
    if (!overwrite)
      throw std::runtime_error("make_dataset: output exists, pass overwrite to replace: " +
                               out_dir.string());
    fs::remove_all(out_dir);
  }
  fs::create_directories(out_dir);

  const Trajectory traj =
      golden_angle_trajectory(spec.shape.nx, spec.shape.nt, spec.acq.spokes_per_frame);
  const DensityWeights weights = ramp_density_weights(traj);
  const auto plans = ForwardModel::build_plans(traj, spec.shape);

  const struct {
    const char* name;
    int count;
    std::uint64_t offset;
  } splits[] = {{"train", spec.n_train, 10000},
                {"val", spec.n_val, 20000},
                {"test", spec.n_test, 30000}};

  nlohmann::json top;
  top["seed"] = spec.seed;
  top["nx"] = spec.shape.nx;
  top["ny"] = spec.shape.ny;
  top["nt"] = spec.shape.nt;
  top["n_coils"] = spec.acq.n_coils;
  top["spokes_per_frame"] = spec.acq.spokes_per_frame;
  top["readout"] = traj.readout;
  top["noise_sigma"] = spec.acq.noise_sigma;
  top["n_ellipses"] = spec.n_ellipses;
  top["motion_amplitude"] = spec.motion_amplitude;
  top["acceleration"] = acceleration_factor(spec.shape.nx, spec.acq.spokes_per_frame);

  for (const auto& split : splits) {
    const fs::path split_dir = out_dir / split.name;
    fs::create_directories(split_dir);
    top["counts"][split.name] = split.count;
    for (int i = 0; i < split.count; ++i) {
      const std::uint64_t record_seed = spec.seed + split.offset + static_cast<std::uint64_t>(i);
      char id[16];
      std::snprintf(id, sizeof(id), "rec_%04d", i);

      PhantomSpec ph;
      ph.shape = spec.shape;
      ph.seed = record_seed;
      ph.n_ellipses = spec.n_ellipses;
      ph.motion_amplitude = spec.motion_amplitude;
      const ComplexVolume x_f = make_cine_phantom(ph);
      const CoilMaps coils = make_coil_maps(spec.shape.nx, spec.shape.ny,
                                            spec.acq.n_coils, coil_seed(record_seed));
      const ForwardModel model(coils, traj, weights, spec.shape, plans);
      const MeasuredData y =
          simulate_kspace(x_f, model, spec.acq.noise_sigma, noise_seed(record_seed));

      // Stage the record directory, then rename it into place.
      const fs::path final_dir = split_dir / id;
      fs::path tmp_dir = split_dir / (std::string(id) + ".staging");
      fs::create_directories(tmp_dir);
      save_volume(tmp_dir / "x_f.spt", x_f);
      save_measured(tmp_dir / "y.spt", y);
      save_json(tmp_dir / "manifest.json",
                record_manifest(id, split.name, spec, traj, record_seed));
      fs::rename(tmp_dir, final_dir);
    }
  }
  save_json(out_dir / "dataset.json", top);
}

std::vector<fs::path> list_records(const fs::path& split_dir) {
  if (!fs::is_directory(split_dir))
    throw MissingInputError("not a dataset directory: " + split_dir.string());
  std::vector<fs::path> records;
  for (const auto& entry : fs::directory_iterator(split_dir))
    if (entry.is_directory() && entry.path().filename().string().starts_with("rec_"))
      records.push_back(entry.path());
  std::sort(records.begin(), records.end());
  return records;
}

DatasetRecord load_record(const fs::path& record_dir) {
  DatasetRecord rec;
  rec.manifest = load_json(record_dir / "manifest.json");
  rec.id = rec.manifest.at("record_id").get<std::string>();
  rec.x_f = load_volume(record_dir / "x_f.spt");
  rec.y = load_measured(record_dir / "y.spt");
  return rec;
}

std::shared_ptr<const ForwardModel> ModelFactory::from_manifest(
    const nlohmann::json& manifest) {
  const Shape3 shape{manifest.at("nx").get<int>(), manifest.at("ny").get<int>(),
                     manifest.at("nt").get<int>()};
  const int spokes = manifest.at("spokes_per_frame").get<int>();
  const Key key{shape.nx, shape.ny, shape.nt, spokes};
  auto it = plan_cache_.find(key);
  Trajectory traj = golden_angle_trajectory(shape.nx, shape.nt, spokes);
  if (it == plan_cache_.end())
    it = plan_cache_.emplace(key, ForwardModel::build_plans(traj, shape)).first;
  DensityWeights weights = ramp_density_weights(traj);
  const CoilMaps coils =
      make_coil_maps(shape.nx, shape.ny, manifest.at("n_coils").get<int>(),
                     coil_seed(manifest.at("seed").get<std::uint64_t>()));
  return std::make_shared<ForwardModel>(coils, std::move(traj), std::move(weights), shape,
                                        it->second);
}

}  // namespace spr
