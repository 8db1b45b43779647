#include "spr/model.hpp"

#include <cmath>
#include <stdexcept>

#include "spr/threading.hpp"

namespace spr {

CoilMaps CoilMaps::uniform(int nx, int ny) {
  CoilMaps maps;
  maps.nc = 1;
  maps.nx = nx;
  maps.ny = ny;
  maps.data.assign(static_cast<std::size_t>(nx) * ny, cplx(1.0, 0.0));
  return maps;
}

std::size_t MeasuredData::total_samples() const {
  std::size_t n = 0;
  for (const auto& v : data) n += v.size();
  return n;
}

void MeasuredData::add_scaled(const MeasuredData& other, double a) {
  if (data.size() != other.data.size())
    throw std::invalid_argument("MeasuredData::add_scaled: layout mismatch");
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data[i].size() != other.data[i].size())
      throw std::invalid_argument("MeasuredData::add_scaled: layout mismatch");
    for (std::size_t s = 0; s < data[i].size(); ++s) data[i][s] += a * other.data[i][s];
  }
}

void MeasuredData::scale(double a) {
  for (auto& v : data)
    for (auto& s : v) s *= a;
}

cplx inner(const MeasuredData& a, const MeasuredData& b) {
  if (a.data.size() != b.data.size())
    throw std::invalid_argument("MeasuredData inner: layout mismatch");
  cplx acc(0.0, 0.0);
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    if (a.data[i].size() != b.data[i].size())
      throw std::invalid_argument("MeasuredData inner: layout mismatch");
    for (std::size_t s = 0; s < a.data[i].size(); ++s)
      acc += std::conj(a.data[i][s]) * b.data[i][s];
  }
  return acc;
}

double norm2(const MeasuredData& a) {
  double acc = 0.0;
  for (const auto& v : a.data)
    for (const auto& s : v) acc += s.real() * s.real() + s.imag() * s.imag();
  return acc;
}

ComplexVolume AcquisitionModel::normal(const ComplexVolume& x, double lambda) const {
  if (lambda < 0.0) throw std::invalid_argument("normal: lambda must be >= 0");
  ComplexVolume out = pseudo_inverse(forward(x));
  out.add_scaled(x, lambda);
  return out;
}

// ---------------------------------------------------------------------------
// ForwardModel

ForwardModel::ForwardModel(CoilMaps coils, Trajectory traj, DensityWeights weights,
                           Shape3 shape)
    : ForwardModel(std::move(coils), std::move(traj), std::move(weights), shape, nullptr) {}

ForwardModel::ForwardModel(CoilMaps coils, Trajectory traj, DensityWeights weights,
                           Shape3 shape, std::shared_ptr<const PlanSet> plans)
    : coils_(std::move(coils)),
      traj_(std::move(traj)),
      weights_(std::move(weights)),
      shape_(shape),
      plans_(std::move(plans)) {
  if (!plans_) plans_ = build_plans(traj_, shape_);
  validate();
}

std::shared_ptr<const ForwardModel::PlanSet> ForwardModel::build_plans(
    const Trajectory& traj, Shape3 shape) {
  auto plans = std::make_shared<PlanSet>();
  plans->reserve(traj.frames.size());
  for (const auto& frame : traj.frames)
    plans->emplace_back(frame, shape.nx, shape.ny);
  return plans;
}

void ForwardModel::validate() const {
  if (!shape_.valid()) throw std::invalid_argument("ForwardModel: invalid shape");
  if (coils_.nx != shape_.nx || coils_.ny != shape_.ny)
    throw std::invalid_argument("ForwardModel: coil map extent mismatch");
  if (coils_.nc < 1) throw std::invalid_argument("ForwardModel: need at least one coil");
  if (traj_.n_frames() != shape_.nt)
    throw std::invalid_argument("ForwardModel: trajectory frame count mismatch");
  if (weights_.frames.size() != traj_.frames.size())
    throw std::invalid_argument("ForwardModel: weights frame count mismatch");
  if (plans_->size() != traj_.frames.size())
    throw std::invalid_argument("ForwardModel: plan frame count mismatch");
  for (int t = 0; t < traj_.n_frames(); ++t) {
    if (weights_.frames[t].size() != traj_.frames[t].size())
      throw std::invalid_argument("ForwardModel: weights sample count mismatch");
    if ((*plans_)[t].n_samples() != traj_.samples_per_frame(t) ||
        (*plans_)[t].nx() != shape_.nx || (*plans_)[t].ny() != shape_.ny)
      throw std::invalid_argument("ForwardModel: plan does not match trajectory");
  }
}

MeasuredData ForwardModel::forward(const ComplexVolume& x) const {
  if (x.shape() != shape_) throw std::invalid_argument("forward: image shape mismatch");
  const int nc = coils_.nc;
  const int nt = shape_.nt;
  MeasuredData y(nc, nt);
  parallel_for(nc * nt, [&](int task) {
    const int j = task / nt;
    const int t = task % nt;
    const auto cmap = coils_.map(j);
    const auto frame = x.frame(t);
    std::vector<cplx> weighted(frame.size());
    for (std::size_t p = 0; p < frame.size(); ++p) weighted[p] = cmap[p] * frame[p];
    y.at(j, t) = (*plans_)[t].forward(weighted);
  });
  return y;
}

ComplexVolume ForwardModel::adjoint_scaled(const MeasuredData& y, bool apply_sqrt_w) const {
  if (y.n_coils != coils_.nc || y.n_frames != shape_.nt)
    throw std::invalid_argument("adjoint: data layout mismatch");
  const int nc = coils_.nc;
  const int nt = shape_.nt;
  ComplexVolume out(shape_);
  // Frames are independent; coils are accumulated in fixed order inside each
  // frame task so the result does not depend on the thread count.
  parallel_for(nt, [&](int t) {
    if (y.at(0, t).size() != static_cast<std::size_t>(traj_.samples_per_frame(t)))
      throw std::invalid_argument("adjoint: sample count mismatch");
    auto dst = out.frame(t);
    std::vector<cplx> samples;
    for (int j = 0; j < nc; ++j) {
      const auto& src = y.at(j, t);
      if (src.size() != static_cast<std::size_t>(traj_.samples_per_frame(t)))
        throw std::invalid_argument("adjoint: sample count mismatch");
      if (apply_sqrt_w) {
        samples.resize(src.size());
        const auto& w = weights_.frames[t];
        for (std::size_t i = 0; i < src.size(); ++i)
          samples[i] = src[i] * std::sqrt(w[i]);
      } else {
        samples.assign(src.begin(), src.end());
      }
      const std::vector<cplx> img = (*plans_)[t].adjoint(samples);
      const auto cmap = coils_.map(j);
      for (std::size_t p = 0; p < dst.size(); ++p) dst[p] += std::conj(cmap[p]) * img[p];
    }
  });
  return out;
}

ComplexVolume ForwardModel::adjoint(const MeasuredData& y) const {
  return adjoint_scaled(y, false);
}

ComplexVolume ForwardModel::pseudo_inverse(const MeasuredData& y) const {
  return adjoint_scaled(y, true);
}

double ForwardModel::weighted_norm2(const MeasuredData& v) const {
  if (v.n_coils != coils_.nc || v.n_frames != shape_.nt)
    throw std::invalid_argument("weighted_norm2: data layout mismatch");
  double acc = 0.0;
  for (int j = 0; j < v.n_coils; ++j)
    for (int t = 0; t < v.n_frames; ++t) {
      const auto& samples = v.at(j, t);
      const auto& w = weights_.frames[t];
      for (std::size_t i = 0; i < samples.size(); ++i)
        acc += std::sqrt(w[i]) * std::norm(samples[i]);
    }
  return acc;
}

// ---------------------------------------------------------------------------
// CartesianMaskedModel

CartesianMaskedModel::CartesianMaskedModel(std::vector<std::uint8_t> mask, Shape3 shape,
                                           CoilMaps coils)
    : mask_(std::move(mask)), shape_(shape), coils_(std::move(coils)) {
  if (!shape_.valid()) throw std::invalid_argument("CartesianMaskedModel: invalid shape");
  if (mask_.size() != shape_.size())
    throw std::invalid_argument("CartesianMaskedModel: mask size mismatch");
  if (coils_.nx != shape_.nx || coils_.ny != shape_.ny || coils_.nc < 1)
    throw std::invalid_argument("CartesianMaskedModel: coil map mismatch");
  frame_sample_count_.resize(shape_.nt, 0);
  for (int t = 0; t < shape_.nt; ++t) {
    const std::uint8_t* m = mask_.data() + static_cast<std::size_t>(t) * shape_.frame_size();
    for (std::size_t p = 0; p < shape_.frame_size(); ++p)
      if (m[p]) ++frame_sample_count_[t];
  }
}

CartesianMaskedModel CartesianMaskedModel::full(Shape3 shape, int n_coils) {
  std::vector<std::uint8_t> mask(shape.size(), 1);
  CoilMaps coils = CoilMaps::uniform(shape.nx, shape.ny);
  if (n_coils != 1) throw std::invalid_argument("full: pass explicit maps for multi-coil");
  return CartesianMaskedModel(std::move(mask), shape, std::move(coils));
}

MeasuredData CartesianMaskedModel::forward(const ComplexVolume& x) const {
  if (x.shape() != shape_) throw std::invalid_argument("forward: image shape mismatch");
  const int nc = coils_.nc;
  const int nt = shape_.nt;
  MeasuredData y(nc, nt);
  parallel_for(nc * nt, [&](int task) {
    const int j = task / nt;
    const int t = task % nt;
    const auto cmap = coils_.map(j);
    const auto frame = x.frame(t);
    std::vector<cplx> weighted(frame.size());
    for (std::size_t p = 0; p < frame.size(); ++p) weighted[p] = cmap[p] * frame[p];
    const std::vector<cplx> spec = centered_dft_2d(weighted, shape_.nx, shape_.ny, -1);
    const std::uint8_t* m = mask_.data() + static_cast<std::size_t>(t) * shape_.frame_size();
    auto& out = y.at(j, t);
    out.reserve(frame_sample_count_[t]);
    for (std::size_t p = 0; p < spec.size(); ++p)
      if (m[p]) out.push_back(spec[p]);
  });
  return y;
}

ComplexVolume CartesianMaskedModel::adjoint(const MeasuredData& y) const {
  if (y.n_coils != coils_.nc || y.n_frames != shape_.nt)
    throw std::invalid_argument("adjoint: data layout mismatch");
  const int nc = coils_.nc;
  const int nt = shape_.nt;
  ComplexVolume out(shape_);
  parallel_for(nt, [&](int t) {
    auto dst = out.frame(t);
    const std::uint8_t* m = mask_.data() + static_cast<std::size_t>(t) * shape_.frame_size();
    for (int j = 0; j < nc; ++j) {
      const auto& src = y.at(j, t);
      if (src.size() != static_cast<std::size_t>(frame_sample_count_[t]))
        throw std::invalid_argument("adjoint: sample count mismatch");
      std::vector<cplx> spec(shape_.frame_size(), cplx(0.0, 0.0));
      std::size_t s = 0;
      for (std::size_t p = 0; p < spec.size(); ++p)
        if (m[p]) spec[p] = src[s++];
      const std::vector<cplx> img = centered_dft_2d(spec, shape_.nx, shape_.ny, 1);
      const auto cmap = coils_.map(j);
      for (std::size_t p = 0; p < dst.size(); ++p) dst[p] += std::conj(cmap[p]) * img[p];
    }
  });
  return out;
}

}  // namespace spr
