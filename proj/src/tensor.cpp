#include "spr/tensor.hpp"

#include <stdexcept>

namespace spr {

ComplexVolume::ComplexVolume(Shape3 s) : shape_(s), data_(s.size(), cplx(0.0, 0.0)) {
  if (!s.valid()) throw std::invalid_argument("ComplexVolume: shape must be positive");
}

ComplexVolume::ComplexVolume(Shape3 s, std::vector<cplx> data)
    : shape_(s), data_(std::move(data)) {
  if (!s.valid()) throw std::invalid_argument("ComplexVolume: shape must be positive");
  if (data_.size() != s.size())
    throw std::invalid_argument("ComplexVolume: data length does not match shape");
}

std::span<cplx> ComplexVolume::frame(int t) {
  return {data_.data() + static_cast<std::size_t>(t) * shape_.frame_size(),
          shape_.frame_size()};
}

std::span<const cplx> ComplexVolume::frame(int t) const {
  return {data_.data() + static_cast<std::size_t>(t) * shape_.frame_size(),
          shape_.frame_size()};
}

void ComplexVolume::fill(cplx v) {
  for (auto& d : data_) d = v;
}

void ComplexVolume::scale(double a) {
  for (auto& d : data_) d *= a;
}

void ComplexVolume::add_scaled(const ComplexVolume& other, double a) {
  if (shape_ != other.shape_) throw std::invalid_argument("add_scaled: shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += a * other.data_[i];
}

void ComplexVolume::add(const ComplexVolume& other) { add_scaled(other, 1.0); }

void ComplexVolume::sub(const ComplexVolume& other) { add_scaled(other, -1.0); }

RealVolume as_two_channel(const ComplexVolume& x) {
  RealVolume v(2, x.shape());
  auto re = v.channel(0);
  auto im = v.channel(1);
  auto src = x.flat();
  for (std::size_t i = 0; i < src.size(); ++i) {
    re[i] = src[i].real();
    im[i] = src[i].imag();
  }
  return v;
}

ComplexVolume from_two_channel(const RealVolume& v) {
  if (v.channels != 2)
    throw std::invalid_argument("from_two_channel: expected exactly 2 channels");
  ComplexVolume x(v.shape);
  auto re = v.channel(0);
  auto im = v.channel(1);
  auto dst = x.flat();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = cplx(re[i], im[i]);
  return x;
}

cplx inner(const ComplexVolume& x, const ComplexVolume& y) {
  if (x.shape() != y.shape()) throw std::invalid_argument("inner: shape mismatch");
  cplx acc(0.0, 0.0);
  auto xs = x.flat();
  auto ys = y.flat();
  for (std::size_t i = 0; i < xs.size(); ++i) acc += std::conj(xs[i]) * ys[i];
  return acc;
}

double norm2(const ComplexVolume& x) {
  double acc = 0.0;
  for (const auto& v : x.flat()) acc += v.real() * v.real() + v.imag() * v.imag();
  return acc;
}

double norm(const ComplexVolume& x) { return std::sqrt(norm2(x)); }

double real_inner(const ComplexVolume& x, const ComplexVolume& y) {
  if (x.shape() != y.shape()) throw std::invalid_argument("real_inner: shape mismatch");
  double acc = 0.0;
  auto xs = x.flat();
  auto ys = y.flat();
  for (std::size_t i = 0; i < xs.size(); ++i)
    acc += xs[i].real() * ys[i].real() + xs[i].imag() * ys[i].imag();
  return acc;
}

}  // namespace spr
