#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace spr {

using cplx = std::complex<double>;

/// Logical image extent: nx-by-ny pixels per frame, nt frames.
struct Shape3 {
  int nx = 0;
  int ny = 0;
  int nt = 0;

  bool operator==(const Shape3&) const = default;
  std::size_t frame_size() const { return static_cast<std::size_t>(nx) * ny; }
  std::size_t size() const { return frame_size() * nt; }
  bool valid() const { return nx > 0 && ny > 0 && nt > 0; }
};

/// Complex dynamic image. Storage is frame-major (t slowest, then x, y
/// fastest) so a frame is one contiguous row-major image and the file payload
/// matches memory byte for byte.
class ComplexVolume {
 public:
  ComplexVolume() = default;
  explicit ComplexVolume(Shape3 s);
  ComplexVolume(Shape3 s, std::vector<cplx> data);

  static ComplexVolume zeros(Shape3 s) { return ComplexVolume(s); }

  Shape3 shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }

  cplx& at(int x, int y, int t) { return data_[index(x, y, t)]; }
  const cplx& at(int x, int y, int t) const { return data_[index(x, y, t)]; }

  std::span<cplx> flat() { return data_; }
  std::span<const cplx> flat() const { return data_; }
  std::span<cplx> frame(int t);
  std::span<const cplx> frame(int t) const;

  // In-place arithmetic used by the solvers; all scalars real.
  void fill(cplx v);
  void scale(double a);
  void add_scaled(const ComplexVolume& other, double a);  // *this += a*other
  void add(const ComplexVolume& other);
  void sub(const ComplexVolume& other);

  bool operator==(const ComplexVolume&) const = default;

 private:
  std::size_t index(int x, int y, int t) const {
    return (static_cast<std::size_t>(t) * shape_.nx + x) * shape_.ny + y;
  }

  Shape3 shape_;
  std::vector<cplx> data_;
};

/// Real multi-channel volume; storage order (c, t, x, y). Channel count 2
/// holds the (real, imaginary) planes of a complex volume; channel count K
/// holds per-filter coefficient maps.
struct RealVolume {
  int channels = 0;
  Shape3 shape;
  std::vector<double> data;

  RealVolume() = default;
  RealVolume(int c, Shape3 s)
      : channels(c), shape(s), data(static_cast<std::size_t>(c) * s.size(), 0.0) {}

  std::span<double> channel(int c) {
    return {data.data() + static_cast<std::size_t>(c) * shape.size(), shape.size()};
  }
  std::span<const double> channel(int c) const {
    return {data.data() + static_cast<std::size_t>(c) * shape.size(), shape.size()};
  }

  bool operator==(const RealVolume&) const = default;
};

/// Channel 0 = Re(x), channel 1 = Im(x).
RealVolume as_two_channel(const ComplexVolume& x);
ComplexVolume from_two_channel(const RealVolume& v);

/// Sum of conj(x_i) * y_i. Throws std::invalid_argument on shape mismatch.
cplx inner(const ComplexVolume& x, const ComplexVolume& y);

double norm2(const ComplexVolume& x);  // squared L2 norm
double norm(const ComplexVolume& x);

/// Re(inner(x, y)); the pairing used by the reverse-mode pass.
double real_inner(const ComplexVolume& x, const ComplexVolume& y);

}  // namespace spr
