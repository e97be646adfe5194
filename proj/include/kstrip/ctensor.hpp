#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace kstrip {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

// Dense real array, row-major. Used for magnitudes, phases and masks in
// double precision.
struct RealTensor {
  Shape shape;
  std::vector<double> data;

  RealTensor() = default;
  explicit RealTensor(Shape s);
  RealTensor(Shape s, std::vector<double> values);

  std::size_t size() const { return data.size(); }
  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }
};

// Dense complex array stored as two real planes of identical layout.
// Rank is at most 4; the trailing two dimensions are spatial.
class ComplexTensor {
 public:
  ComplexTensor() = default;
  explicit ComplexTensor(Shape shape);
  ComplexTensor(Shape shape, std::vector<double> re, std::vector<double> im);

  static ComplexTensor zeros(Shape shape) { return ComplexTensor(std::move(shape)); }
  static ComplexTensor zeros_like(const ComplexTensor& t) { return ComplexTensor(t.shape()); }
  static ComplexTensor full(Shape shape, std::complex<double> value);
  static ComplexTensor from_real(const RealTensor& re);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return re_.size(); }
  bool empty() const { return re_.empty(); }

  std::span<double> re() { return re_; }
  std::span<const double> re() const { return re_; }
  std::span<double> im() { return im_; }
  std::span<const double> im() const { return im_; }

  std::complex<double> at(std::size_t flat) const { return {re_[flat], im_[flat]}; }
  void set(std::size_t flat, std::complex<double> v) {
    re_[flat] = v.real();
    im_[flat] = v.imag();
  }

  // Same data, new shape with equal element count.
  ComplexTensor reshaped(Shape shape) const;

  void fill(std::complex<double> v);
  void add_inplace(const ComplexTensor& other);
  bool all_finite() const;

  friend bool operator==(const ComplexTensor& a, const ComplexTensor& b) {
    return a.shape_ == b.shape_ && a.re_ == b.re_ && a.im_ == b.im_;
  }

 private:
  Shape shape_;
  std::vector<double> re_;
  std::vector<double> im_;
};

void require_same_shape(const Shape& a, const Shape& b, const char* what);

// Elementwise construction from polar form: r * exp(i * phi).
ComplexTensor from_polar(const RealTensor& magnitude, const RealTensor& phase);

ComplexTensor add(const ComplexTensor& a, const ComplexTensor& b);
ComplexTensor sub(const ComplexTensor& a, const ComplexTensor& b);
ComplexTensor mul(const ComplexTensor& a, const ComplexTensor& b);
ComplexTensor scale(const ComplexTensor& a, double s);
ComplexTensor conj(const ComplexTensor& a);
RealTensor abs(const ComplexTensor& a);
// Principal argument in (-pi, pi].
RealTensor angle(const ComplexTensor& a);
RealTensor log1p_abs(const ComplexTensor& a);
std::complex<double> sum(const ComplexTensor& a);
std::complex<double> mean(const ComplexTensor& a);

// Two-dimensional DFT over the trailing two axes, batched over the leading
// ones. Forward is unnormalized, inverse carries 1/(H*W). Both trailing
// dimensions must be powers of two.
ComplexTensor fft2(const ComplexTensor& t);
ComplexTensor ifft2(const ComplexTensor& t);

// Circular shift of the trailing two axes by floor(H/2), floor(W/2) and its
// inverse. Valid for any size.
ComplexTensor fftshift(const ComplexTensor& t);
ComplexTensor ifftshift(const ComplexTensor& t);

bool is_power_of_two(std::size_t n);

}  // namespace kstrip
