#include "kstrip/ctensor.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "kstrip/error.hpp"

namespace kstrip {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

void require_same_shape(const Shape& a, const Shape& b, const char* what) {
  if (a != b) {
    throw DimensionError(std::string(what) + ": shape mismatch " + shape_str(a) + " vs " +
                         shape_str(b));
  }
}

RealTensor::RealTensor(Shape s) : shape(std::move(s)), data(shape_numel(shape), 0.0) {}

RealTensor::RealTensor(Shape s, std::vector<double> values)
    : shape(std::move(s)), data(std::move(values)) {
  if (data.size() != shape_numel(shape)) {
    throw DimensionError("RealTensor: " + std::to_string(data.size()) +
                         " values for shape " + shape_str(shape));
  }
}

ComplexTensor::ComplexTensor(Shape shape)
    : shape_(std::move(shape)), re_(shape_numel(shape_), 0.0), im_(re_.size(), 0.0) {
  if (shape_.size() > 4) throw DimensionError("ComplexTensor: rank > 4 unsupported");
}

ComplexTensor::ComplexTensor(Shape shape, std::vector<double> re, std::vector<double> im)
    : shape_(std::move(shape)), re_(std::move(re)), im_(std::move(im)) {
  if (shape_.size() > 4) throw DimensionError("ComplexTensor: rank > 4 unsupported");
  const auto n = shape_numel(shape_);
  if (re_.size() != n || im_.size() != n) {
    throw DimensionError("ComplexTensor: plane size does not match shape " + shape_str(shape_));
  }
}

ComplexTensor ComplexTensor::full(Shape shape, std::complex<double> value) {
  ComplexTensor t(std::move(shape));
  t.fill(value);
  return t;
}

ComplexTensor ComplexTensor::from_real(const RealTensor& re) {
  return ComplexTensor(re.shape, re.data, std::vector<double>(re.size(), 0.0));
}

ComplexTensor ComplexTensor::reshaped(Shape shape) const {
  if (shape_numel(shape) != size()) {
    throw DimensionError("reshape: " + shape_str(shape_) + " -> " + shape_str(shape));
  }
  return ComplexTensor(std::move(shape), re_, im_);
}

void ComplexTensor::fill(std::complex<double> v) {
  std::fill(re_.begin(), re_.end(), v.real());
  std::fill(im_.begin(), im_.end(), v.imag());
}

void ComplexTensor::add_inplace(const ComplexTensor& other) {
  require_same_shape(shape_, other.shape_, "add_inplace");
  for (std::size_t i = 0; i < re_.size(); ++i) {
    re_[i] += other.re_[i];
    im_[i] += other.im_[i];
  }
}

bool ComplexTensor::all_finite() const {
  auto finite = [](double v) { return std::isfinite(v); };
  return std::all_of(re_.begin(), re_.end(), finite) && std::all_of(im_.begin(), im_.end(), finite);
}

ComplexTensor from_polar(const RealTensor& magnitude, const RealTensor& phase) {
  require_same_shape(magnitude.shape, phase.shape, "from_polar");
  ComplexTensor out(magnitude.shape);
  auto re = out.re();
  auto im = out.im();
  for (std::size_t i = 0; i < magnitude.size(); ++i) {
    re[i] = magnitude[i] * std::cos(phase[i]);
    im[i] = magnitude[i] * std::sin(phase[i]);
  }
  return out;
}

namespace {

template <typename Op>
ComplexTensor binary(const ComplexTensor& a, const ComplexTensor& b, const char* what, Op op) {
  require_same_shape(a.shape(), b.shape(), what);
  ComplexTensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out.set(i, op(a.at(i), b.at(i)));
  return out;
}

template <typename Op>
RealTensor to_real(const ComplexTensor& a, Op op) {
  RealTensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = op(a.re()[i], a.im()[i]);
  return out;
}

}  // namespace

ComplexTensor add(const ComplexTensor& a, const ComplexTensor& b) {
  return binary(a, b, "add", [](auto x, auto y) { return x + y; });
}

ComplexTensor sub(const ComplexTensor& a, const ComplexTensor& b) {
  return binary(a, b, "sub", [](auto x, auto y) { return x - y; });
}

ComplexTensor mul(const ComplexTensor& a, const ComplexTensor& b) {
  return binary(a, b, "mul", [](auto x, auto y) { return x * y; });
}

ComplexTensor scale(const ComplexTensor& a, double s) {
  ComplexTensor out = a;
  for (auto& v : out.re()) v *= s;
  for (auto& v : out.im()) v *= s;
  return out;
}

ComplexTensor conj(const ComplexTensor& a) {
  ComplexTensor out = a;
  for (auto& v : out.im()) v = -v;
  return out;
}

RealTensor abs(const ComplexTensor& a) {
  return to_real(a, [](double r, double i) { return std::hypot(r, i); });
}

RealTensor angle(const ComplexTensor& a) {
  return to_real(a, [](double r, double i) {
    double phi = std::atan2(i, r);
    // atan2 returns -pi for (negative, -0.0); fold onto the half-open range.
    return phi == -std::numbers::pi ? std::numbers::pi : phi;
  });
}

RealTensor log1p_abs(const ComplexTensor& a) {
  return to_real(a, [](double r, double i) { return std::log1p(std::hypot(r, i)); });
}

std::complex<double> sum(const ComplexTensor& a) {
  double sr = 0.0;
  double si = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sr += a.re()[i];
    si += a.im()[i];
  }
  return {sr, si};
}

std::complex<double> mean(const ComplexTensor& a) {
  if (a.empty()) return {0.0, 0.0};
  return sum(a) / static_cast<double>(a.size());
}

}  // namespace kstrip
