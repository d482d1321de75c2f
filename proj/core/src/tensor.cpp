#include "binecg/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace binecg {

namespace {

bool finite_range(std::span<const Real> values) {
  return std::all_of(values.begin(), values.end(), [](Real v) { return std::isfinite(v); });
}

}  // namespace

Tensor1D::Tensor1D(std::size_t channels, std::size_t length, Real fill)
    : channels_(channels), length_(length), data_(channels * length, fill) {
  if (channels == 0 || length == 0) {
    throw std::invalid_argument("Tensor1D: channels and length must be positive");
  }
}

Tensor1D::Tensor1D(std::size_t channels, std::size_t length, std::vector<Real> data)
    : channels_(channels), length_(length), data_(std::move(data)) {
  if (channels == 0 || length == 0) {
    throw std::invalid_argument("Tensor1D: channels and length must be positive");
  }
  if (data_.size() != channels * length) {
    throw std::invalid_argument("Tensor1D: data size does not match channels x length");
  }
}

bool Tensor1D::all_finite() const noexcept { return finite_range(data_); }

Batch::Batch(std::size_t batch, std::size_t channels, std::size_t length, Real fill)
    : batch_(batch), channels_(channels), length_(length), data_(batch * channels * length, fill) {}

Batch Batch::from_samples(std::span<const Tensor1D> samples) {
  if (samples.empty()) {
    throw std::invalid_argument("Batch: no samples");
  }
  Batch out(samples.size(), samples[0].channels(), samples[0].length());
  for (std::size_t n = 0; n < samples.size(); ++n) {
    if (samples[n].channels() != out.channels_ || samples[n].length() != out.length_) {
      throw std::invalid_argument("Batch: samples have differing shapes");
    }
    std::copy(samples[n].data().begin(), samples[n].data().end(), out.sample(n).begin());
  }
  return out;
}

Tensor1D Batch::to_tensor(std::size_t n) const {
  auto s = sample(n);
  return Tensor1D(channels_, length_, std::vector<Real>(s.begin(), s.end()));
}

Batch Batch::reshaped(std::size_t channels, std::size_t length) const {
  if (channels * length != sample_size()) {
    throw std::invalid_argument("Batch: reshape changes the sample size");
  }
  Batch out;
  out.batch_ = batch_;
  out.channels_ = channels;
  out.length_ = length;
  out.data_ = data_;
  return out;
}

bool Batch::all_finite() const noexcept { return finite_range(data_); }

}  // namespace binecg
