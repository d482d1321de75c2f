#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace binecg {

using Real = double;

/// Dense (channels x length) real tensor, row-major by channel.
class Tensor1D {
 public:
  Tensor1D() = default;
  Tensor1D(std::size_t channels, std::size_t length, Real fill = 0.0);
  Tensor1D(std::size_t channels, std::size_t length, std::vector<Real> data);

  std::size_t channels() const noexcept { return channels_; }
  std::size_t length() const noexcept { return length_; }
  std::size_t size() const noexcept { return data_.size(); }

  Real& operator()(std::size_t c, std::size_t i) { return data_[c * length_ + i]; }
  Real operator()(std::size_t c, std::size_t i) const { return data_[c * length_ + i]; }

  std::span<Real> row(std::size_t c) { return {data_.data() + c * length_, length_}; }
  std::span<const Real> row(std::size_t c) const { return {data_.data() + c * length_, length_}; }

  std::span<Real> data() noexcept { return data_; }
  std::span<const Real> data() const noexcept { return data_; }

  bool all_finite() const noexcept;

  friend bool operator==(const Tensor1D&, const Tensor1D&) = default;

 private:
  std::size_t channels_ = 0;
  std::size_t length_ = 0;
  std::vector<Real> data_;
};

/// A minibatch of equally shaped Tensor1D samples, stored contiguously as
/// (batch, channels, length).
class Batch {
 public:
  Batch() = default;
  Batch(std::size_t batch, std::size_t channels, std::size_t length, Real fill = 0.0);

  static Batch from_samples(std::span<const Tensor1D> samples);

  std::size_t batch() const noexcept { return batch_; }
  std::size_t channels() const noexcept { return channels_; }
  std::size_t length() const noexcept { return length_; }
  std::size_t sample_size() const noexcept { return channels_ * length_; }
  std::size_t size() const noexcept { return data_.size(); }

  Real& at(std::size_t n, std::size_t c, std::size_t i) {
    return data_[(n * channels_ + c) * length_ + i];
  }
  Real at(std::size_t n, std::size_t c, std::size_t i) const {
    return data_[(n * channels_ + c) * length_ + i];
  }

  std::span<Real> sample(std::size_t n) { return {data_.data() + n * sample_size(), sample_size()}; }
  std::span<const Real> sample(std::size_t n) const {
    return {data_.data() + n * sample_size(), sample_size()};
  }
  std::span<Real> row(std::size_t n, std::size_t c) {
    return {data_.data() + (n * channels_ + c) * length_, length_};
  }
  std::span<const Real> row(std::size_t n, std::size_t c) const {
    return {data_.data() + (n * channels_ + c) * length_, length_};
  }

  std::span<Real> data() noexcept { return data_; }
  std::span<const Real> data() const noexcept { return data_; }

  Tensor1D to_tensor(std::size_t n) const;

  /// Same storage viewed as (batch, channels * length, 1).
  Batch flattened() const { return reshaped(channels_ * length_, 1); }

  /// Same storage viewed as (batch, channels, length); sizes must agree.
  Batch reshaped(std::size_t channels, std::size_t length) const;

  bool all_finite() const noexcept;

  friend bool operator==(const Batch&, const Batch&) = default;

 private:
  std::size_t batch_ = 0;
  std::size_t channels_ = 0;
  std::size_t length_ = 0;
  std::vector<Real> data_;
};

}  // namespace binecg
