#include "lattice_ldp/fft.hpp"

#include <fftw3.h>

#include <mutex>

#include "lattice_ldp/error.hpp"

namespace lattice_ldp {

namespace {

// FFTW planning is not thread safe; execution of distinct plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

struct FftGrid::Plans {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
};

FftGrid::FftGrid(std::vector<int> dims) : dims_(std::move(dims)), plans_(std::make_unique<Plans>()) {
  if (dims_.empty()) fail(ErrorCode::invalid_argument, "FFT grid needs at least one dimension");
  size_ = 1;
  for (int d : dims_) {
    if (d < 1) fail(ErrorCode::invalid_argument, "FFT extent must be positive");
    size_ *= static_cast<std::size_t>(d);
  }
  std::lock_guard lock(planner_mutex());
  data_ = reinterpret_cast<Complex*>(fftw_malloc(sizeof(fftw_complex) * size_));
  if (data_ == nullptr) fail(ErrorCode::invalid_argument, "FFT buffer allocation failed");
  auto* raw = reinterpret_cast<fftw_complex*>(data_);
  const int rank = static_cast<int>(dims_.size());
  plans_->forward = fftw_plan_dft(rank, dims_.data(), raw, raw, FFTW_FORWARD, FFTW_ESTIMATE);
  plans_->backward = fftw_plan_dft(rank, dims_.data(), raw, raw, FFTW_BACKWARD, FFTW_ESTIMATE);
  for (std::size_t i = 0; i < size_; ++i) data_[i] = 0.0;
}

FftGrid::~FftGrid() {
  if (!plans_) return;
  std::lock_guard lock(planner_mutex());
  if (plans_->forward) fftw_destroy_plan(plans_->forward);
  if (plans_->backward) fftw_destroy_plan(plans_->backward);
  if (data_) fftw_free(data_);
}

FftGrid::FftGrid(FftGrid&& other) noexcept
    : dims_(std::move(other.dims_)),
      size_(other.size_),
      data_(other.data_),
      plans_(std::move(other.plans_)) {
  other.data_ = nullptr;
  other.size_ = 0;
}

FftGrid& FftGrid::operator=(FftGrid&& other) noexcept {
  if (this != &other) {
    FftGrid tmp(std::move(other));
    std::swap(dims_, tmp.dims_);
    std::swap(size_, tmp.size_);
    std::swap(data_, tmp.data_);
    std::swap(plans_, tmp.plans_);
  }
  return *this;
}

void FftGrid::forward() { fftw_execute(plans_->forward); }

void FftGrid::backward() { fftw_execute(plans_->backward); }

TorusDft::TorusDft(const LatticeShape& shape)
    : shape_(shape), grid_(std::vector<int>(static_cast<std::size_t>(shape.dim()), shape.side())) {
  // Centered coordinate c lives at natural slot (c mod side); the DFT kernel is
  // side-periodic in both arguments so this relabeling is exact.
  natural_.resize(shape.site_count());
  const int side = shape.side();
  for (std::size_t i = 0; i < natural_.size(); ++i) {
    const auto idx = shape.index(i);
    std::size_t slot = 0;
    for (int p = 0; p < shape.dim(); ++p) {
      const int r = idx[p] < 0 ? idx[p] + side : idx[p];
      slot = slot * static_cast<std::size_t>(side) + static_cast<std::size_t>(r);
    }
    natural_[i] = slot;
  }
}

void TorusDft::forward(std::span<const Complex> in, std::span<Complex> out) {
  auto buf = grid_.buffer();
  for (std::size_t i = 0; i < natural_.size(); ++i) buf[natural_[i]] = in[i];
  grid_.forward();
  for (std::size_t i = 0; i < natural_.size(); ++i) out[i] = buf[natural_[i]];
}

void TorusDft::inverse(std::span<const Complex> in, std::span<Complex> out) {
  auto buf = grid_.buffer();
  for (std::size_t i = 0; i < natural_.size(); ++i) buf[natural_[i]] = in[i];
  grid_.backward();
  const double scale = 1.0 / static_cast<double>(natural_.size());
  for (std::size_t i = 0; i < natural_.size(); ++i) out[i] = buf[natural_[i]] * scale;
}

std::vector<Complex> TorusDft::forward(std::span<const Complex> in) {
  std::vector<Complex> out(in.size());
  forward(in, out);
  return out;
}

std::vector<Complex> TorusDft::inverse(std::span<const Complex> in) {
  std::vector<Complex> out(in.size());
  inverse(in, out);
  return out;
}

std::vector<Complex> TorusDft::forward_real(std::span<const double> in) {
  std::vector<Complex> tmp(in.begin(), in.end());
  return forward(tmp);
}

void TorusDft::filter_real(std::span<const double> in, std::span<const double> spectrum,
                           std::span<double> out) {
  auto buf = grid_.buffer();
  for (std::size_t i = 0; i < natural_.size(); ++i) buf[natural_[i]] = in[i];
  grid_.forward();
  for (std::size_t i = 0; i < natural_.size(); ++i) buf[natural_[i]] *= spectrum[i];
  grid_.backward();
  const double scale = 1.0 / static_cast<double>(natural_.size());
  for (std::size_t i = 0; i < natural_.size(); ++i) out[i] = buf[natural_[i]].real() * scale;
}

}  // namespace lattice_ldp
