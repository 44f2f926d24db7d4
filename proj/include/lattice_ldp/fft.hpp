#pragma once

// Discrete Fourier transforms backed by FFTW.
//
// Objects own their plan and an aligned work buffer, so one instance must not
// be used from two threads at once. Construct one per worker.

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "lattice_ldp/lattice.hpp"

namespace lattice_ldp {

using Complex = std::complex<double>;

/// Unnormalized multi-dimensional DFT on a row-major grid with natural
/// (0..size-1) index layout.
class FftGrid {
 public:
  explicit FftGrid(std::vector<int> dims);
  ~FftGrid();
  FftGrid(FftGrid&&) noexcept;
  FftGrid& operator=(FftGrid&&) noexcept;
  FftGrid(const FftGrid&) = delete;
  FftGrid& operator=(const FftGrid&) = delete;

  std::size_t size() const noexcept { return size_; }
  std::span<Complex> buffer() noexcept { return {data_, size_}; }

  /// In place on buffer(): sum_x exp(-2 pi i <x,k>/N) buf[x].
  void forward();
  /// In place on buffer(): sum_k exp(+2 pi i <x,k>/N) buf[k], no 1/N factor.
  void backward();

 private:
  struct Plans;
  std::vector<int> dims_;
  std::size_t size_ = 0;
  Complex* data_ = nullptr;
  std::unique_ptr<Plans> plans_;
};

/// DFT over a torus V_n in the lattice's lexicographic centered layout:
/// forward  X^k = sum_j exp(-2 pi i <j,k>/(2n+1)) x^j,
/// inverse  x^j = |V_n|^{-1} sum_k exp(+2 pi i <j,k>/(2n+1)) X^k.
class TorusDft {
 public:
  explicit TorusDft(const LatticeShape& shape);

  const LatticeShape& shape() const noexcept { return shape_; }

  void forward(std::span<const Complex> in, std::span<Complex> out);
  void inverse(std::span<const Complex> in, std::span<Complex> out);

  std::vector<Complex> forward(std::span<const Complex> in);
  std::vector<Complex> inverse(std::span<const Complex> in);
  std::vector<Complex> forward_real(std::span<const double> in);

  /// Circular convolution of a real field with a filter given by its
  /// (real) spectrum: out = inverse(forward(in) * spectrum), real part.
  void filter_real(std::span<const double> in, std::span<const double> spectrum,
                   std::span<double> out);

 private:
  LatticeShape shape_;
  FftGrid grid_;
  std::vector<std::size_t> natural_;  // lexicographic site -> natural FFTW slot
};

}  // namespace lattice_ldp
