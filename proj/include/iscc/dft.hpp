#pragma once

#include <span>
#include <vector>

#include "iscc/types.hpp"

namespace iscc {

/// Unitary discrete Fourier transforms:
///   dft:  X_n = (1/sqrt(N)) sum_s x_s e^{-j 2 pi n s / N}
///   idft: x_s = (1/sqrt(N)) sum_n X_n e^{+j 2 pi s n / N}
/// Power-of-two lengths use an in-place radix-2 FFT; other lengths fall back
/// to the direct O(N^2) sum (sizes here are at most a few hundred).
std::vector<cplx> dft(std::span<const cplx> x);
std::vector<cplx> idft(std::span<const cplx> X);

/// Circular convolution (a (*) b)_s = sum_p a_{(s-p) mod N} b_p, both length N.
std::vector<cplx> circular_convolve(std::span<const cplx> a, std::span<const cplx> b);

}  // namespace iscc
