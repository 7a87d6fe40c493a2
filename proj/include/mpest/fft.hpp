#pragma once

#include "mpest/types.hpp"

#include <vector>

namespace mpest {

// In-place DFT. Radix-2 Cooley-Tukey when the size is a power of two,
// direct O(n^2) evaluation otherwise. Unnormalized forward transform
// X_k = sum_n x_n e^{-2pi i kn/N}; the inverse carries the 1/N factor.
void fft(std::vector<cplx>& data, bool inverse);

void fft(CVec& data, bool inverse);

}  // namespace mpest
