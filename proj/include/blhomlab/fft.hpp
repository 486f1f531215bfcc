#pragma once

#include <complex>

namespace blhomlab::fft {

/// 2D real-to-complex transform of an n1 x n2 row-major grid.
/// Output layout: n1 x (n2/2+1), row-major (FFTW half-spectrum).
void forward2(int n1, int n2, const double* in, std::complex<double>* out);

/// Inverse of forward2, normalized by 1/(n1*n2).
void inverse2(int n1, int n2, const std::complex<double>* in, double* out);

/// Signed integer frequency for index a on an n-point axis (Nyquist -> n/2).
inline int freq(int a, int n) { return a <= n / 2 ? a : a - n; }

} // namespace blhomlab::fft
