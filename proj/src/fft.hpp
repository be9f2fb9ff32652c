#pragma once

// Thin RAII wrapper over FFTW for one-shot complex transforms. Planning is
// serialized because FFTW's planner is not thread-safe; execution is.

#include <complex>
#include <vector>

namespace qawg::detail {

enum class FftDirection { kForward, kBackward };

// Unnormalized DFT: forward uses exp(-2 pi i m n / N), backward exp(+...).
std::vector<std::complex<double>> dft(const std::vector<std::complex<double>>& in, FftDirection dir);

}  // namespace qawg::detail
