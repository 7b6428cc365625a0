#ifndef ANTISPOOF_FFT_H_
#define ANTISPOOF_FFT_H_

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace antispoof {

bool is_power_of_two(std::size_t n);
std::size_t next_power_of_two(std::size_t n);

// In-place iterative radix-2 FFT. data.size() must be a power of two.
// inverse=true computes the unscaled inverse; callers divide by N.
void fft_inplace(std::span<std::complex<double>> data, bool inverse = false);

// Power spectrum |X[k]|^2 for k = 0..n_fft/2 of a real frame zero-padded to n_fft.
std::vector<double> power_spectrum(std::span<const double> frame, std::size_t n_fft);

}  // namespace antispoof

#endif  // ANTISPOOF_FFT_H_
