#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace xrpd::fft {

using cvec = std::vector<std::complex<double>>;

/// In-place complex DFT of arbitrary length. The inverse is scaled by 1/n
/// so that inverse(forward(x)) == x.
void transform(cvec& data, bool inverse);

cvec forward(cvec data);
cvec inverse(cvec data);

/// Smallest power of two >= n.
std::size_t next_pow2(std::size_t n);

/// Full linear convolution, output length a.size() + b.size() - 1.
std::vector<double> convolve_linear(const std::vector<double>& a,
                                    const std::vector<double>& b);
cvec convolve_linear(const cvec& a, const cvec& b);

}  // namespace xrpd::fft
