#pragma once

#include <cstddef>
#include <vector>

#include "xrpd/pattern.hpp"

namespace xrpd::wavelet {

/// Daubechies filter pair under the sum(c_k^2) = 2 normalization.
///
/// The coefficients are obtained by solving the defining constraint system
/// (N vanishing moments plus shift orthogonality) with a Newton iteration
/// from tabulated starting values, so the stored values satisfy the
/// constraints to machine precision rather than to table precision.
struct WaveletBasis {
    int order = 0;                 // N; order 1 is Haar
    std::vector<double> lowpass;   // c_k, 2N coefficients
    std::vector<double> highpass;  // b_k = (-1)^k c_{2N-1-k}
    double regularity = 0.0;       // tabulated smoothness exponent, metadata only

    std::size_t filter_length() const { return lowpass.size(); }
};

inline constexpr int kMinOrder = 1;
inline constexpr int kMaxOrder = 6;

WaveletBasis daubechies_filter(int order);

/// Pyramid coefficients, details ordered coarse -> fine.
struct WaveletCoeffs {
    int levels = 0;
    std::vector<double> approx;
    std::vector<std::vector<double>> details;

    std::size_t signal_length() const;
};

/// Periodic-boundary pyramid decomposition. The signal length must be
/// divisible by 2^levels and every level must remain at least one filter
/// length long.
WaveletCoeffs dwt(const std::vector<double>& signal, const WaveletBasis& basis,
                  int levels);

/// Exact inverse of dwt for a matching basis.
std::vector<double> idwt(const WaveletCoeffs& coeffs, const WaveletBasis& basis);

/// Noise level from the finest detail band: median(|d|) / 0.6745.
double estimate_noise_sigma(const WaveletCoeffs& coeffs);

struct DenoiseResult {
    Pattern denoised;
    Pattern noise;      // input - denoised, exactly
    double sigma = 0.0;
    double threshold = 0.0;
    int levels = 0;
};

/// Three-step denoising: transform, soft-threshold every detail band at
/// sigma * sqrt(2 ln N), reconstruct. Inputs whose length is not divisible
/// by 2^levels are symmetrically extended and cropped back afterwards.
/// Approximation coefficients are never thresholded.
DenoiseResult denoise(const Pattern& pattern, const WaveletBasis& basis,
                      int levels);

/// min(4, floor(log2 n) - 2), clamped to at least 1.
int default_levels(std::size_t n);

}  // namespace xrpd::wavelet
