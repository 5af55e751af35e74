#pragma once

#include <Eigen/Core>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "xrpd/hlsvd.hpp"
#include "xrpd/pattern.hpp"

namespace xrpd::synth {

struct GaussianPeak {
    double center = 0.0;  // degrees
    double height = 0.0;
    double fwhm = 0.0;    // degrees
};

enum class NoiseKind { gaussian, poisson };

/// Recipe for a ground-truth pattern: peaks (Gaussian list or an explicit
/// damped-cosine model), a polynomial background in the normalized
/// coordinate u = (theta - theta0) / ((n - 1) * step), and seeded noise.
struct SynthSpec {
    std::size_t n = 0;
    double theta0 = 10.0;
    double step = 0.02;
    std::vector<GaussianPeak> peaks;
    hlsvd::SinusoidModel model;             // used when peaks is empty
    std::vector<double> background;         // polynomial coefficients in u
    double noise_sigma = 0.0;
    NoiseKind noise_kind = NoiseKind::gaussian;
    std::uint64_t seed = 0;
};

/// Pattern plus the clean components it was assembled from, so every
/// pipeline stage has a reference to compare against.
struct SynthResult {
    Pattern pattern;      // peaks + background + noise
    Pattern clean;        // peaks + background
    Pattern peaks_only;   // background-free truth
    Pattern background;
    Pattern noise;

    std::vector<StageRecord> records() const;
};

SynthResult synth_pattern(const SynthSpec& spec);

/// Deterministic standard-normal draw (Box-Muller over the raw engine
/// words, so results are pinned by the mt19937_64 specification).
double normal_draw(std::mt19937_64& rng);

inline constexpr std::size_t kDenseHankelCap = 512;

struct DenseSVD {
    Eigen::MatrixXcd u;
    Eigen::MatrixXcd v;
    Eigen::VectorXd singular_values;
};

/// Brute-force oracle: materialize H[i][j] = signal[i+j] and factor it
/// densely. Test fixture only; capped at 512 samples.
DenseSVD dense_hankel_svd(const std::vector<std::complex<double>>& signal);

/// Traditional background oracle: piecewise-linear interpolation through
/// the pattern values at the anchor angles, constant beyond the outer
/// anchors. Anchors must be sorted, in range and placed in peak-free zones
/// (the caller's responsibility).
Pattern interp_background(const Pattern& pattern,
                          const std::vector<double>& anchors);

}  // namespace xrpd::synth
