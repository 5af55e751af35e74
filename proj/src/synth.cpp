#include "xrpd/synth.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "xrpd/errors.hpp"

namespace xrpd::synth {

namespace {

constexpr double kFourLn2 = 2.772588722239781;  // Gaussian: 4 ln 2

double gaussian(double theta, const GaussianPeak& peak) {
    const double t = (theta - peak.center) / peak.fwhm;
    return peak.height * std::exp(-kFourLn2 * t * t);
}

long poisson_draw(std::mt19937_64& rng, double lambda) {
    if (lambda <= 0.0) return 0;
    if (lambda < 30.0) {
        // Knuth multiplication
        const double limit = std::exp(-lambda);
        double prod = 1.0;
        long k = -1;
        do {
            ++k;
            prod *= (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
        } while (prod > limit);
        return k;
    }
    // large counts: normal approximation is adequate for stress fixtures
    const double v = lambda + std::sqrt(lambda) * normal_draw(rng);
    return std::lround(std::max(0.0, v));
}

}  // namespace

double normal_draw(std::mt19937_64& rng) {
    const double u1 = (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
    const double u2 = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
}

std::vector<StageRecord> SynthResult::records() const {
    std::vector<StageRecord> out;
    out.push_back({Stage::raw, pattern, {{"content", "peaks+background+noise"}}});
    out.push_back({Stage::denoised, clean, {{"content", "peaks+background"}}});
    out.push_back({Stage::background, background, {{"content", "background"}}});
    out.push_back({Stage::background_free, peaks_only, {{"content", "peaks"}}});
    return out;
}

SynthResult synth_pattern(const SynthSpec& spec) {
    if (spec.n < kMinPatternSize)
        throw SizeError("synth_pattern: n must be >= " +
                        std::to_string(kMinPatternSize));
    if (!(spec.step > 0.0)) throw DomainError("synth_pattern: step must be > 0");
    if (spec.noise_sigma < 0.0)
        throw DomainError("synth_pattern: noise_sigma must be >= 0");
    for (const auto& peak : spec.peaks)
        if (!(peak.fwhm > 0.0))
            throw DomainError("synth_pattern: peak fwhm must be > 0");

    const std::size_t n = spec.n;
    const double span = spec.step * static_cast<double>(n - 1);

    std::vector<double> peaks(n, 0.0);
    std::vector<double> bg(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double theta = spec.theta0 + spec.step * static_cast<double>(i);
        for (const auto& peak : spec.peaks) peaks[i] += gaussian(theta, peak);
        const double u = span > 0.0 ? (theta - spec.theta0) / span : 0.0;
        double up = 1.0;
        for (double coeff : spec.background) {
            bg[i] += coeff * up;
            up *= u;
        }
    }
    if (spec.peaks.empty() && !spec.model.components.empty()) {
        std::vector<double> theta(n);
        for (std::size_t i = 0; i < n; ++i)
            theta[i] = spec.theta0 + spec.step * static_cast<double>(i);
        peaks = hlsvd::reconstruct(spec.model, theta);
    }

    std::mt19937_64 rng(spec.seed);
    std::vector<double> noise(n, 0.0);
    std::vector<double> full(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double clean = peaks[i] + bg[i];
        if (spec.noise_kind == NoiseKind::gaussian) {
            if (spec.noise_sigma > 0.0)
                noise[i] = spec.noise_sigma * normal_draw(rng);
        } else {
            noise[i] = static_cast<double>(poisson_draw(rng, clean)) - clean;
        }
        full[i] = clean + noise[i];
    }

    SynthResult result;
    result.pattern = make_pattern(spec.theta0, spec.step, std::move(full));
    result.clean = result.pattern;
    result.peaks_only = result.pattern;
    result.background = result.pattern;
    result.noise = result.pattern;
    for (std::size_t i = 0; i < n; ++i) {
        result.clean.intensity[i] = peaks[i] + bg[i];
        result.peaks_only.intensity[i] = peaks[i];
        result.background.intensity[i] = bg[i];
        result.noise.intensity[i] = noise[i];
    }
    return result;
}

DenseSVD dense_hankel_svd(const std::vector<std::complex<double>>& signal) {
    const std::size_t n = signal.size();
    if (n > kDenseHankelCap)
        throw DomainError("dense_hankel_svd: capped at " +
                          std::to_string(kDenseHankelCap) + " samples, got " +
                          std::to_string(n));
    if (n < 2) throw SizeError("dense_hankel_svd: need at least 2 samples");
    const std::size_t l = (n + 2) / 2;
    const std::size_t m = n + 1 - l;
    Eigen::MatrixXcd h(l, m);
    for (std::size_t i = 0; i < l; ++i)
        for (std::size_t j = 0; j < m; ++j)
            h(static_cast<long>(i), static_cast<long>(j)) = signal[i + j];
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(h, Eigen::ComputeThinU |
                                                  Eigen::ComputeThinV);
    return {svd.matrixU(), svd.matrixV(), svd.singularValues()};
}

Pattern interp_background(const Pattern& pattern,
                          const std::vector<double>& anchors) {
    validate_pattern(pattern);
    if (anchors.size() < 2)
        throw DomainError("interp_background: need at least 2 anchors");
    const double lo = pattern.theta.front();
    const double hi = pattern.theta.back();
    for (std::size_t i = 0; i < anchors.size(); ++i) {
        if (i > 0 && !(anchors[i] > anchors[i - 1]))
            throw DomainError("interp_background: anchors must be sorted and distinct");
        if (anchors[i] < lo - kGridTolerance || anchors[i] > hi + kGridTolerance)
            throw DomainError("interp_background: anchor " +
                              std::to_string(anchors[i]) + " out of range");
    }

    // pattern value at an arbitrary angle, linear between samples
    auto value_at = [&](double angle) {
        const double pos = (angle - pattern.theta0()) / pattern.step;
        const auto i0 = static_cast<std::size_t>(std::clamp(
            std::floor(pos), 0.0, static_cast<double>(pattern.size() - 1)));
        const std::size_t i1 = std::min(i0 + 1, pattern.size() - 1);
        const double frac = std::clamp(pos - static_cast<double>(i0), 0.0, 1.0);
        return (1.0 - frac) * pattern.intensity[i0] + frac * pattern.intensity[i1];
    };

    std::vector<double> ay(anchors.size());
    for (std::size_t i = 0; i < anchors.size(); ++i) ay[i] = value_at(anchors[i]);

    Pattern out = pattern;
    for (std::size_t i = 0; i < pattern.size(); ++i) {
        const double theta = pattern.theta[i];
        if (theta <= anchors.front()) {
            out.intensity[i] = ay.front();
        } else if (theta >= anchors.back()) {
            out.intensity[i] = ay.back();
        } else {
            const auto it =
                std::upper_bound(anchors.begin(), anchors.end(), theta);
            const std::size_t j = static_cast<std::size_t>(it - anchors.begin());
            const double frac = (theta - anchors[j - 1]) / (anchors[j] - anchors[j - 1]);
            out.intensity[i] = (1.0 - frac) * ay[j - 1] + frac * ay[j];
        }
    }
    return out;
}

}  // namespace xrpd::synth
