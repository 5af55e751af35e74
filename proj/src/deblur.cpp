#include "xrpd/deblur.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "xrpd/errors.hpp"
#include "xrpd/fft.hpp"

namespace xrpd::deblur {

namespace {

void check_shared_step(const Pattern& a, const Pattern& b) {
    if (std::abs(a.step - b.step) > kGridTolerance * a.step)
        throw GridError("step mismatch: " + std::to_string(a.step) + " vs " +
                        std::to_string(b.step));
}

// Unit-sum kernel plus the index of its intensity-weighted centroid.
struct Kernel {
    std::vector<double> weights;
    long center = 0;
};

Kernel normalized_kernel(const Pattern& psf) {
    validate_pattern(psf);
    double peak = 0.0;
    for (double v : psf.intensity) peak = std::max(peak, std::abs(v));
    const double dust = 1e-12 * peak;  // FFT round-off on re-blurred kernels
    double total = 0.0;
    double moment = 0.0;
    std::vector<double> weights(psf.size());
    for (std::size_t i = 0; i < psf.size(); ++i) {
        double v = psf.intensity[i];
        if (v < 0.0) {
            if (v < -dust)
                throw DomainError("psf: negative intensity at index " +
                                  std::to_string(i));
            v = 0.0;
        }
        weights[i] = v;
        total += v;
        moment += static_cast<double>(i) * v;
    }
    if (!(total > 0.0)) throw DomainError("psf: must have positive total intensity");
    Kernel k;
    k.weights = std::move(weights);
    for (auto& w : k.weights) w /= total;
    k.center = std::lround(moment / total);
    return k;
}

// out[i] = full_convolution(x, kernel)[i + offset], zero outside.
std::vector<double> conv_window(const std::vector<double>& x,
                                const std::vector<double>& kernel, long offset,
                                std::size_t out_len) {
    const std::vector<double> full = fft::convolve_linear(x, kernel);
    std::vector<double> out(out_len, 0.0);
    for (std::size_t i = 0; i < out_len; ++i) {
        const long src = static_cast<long>(i) + offset;
        if (src >= 0 && src < static_cast<long>(full.size()))
            out[i] = full[static_cast<std::size_t>(src)];
    }
    return out;
}

std::vector<double> apply_blur(const std::vector<double>& f, const Kernel& k) {
    return conv_window(f, k.weights, k.center, f.size());
}

std::vector<double> apply_blur_adjoint(const std::vector<double>& y,
                                       const Kernel& k) {
    std::vector<double> reversed(k.weights.rbegin(), k.weights.rend());
    const long offset = static_cast<long>(k.weights.size()) - 1 - k.center;
    return conv_window(y, reversed, offset, y.size());
}

}  // namespace

Pattern convolve(const Pattern& f, const Pattern& psf) {
    validate_pattern(f);
    check_shared_step(f, psf);
    const Kernel k = normalized_kernel(psf);
    Pattern out = f;
    out.intensity = apply_blur(f.intensity, k);
    return out;
}

Pattern correlate_adjoint(const Pattern& y, const Pattern& psf) {
    validate_pattern(y);
    check_shared_step(y, psf);
    const Kernel k = normalized_kernel(psf);
    Pattern out = y;
    out.intensity = apply_blur_adjoint(y.intensity, k);
    return out;
}

Pattern richardson_lucy(const DeblurProblem& problem) {
    Pattern g = problem.blurred;
    validate_pattern(g);
    check_shared_step(g, problem.psf);
    if (problem.iterations < 1)
        throw DomainError("richardson_lucy: iterations must be >= 1");
    double gmax = 0.0;
    for (double v : g.intensity) gmax = std::max(gmax, std::abs(v));
    const double dust = 1e-12 * gmax;
    double gsum = 0.0;
    for (double& v : g.intensity) {
        if (v < 0.0) {
            if (v < -dust)
                throw DomainError(
                    "richardson_lucy: blurred data must be non-negative");
            v = 0.0;  // convolution round-off
        }
        gsum += v;
    }
    if (!(gsum > 0.0))
        throw DomainError("richardson_lucy: blurred data is identically zero");

    const Kernel k = normalized_kernel(problem.psf);
    const std::size_t n = g.size();
    const double guard = 1e-12 * gmax;
    const double damping = problem.damping_threshold;

    // uniform start carrying the full flux of g
    std::vector<double> f(n, gsum / static_cast<double>(n));
    if (!problem.initial.empty()) {
        if (problem.initial.size() != n)
            throw SizeError("richardson_lucy: initial guess length mismatch");
        for (double v : problem.initial)
            if (v < 0.0)
                throw DomainError("richardson_lucy: initial guess must be non-negative");
        f = problem.initial;
    }
    std::vector<double> ratio(n);
    for (int it = 0; it < problem.iterations; ++it) {
        const std::vector<double> blurred = apply_blur(f, k);
        for (std::size_t i = 0; i < n; ++i)
            ratio[i] = g.intensity[i] / std::max(blurred[i], guard);
        std::vector<double> update = apply_blur_adjoint(ratio, k);
        if (damping > 0.0) {
            // updates are fully suppressed where the model already matches
            // the data to within the threshold, then ramp back in linearly
            // with misfit/threshold
            for (std::size_t i = 0; i < n; ++i) {
                const double misfit = std::abs(blurred[i] - g.intensity[i]);
                const double w =
                    std::clamp(misfit / damping - 1.0, 0.0, 1.0);
                update[i] = 1.0 + w * (update[i] - 1.0);
            }
        }
        for (std::size_t i = 0; i < n; ++i) f[i] *= update[i];
    }

    Pattern out = g;
    out.intensity = std::move(f);
    return out;
}

std::vector<PeakRange> extract_peak_ranges(const Pattern& standard,
                                           double prominence) {
    validate_pattern(standard, /*require_nonnegative=*/true);
    if (!(prominence > 0.0) || prominence > 1.0)
        throw DomainError("extract_peak_ranges: prominence must be in (0, 1]");
    const auto& v = standard.intensity;
    const std::size_t n = v.size();
    const double vmax = *std::max_element(v.begin(), v.end());
    if (!(vmax > 0.0)) return {};
    const double floor = prominence * vmax;

    std::vector<std::size_t> maxima;
    for (std::size_t i = 1; i + 1 < n; ++i)
        if (v[i] > floor && v[i] > v[i - 1] && v[i] > v[i + 1])
            maxima.push_back(i);
    // plateau tops: rising edge followed by a flat run then a fall
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (!(v[i] > floor && v[i] > v[i - 1] && v[i] == v[i + 1])) continue;
        std::size_t j = i;
        while (j + 1 < n && v[j + 1] == v[i]) ++j;
        if (j + 1 >= n || v[j + 1] < v[i]) maxima.push_back((i + j) / 2);
    }
    if (maxima.empty()) return {};

    std::sort(maxima.begin(), maxima.end(),
              [&](std::size_t a, std::size_t b) { return v[a] > v[b]; });

    std::vector<char> claimed(n, 0);
    std::vector<std::pair<std::size_t, std::size_t>> windows;
    for (std::size_t peak : maxima) {
        if (claimed[peak]) continue;  // shoulder of an already claimed range
        const double cutoff = 0.01 * v[peak];
        std::size_t lo = peak;
        while (lo > 0 && !claimed[lo - 1] && v[lo - 1] >= cutoff) --lo;
        std::size_t hi = peak;
        while (hi + 1 < n && !claimed[hi + 1] && v[hi + 1] >= cutoff) ++hi;
        if (lo == hi) {  // single-sample peak: widen to a valid interval
            if (hi + 1 < n && !claimed[hi + 1])
                ++hi;
            else if (lo > 0 && !claimed[lo - 1])
                --lo;
            else
                continue;
        }
        for (std::size_t i = lo; i <= hi; ++i) claimed[i] = 1;
        windows.emplace_back(lo, hi);
    }

    std::sort(windows.begin(), windows.end());
    std::vector<PeakRange> ranges;
    ranges.reserve(windows.size());
    for (const auto& [lo, hi] : windows)
        ranges.push_back({standard.theta[lo], standard.theta[hi]});
    return ranges;
}

std::pair<std::size_t, std::size_t> range_indices(const Pattern& pattern,
                                                  const PeakRange& range) {
    if (!(range.lo < range.hi))
        throw DomainError("peak range: lo must be below hi");
    const double t0 = pattern.theta0();
    auto to_index = [&](double angle) {
        const long i = std::lround((angle - t0) / pattern.step);
        return static_cast<std::size_t>(
            std::clamp<long>(i, 0, static_cast<long>(pattern.size()) - 1));
    };
    return {to_index(range.lo), to_index(range.hi)};
}

namespace {

// Slice of `source` over the inclusive window, widened as needed to the
// minimum pattern length so it can serve as a PSF.
Pattern slice_pattern(const Pattern& source, std::size_t lo, std::size_t hi) {
    const std::size_t n = source.size();
    while (hi - lo + 1 < kMinPatternSize + 1) {
        if (lo > 0) --lo;
        if (hi + 1 < n) ++hi;
        if (lo == 0 && hi == n - 1) break;
    }
    Pattern out;
    out.step = source.step;
    out.theta.assign(source.theta.begin() + static_cast<long>(lo),
                     source.theta.begin() + static_cast<long>(hi) + 1);
    out.intensity.assign(source.intensity.begin() + static_cast<long>(lo),
                         source.intensity.begin() + static_cast<long>(hi) + 1);
    return out;
}

}  // namespace

DeblurResult deblur_full_pattern(const Pattern& sample, const Pattern& standard,
                                 int iterations, double damping,
                                 double prominence) {
    validate_pattern(sample, /*require_nonnegative=*/true);
    validate_pattern(standard, /*require_nonnegative=*/true);
    if (!same_grid(sample, standard))
        throw GridError("deblur_full_pattern: sample and standard grids differ");

    DeblurResult result;
    result.ranges = extract_peak_ranges(standard, prominence);
    if (result.ranges.empty())
        throw DomainError(
            "deblur_full_pattern: no peak ranges found in the standard; "
            "check that it is background-free and has visible peaks");

    result.deblurred = sample;
    for (const PeakRange& range : result.ranges) {
        const auto [lo, hi] = range_indices(standard, range);
        DeblurProblem problem;
        problem.blurred = sample;
        problem.psf = slice_pattern(standard, lo, hi);
        problem.iterations = iterations;
        problem.damping_threshold = damping;
        const Pattern restored = richardson_lucy(problem);
        for (std::size_t i = lo; i <= hi; ++i)
            result.deblurred.intensity[i] = restored.intensity[i];
    }
    return result;
}

ReconvolveResult reconvolve_check(const Pattern& deblurred,
                                  const Pattern& standard,
                                  const Pattern& background,
                                  const Pattern& noise, const Pattern& original,
                                  double prominence) {
    for (const Pattern* p : {&standard, &background, &noise, &original})
        if (!same_grid(deblurred, *p))
            throw GridError("reconvolve_check: all patterns must share one grid");

    const std::vector<PeakRange> ranges = extract_peak_ranges(standard, prominence);

    ReconvolveResult result;
    result.residue = original;
    std::fill(result.residue.intensity.begin(), result.residue.intensity.end(),
              0.0);

    double sq = 0.0, ref_sq = 0.0, max_abs = 0.0;
    std::size_t count = 0;
    for (const PeakRange& range : ranges) {
        const auto [lo, hi] = range_indices(standard, range);
        const Pattern psf = slice_pattern(standard, lo, hi);
        const Pattern reblurred = convolve(deblurred, psf);
        for (std::size_t i = lo; i <= hi; ++i) {
            const double model = reblurred.intensity[i] +
                                 background.intensity[i] + noise.intensity[i];
            const double r = original.intensity[i] - model;
            result.residue.intensity[i] = r;
            sq += r * r;
            ref_sq += original.intensity[i] * original.intensity[i];
            max_abs = std::max(max_abs, std::abs(r));
            ++count;
        }
    }
    result.stats.in_range_samples = count;
    if (count > 0) {
        result.stats.rms = std::sqrt(sq / static_cast<double>(count));
        result.stats.max_abs = max_abs;
        const double ref_rms = std::sqrt(ref_sq / static_cast<double>(count));
        result.stats.relative_rms = ref_rms > 0.0 ? result.stats.rms / ref_rms : 0.0;
    }
    return result;
}

}  // namespace xrpd::deblur
