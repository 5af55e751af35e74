#pragma once

#include <cstddef>
#include <vector>

#include "xrpd/pattern.hpp"

namespace xrpd::deblur {

/// One deconvolution task: blurred data g, instrumental point-spread
/// pattern (same step; normalized to unit sum before use), iteration count
/// and the misfit level below which updates are damped (0 disables).
struct DeblurProblem {
    Pattern blurred;
    Pattern psf;
    int iterations = 5;
    double damping_threshold = 0.0;
    std::vector<double> initial;  // empty: uniform start at flux(g)/n
};

/// Linear FFT convolution with the unit-sum kernel centered at its
/// intensity-weighted centroid, cropped back to f's grid. A delta kernel
/// reproduces f exactly; mass that blurs past the grid ends is lost.
Pattern convolve(const Pattern& f, const Pattern& psf);

/// Transpose of convolve (correlation with the same centering); the
/// Richardson-Lucy numerator.
Pattern correlate_adjoint(const Pattern& y, const Pattern& psf);

/// Damped Richardson-Lucy deconvolution from a uniform start. The update
/// factor is blended toward 1 where |H*f - g| falls below the damping
/// threshold. Output is non-negative and conserves the flux of g for
/// interior-supported data.
Pattern richardson_lucy(const DeblurProblem& problem);

/// Angular window around one instrumental-standard peak.
struct PeakRange {
    double lo = 0.0;
    double hi = 0.0;
};

/// Local maxima of the standard above prominence * max, each extended
/// outward until the intensity drops below 1% of the peak height or a
/// neighboring range begins. Ranges are disjoint by construction.
std::vector<PeakRange> extract_peak_ranges(const Pattern& standard,
                                           double prominence);

/// Inclusive sample window of a range on a grid.
std::pair<std::size_t, std::size_t> range_indices(const Pattern& pattern,
                                                  const PeakRange& range);

struct DeblurResult {
    Pattern deblurred;
    std::vector<PeakRange> ranges;
};

/// Per-range deconvolution of the full sample against the standard: each
/// range of the standard provides a local PSF, the deconvolved values are
/// kept inside that range and the input passes through untouched outside
/// (the edge-taper effect).
DeblurResult deblur_full_pattern(const Pattern& sample, const Pattern& standard,
                                 int iterations = 5, double damping = 0.0,
                                 double prominence = 0.05);

struct ResidueStats {
    double rms = 0.0;
    double max_abs = 0.0;
    double relative_rms = 0.0;  // vs the original's in-range RMS
    std::size_t in_range_samples = 0;
};

struct ReconvolveResult {
    Pattern residue;
    ResidueStats stats;
};

/// Consistency check: re-blur the deblurred pattern with the per-range
/// PSFs, add back background and noise, subtract from the original.
/// The residue is evaluated inside the peak ranges and zero-filled outside.
ReconvolveResult reconvolve_check(const Pattern& deblurred,
                                  const Pattern& standard,
                                  const Pattern& background,
                                  const Pattern& noise,
                                  const Pattern& original,
                                  double prominence = 0.05);

}  // namespace xrpd::deblur
