#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace xrpd {

/// A 1-D diffraction profile on a uniform angular grid.
///
/// `theta` holds the scattering angles (degrees 2-theta), `intensity` the
/// counts, `step` the grid increment. Instances are treated as immutable
/// values after construction; every consumer revalidates with validate().
struct Pattern {
    std::vector<double> theta;
    std::vector<double> intensity;
    double step = 0.0;

    std::size_t size() const { return theta.size(); }
    double theta0() const { return theta.empty() ? 0.0 : theta.front(); }
};

// Minimum usable pattern length: one wavelet level and a meaningful
// Hankel split both need at least this many samples.
inline constexpr std::size_t kMinPatternSize = 8;

// Relative tolerance on grid uniformity, |dtheta - step| <= tol * step.
inline constexpr double kGridTolerance = 1e-9;

/// Checks length, grid uniformity and finiteness; throws on violation.
/// When `require_nonnegative` is set (raw loads), negative intensities are
/// rejected as well. Intermediate stage outputs may dip below zero.
void validate_pattern(const Pattern& p, bool require_nonnegative = false);

/// Builds a pattern from a grid origin, step and intensity vector.
Pattern make_pattern(double theta0, double step, std::vector<double> intensity);

/// True when both patterns share origin, step and length within tolerance.
bool same_grid(const Pattern& a, const Pattern& b);

enum class Stage {
    raw,
    denoised,
    background,
    background_free,
    deblurred,
    reconvolved,
};

const char* stage_name(Stage s);

/// One pipeline stage artifact: the pattern plus bookkeeping strings
/// (source file, parameters used).
struct StageRecord {
    Stage stage;
    Pattern pattern;
    std::map<std::string, std::string> metadata;
};

enum class PatternFormat { xy_ascii };

/// Loads a two-column ASCII pattern ('#' comments, space/tab separators,
/// decimal points only). Validates the grid at load time.
Pattern load_pattern(const std::string& path,
                     PatternFormat format = PatternFormat::xy_ascii);

/// Writes two-column ASCII with 17 significant digits, so that
/// load_pattern(save_pattern(p)) reproduces p to last-digit rounding.
void save_pattern(const Pattern& p, const std::string& path);

}  // namespace xrpd
