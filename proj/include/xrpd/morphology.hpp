#pragma once

#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

#include "xrpd/pattern.hpp"

namespace xrpd::morpho {

/// Grayscale raster, row-major. The pad values are the sentinel fills used
/// for reads beyond the border: erosion fills with pad_high (type maximum)
/// and dilation with pad_low (type minimum), so borders never win the
/// min/max.
struct Image2D {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> pixels;
    double pad_value_low = -std::numeric_limits<double>::infinity();
    double pad_value_high = std::numeric_limits<double>::infinity();

    double at(std::size_t r, std::size_t c) const { return pixels[r * cols + c]; }
    double& at(std::size_t r, std::size_t c) { return pixels[r * cols + c]; }
};

/// Neighborhood mask: offset list plus per-offset heights (all zero for
/// flat elements). Must contain the origin and equal its own negation.
struct StructuringElement {
    std::vector<std::pair<int, int>> offsets;
    std::vector<double> values;
};

void validate_element(const StructuringElement& se);

/// Flat disk: every lattice offset with m^2 + n^2 <= radius^2.
StructuringElement disk_se(int radius);

Image2D dilate(const Image2D& image, const StructuringElement& se);
Image2D erode(const Image2D& image, const StructuringElement& se);

/// Erosion followed by dilation; removes bright features smaller than the
/// element. Idempotent and anti-extensive.
Image2D open(const Image2D& image, const StructuringElement& se);

/// Dilation followed by erosion; fills small holes. Idempotent, extensive.
Image2D close(const Image2D& image, const StructuringElement& se);

/// Records how a 1-D signal was rastered so the inverse is exact.
struct ReshapeLayout {
    std::size_t n = 0;      // original sample count
    std::size_t width = 0;  // ceil(sqrt(n))
};

/// Row-major fill into a near-square grid; trailing cells repeat the last
/// sample.
std::pair<Image2D, ReshapeLayout> reshape_to_image(const std::vector<double>& signal);

std::vector<double> reshape_from_image(const Image2D& image,
                                       const ReshapeLayout& layout);

struct BackgroundResult {
    Pattern background;
    Pattern corrected;            // pattern - background, clamped at 0
    ReshapeLayout layout;
    std::size_t clamped_count = 0;  // samples where the clamp engaged
};

/// Background via 2-D reshape + grayscale opening with a flat disk, then
/// 1-D restore and subtraction.
BackgroundResult estimate_background(const Pattern& pattern, int radius = 3);

}  // namespace xrpd::morpho
