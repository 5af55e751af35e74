#include "xrpd/morphology.hpp"

#include <algorithm>
#include <cmath>

#include "xrpd/errors.hpp"

namespace xrpd::morpho {

namespace {

void validate_image(const Image2D& img) {
    if (img.rows == 0 || img.cols == 0 ||
        img.pixels.size() != img.rows * img.cols)
        throw SizeError("image: dimension/pixel count mismatch");
    for (double v : img.pixels)
        if (!std::isfinite(v)) throw DomainError("image: non-finite pixel");
}

enum class Op { dilate, erode };

Image2D apply(const Image2D& img, const StructuringElement& se, Op op) {
    validate_image(img);
    validate_element(se);
    const long rows = static_cast<long>(img.rows);
    const long cols = static_cast<long>(img.cols);
    const double fill = op == Op::dilate ? img.pad_value_low : img.pad_value_high;

    Image2D out = img;
    for (long y = 0; y < rows; ++y) {
        for (long x = 0; x < cols; ++x) {
            double best = fill;
            for (std::size_t k = 0; k < se.offsets.size(); ++k) {
                const long yy = y - se.offsets[k].first;
                const long xx = x - se.offsets[k].second;
                double v = fill;
                if (yy >= 0 && yy < rows && xx >= 0 && xx < cols)
                    v = img.pixels[static_cast<std::size_t>(yy * cols + xx)];
                if (op == Op::dilate) {
                    v += se.values[k];
                    if (v > best) best = v;
                } else {
                    v -= se.values[k];
                    if (v < best) best = v;
                }
            }
            out.pixels[static_cast<std::size_t>(y * cols + x)] = best;
        }
    }
    return out;
}

}  // namespace

void validate_element(const StructuringElement& se) {
    if (se.offsets.empty() || se.offsets.size() != se.values.size())
        throw DomainError("structuring element: offset/value count mismatch");
    bool has_origin = false;
    for (const auto& [m, n] : se.offsets) {
        if (m == 0 && n == 0) has_origin = true;
        // symmetric under negation, required for the usual opening algebra
        if (std::find(se.offsets.begin(), se.offsets.end(),
                      std::make_pair(-m, -n)) == se.offsets.end())
            throw DomainError("structuring element: not symmetric under negation");
    }
    if (!has_origin)
        throw DomainError("structuring element: must contain the origin");
}

StructuringElement disk_se(int radius) {
    if (radius < 1) throw DomainError("disk_se: radius must be >= 1");
    StructuringElement se;
    for (int m = -radius; m <= radius; ++m)
        for (int n = -radius; n <= radius; ++n)
            if (m * m + n * n <= radius * radius) {
                se.offsets.emplace_back(m, n);
                se.values.push_back(0.0);
            }
    return se;
}

Image2D dilate(const Image2D& image, const StructuringElement& se) {
    return apply(image, se, Op::dilate);
}

Image2D erode(const Image2D& image, const StructuringElement& se) {
    return apply(image, se, Op::erode);
}

Image2D open(const Image2D& image, const StructuringElement& se) {
    return dilate(erode(image, se), se);
}

Image2D close(const Image2D& image, const StructuringElement& se) {
    return erode(dilate(image, se), se);
}

std::pair<Image2D, ReshapeLayout> reshape_to_image(const std::vector<double>& signal) {
    if (signal.size() < kMinPatternSize)
        throw SizeError("reshape_to_image: need at least " +
                        std::to_string(kMinPatternSize) + " samples");
    const std::size_t n = signal.size();
    const auto width = static_cast<std::size_t>(
        std::ceil(std::sqrt(static_cast<double>(n))));

    Image2D img;
    img.rows = width;
    img.cols = width;
    img.pixels.assign(width * width, signal.back());
    std::copy(signal.begin(), signal.end(), img.pixels.begin());
    return {std::move(img), ReshapeLayout{n, width}};
}

std::vector<double> reshape_from_image(const Image2D& image,
                                       const ReshapeLayout& layout) {
    if (image.pixels.size() < layout.n || image.cols != layout.width)
        throw SizeError("reshape_from_image: layout does not match image");
    return {image.pixels.begin(), image.pixels.begin() + layout.n};
}

BackgroundResult estimate_background(const Pattern& pattern, int radius) {
    validate_pattern(pattern);
    if (radius < 1) throw DomainError("estimate_background: radius must be >= 1");

    auto [img, layout] = reshape_to_image(pattern.intensity);
    if (static_cast<std::size_t>(2 * radius + 1) > layout.width)
        throw DomainError("estimate_background: disk of radius " +
                          std::to_string(radius) + " exceeds the " +
                          std::to_string(layout.width) + "x" +
                          std::to_string(layout.width) + " reshaped image");

    Image2D opened = open(img, disk_se(radius));

    BackgroundResult result;
    result.layout = layout;
    result.background = pattern;
    result.background.intensity = reshape_from_image(opened, layout);
    result.corrected = pattern;
    for (std::size_t i = 0; i < pattern.size(); ++i) {
        const double diff = pattern.intensity[i] - result.background.intensity[i];
        if (diff < 0.0) {
            result.corrected.intensity[i] = 0.0;
            ++result.clamped_count;
        } else {
            result.corrected.intensity[i] = diff;
        }
    }
    return result;
}

}  // namespace xrpd::morpho
