#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "test_util.hpp"
#include "xrpd/errors.hpp"
#include "xrpd/morphology.hpp"
#include "xrpd/synth.hpp"

using namespace xrpd;
using namespace xrpd::morpho;

namespace {

Image2D random_image(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
    Image2D img;
    img.rows = rows;
    img.cols = cols;
    img.pixels = testutil::random_vector(rng, rows * cols, 0.0, 100.0);
    return img;
}

Image2D constant_image(std::size_t rows, std::size_t cols, double value) {
    Image2D img;
    img.rows = rows;
    img.cols = cols;
    img.pixels.assign(rows * cols, value);
    return img;
}

double max_abs(const Image2D& a, const Image2D& b) {
    return testutil::max_abs_diff(a.pixels, b.pixels);
}

}  // namespace

TEST_SUITE("morphology") {

TEST_CASE("disk structuring elements") {
    const StructuringElement r1 = disk_se(1);
    CHECK(r1.offsets.size() == 5);  // origin plus 4-neighbors

    // independent enumeration of m^2 + n^2 <= 9
    std::size_t expected = 0;
    for (int m = -3; m <= 3; ++m)
        for (int n = -3; n <= 3; ++n)
            if (m * m + n * n <= 9) ++expected;
    CHECK(expected == 29);
    const StructuringElement r3 = disk_se(3);
    CHECK(r3.offsets.size() == 29);

    for (int radius : {1, 2, 3, 5}) {
        const StructuringElement se = disk_se(radius);
        CHECK_NOTHROW(validate_element(se));  // origin + symmetry
        for (double v : se.values) CHECK(v == 0.0);
    }
    CHECK_THROWS_AS(disk_se(0), DomainError);
}

TEST_CASE("dilation basics") {
    const StructuringElement se = disk_se(3);
    const Image2D c = constant_image(16, 16, 4.5);
    CHECK(max_abs(dilate(c, se), c) == 0.0);

    Image2D spike = constant_image(16, 16, 0.0);
    spike.at(8, 8) = 1.0;
    const Image2D d = dilate(spike, se);
    std::size_t ones = 0;
    for (std::size_t r = 0; r < 16; ++r)
        for (std::size_t col = 0; col < 16; ++col) {
            const long dr = static_cast<long>(r) - 8;
            const long dc = static_cast<long>(col) - 8;
            const double expect = (dr * dr + dc * dc <= 9) ? 1.0 : 0.0;
            CHECK(d.at(r, col) == expect);
            if (d.at(r, col) == 1.0) ++ones;
        }
    CHECK(ones == 29);

    std::mt19937_64 rng(23);
    const Image2D img = random_image(rng, 20, 20);
    const Image2D di = dilate(img, se);
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
        CHECK(di.pixels[i] >= img.pixels[i]);  // extensive
}

TEST_CASE("erosion basics and min-max duality") {
    const StructuringElement se = disk_se(3);
    const Image2D c = constant_image(16, 16, -2.0);
    CHECK(max_abs(erode(c, se), c) == 0.0);

    Image2D spike = constant_image(16, 16, 0.0);
    spike.at(8, 8) = 1.0;
    const Image2D e = erode(spike, se);
    for (double v : e.pixels) CHECK(v == 0.0);

    std::mt19937_64 rng(29);
    for (int trial = 0; trial < 5; ++trial) {
        const Image2D img = random_image(rng, 24, 24);
        Image2D negated = img;
        for (auto& v : negated.pixels) v = -v;
        Image2D dual = dilate(negated, se);
        for (auto& v : dual.pixels) v = -v;
        CHECK(max_abs(erode(img, se), dual) <= 1e-12);
    }
}

TEST_CASE("opening removes small objects and keeps large plateaus") {
    const StructuringElement se = disk_se(2);
    Image2D plateau = constant_image(20, 20, 1.0);
    for (std::size_t r = 5; r < 15; ++r)
        for (std::size_t c = 5; c < 15; ++c) plateau.at(r, c) = 7.0;
    const Image2D opened = open(plateau, se);
    // interior of a 10x10 plateau survives a radius-2 disk exactly
    CHECK(opened.at(10, 10) == 7.0);
    CHECK(opened.at(7, 7) == 7.0);

    Image2D spiked = plateau;
    spiked.at(2, 2) = 50.0;
    const Image2D cleaned = open(spiked, se);
    CHECK(cleaned.at(2, 2) == 1.0);
}

TEST_CASE("opening is idempotent and anti-extensive") {
    const StructuringElement se = disk_se(3);
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 5; ++trial) {
        const Image2D img = random_image(rng, 32, 32);
        const Image2D once = open(img, se);
        CHECK(max_abs(open(once, se), once) <= 1e-12);
        for (std::size_t i = 0; i < img.pixels.size(); ++i)
            CHECK(once.pixels[i] <= img.pixels[i]);
    }
}

TEST_CASE("closing fills holes, is idempotent and extensive") {
    const StructuringElement se = disk_se(2);
    Image2D holed = constant_image(20, 20, 5.0);
    holed.at(10, 10) = 0.0;
    const Image2D closed = close(holed, se);
    CHECK(closed.at(10, 10) == 5.0);

    std::mt19937_64 rng(37);
    for (int trial = 0; trial < 5; ++trial) {
        const Image2D img = random_image(rng, 32, 32);
        const Image2D once = close(img, se);
        CHECK(max_abs(close(once, se), once) <= 1e-12);
        for (std::size_t i = 0; i < img.pixels.size(); ++i)
            CHECK(once.pixels[i] >= img.pixels[i]);

        // duality: close(I) = -open(-I)
        Image2D negated = img;
        for (auto& v : negated.pixels) v = -v;
        Image2D dual = open(negated, se);
        for (auto& v : dual.pixels) v = -v;
        CHECK(max_abs(once, dual) <= 1e-12);
    }
}

TEST_CASE("opening is monotone") {
    const StructuringElement se = disk_se(3);
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 5; ++trial) {
        const Image2D small = random_image(rng, 24, 24);
        Image2D large = small;
        const auto bump = testutil::random_vector(rng, large.pixels.size(), 0.0, 10.0);
        for (std::size_t i = 0; i < large.pixels.size(); ++i)
            large.pixels[i] += bump[i];
        const Image2D os = open(small, se);
        const Image2D ol = open(large, se);
        for (std::size_t i = 0; i < os.pixels.size(); ++i)
            CHECK(os.pixels[i] <= ol.pixels[i] + 1e-12);
    }
}

TEST_CASE("reshape layout") {
    std::vector<double> sixteen(16);
    for (std::size_t i = 0; i < 16; ++i) sixteen[i] = static_cast<double>(i);
    const auto [img16, layout16] = reshape_to_image(sixteen);
    CHECK(layout16.width == 4);
    CHECK(img16.pixels.size() == 16);
    CHECK(img16.at(3, 3) == 15.0);

    std::vector<double> ten(10);
    for (std::size_t i = 0; i < 10; ++i) ten[i] = static_cast<double>(i);
    const auto [img10, layout10] = reshape_to_image(ten);
    CHECK(layout10.width == 4);
    for (std::size_t i = 10; i < 16; ++i) CHECK(img10.pixels[i] == 9.0);

    std::mt19937_64 rng(43);
    const auto sig = testutil::random_vector(rng, 100);
    const auto [img, layout] = reshape_to_image(sig);
    const auto back = reshape_from_image(img, layout);
    REQUIRE(back.size() == sig.size());
    for (std::size_t i = 0; i < sig.size(); ++i) CHECK(back[i] == sig[i]);
}

TEST_CASE("background of a smooth peak-free pattern reproduces it") {
    // slowly varying quadratic, variation scale far above the disk
    synth::SynthSpec spec;
    spec.n = 4096;
    spec.background = {200.0, 120.0, -60.0};
    const auto truth = synth::synth_pattern(spec);
    const auto result = estimate_background(truth.pattern, 3);

    const std::size_t w = result.layout.width;  // 64
    double worst = 0.0;
    for (std::size_t i = 4 * w; i + 4 * w < spec.n; ++i)
        worst = std::max(worst,
                         std::abs(result.background.intensity[i] -
                                  truth.pattern.intensity[i]) /
                             truth.pattern.intensity[i]);
    CHECK(worst <= 0.03);
}

TEST_CASE("background under a narrow peak stays near the truth") {
    synth::SynthSpec spec;
    spec.n = 4096;
    spec.theta0 = 10.0;
    spec.step = 0.02;
    spec.background = {200.0, 100.0};
    spec.peaks = {{50.0, 400.0, 0.5}};  // fwhm = 25 samples, well under one row
    const auto truth = synth::synth_pattern(spec);
    const auto result = estimate_background(truth.pattern, 3);

    double worst = 0.0;
    for (std::size_t i = 0; i < spec.n; ++i) {
        if (std::abs(truth.pattern.theta[i] - 50.0) > 1.5) continue;
        worst = std::max(worst,
                         std::abs(result.background.intensity[i] -
                                  truth.background.intensity[i]) /
                             truth.background.intensity[i]);
    }
    CHECK(worst <= 0.05);
}

TEST_CASE("corrected plus background reproduces the pattern where positive") {
    std::mt19937_64 rng(47);
    Pattern p = make_pattern(5.0, 0.01,
                             testutil::random_vector(rng, 400, 10.0, 200.0));
    const auto result = estimate_background(p, 2);
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (result.corrected.intensity[i] > 0.0)
            CHECK(result.corrected.intensity[i] +
                      result.background.intensity[i] ==
                  doctest::Approx(p.intensity[i]).epsilon(1e-14));
        CHECK(result.corrected.intensity[i] >= 0.0);
    }
}

TEST_CASE("background estimate is shift-equivariant") {
    synth::SynthSpec spec;
    spec.n = 1024;
    spec.background = {100.0, 50.0};
    spec.peaks = {{spec.theta0 + 0.02 * 512, 300.0, 0.2}};
    const auto truth = synth::synth_pattern(spec);

    const auto base = estimate_background(truth.pattern, 3);
    Pattern shifted = truth.pattern;
    for (auto& v : shifted.intensity) v += 77.5;
    const auto moved = estimate_background(shifted, 3);

    const std::size_t w = base.layout.width;
    for (std::size_t i = 4 * w; i + 4 * w < truth.pattern.size(); ++i)
        CHECK(std::abs(moved.background.intensity[i] -
                       base.background.intensity[i] - 77.5) <= 1e-9);
}

TEST_CASE("oversized disks are rejected") {
    const Pattern p = make_pattern(0.0, 0.1, std::vector<double>(64, 1.0));
    // 64 samples reshape to 8x8; a radius-4 disk spans 9 pixels
    CHECK_THROWS_AS(estimate_background(p, 4), DomainError);
    CHECK_THROWS_AS(estimate_background(p, 0), DomainError);
}

}  // TEST_SUITE
