#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "test_util.hpp"
#include "xrpd/errors.hpp"
#include "xrpd/hlsvd.hpp"
#include "xrpd/synth.hpp"

using namespace xrpd;
using namespace xrpd::hlsvd;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

cvec exponential_signal(const std::vector<std::complex<double>>& amplitudes,
                        const std::vector<std::complex<double>>& zs,
                        std::size_t n) {
    cvec sig(n, 0.0);
    for (std::size_t k = 0; k < zs.size(); ++k) {
        std::complex<double> acc = amplitudes[k];
        for (std::size_t i = 0; i < n; ++i) {
            sig[i] += acc;
            acc *= zs[k];
        }
    }
    return sig;
}

Eigen::MatrixXcd dense_hankel(const cvec& sig) {
    const std::size_t n = sig.size();
    const std::size_t l = (n + 2) / 2;
    const std::size_t m = n + 1 - l;
    Eigen::MatrixXcd h(l, m);
    for (std::size_t i = 0; i < l; ++i)
        for (std::size_t j = 0; j < m; ++j)
            h(static_cast<long>(i), static_cast<long>(j)) = sig[i + j];
    return h;
}

Pattern cosine_pattern(const SinusoidModel& model, std::size_t n) {
    std::vector<double> theta(n);
    for (std::size_t i = 0; i < n; ++i)
        theta[i] = model.theta0 + model.step * static_cast<double>(i);
    return make_pattern(model.theta0, model.step, reconstruct(model, theta));
}

SinusoidModel three_peak_model() {
    // dampings sized so every component stays well above the noise floor
    // across the 10..30 degree window
    SinusoidModel model;
    model.theta0 = 10.0;
    model.step = 0.02;
    model.components = {{40.0, 0.06, 2.1, 0.4},
                        {65.0, 0.09, 5.7, -1.1},
                        {25.0, 0.04, 9.3, 2.0}};
    return model;
}

}  // namespace

TEST_SUITE("hlsvd") {

TEST_CASE("analytic signal of a cosine is the complex exponential") {
    // in-band frequency; 123 whole cycles keep the quadrature leakage-free
    const std::size_t n = 1024;
    const double step = 0.02, f = 123.0 / (static_cast<double>(n) * step);
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i)
        v[i] = std::cos(kTwoPi * f * (step * static_cast<double>(i)));
    const Pattern p = make_pattern(0.0, step, std::move(v));
    const cvec h = analytic_signal(p);
    for (std::size_t i = n / 10; i < 9 * n / 10; ++i) {
        const double phase = kTwoPi * f * (step * static_cast<double>(i));
        CHECK(std::abs(h[i] - std::polar(1.0, phase)) < 1e-6);
    }
}

TEST_CASE("analytic signal of a constant is that constant") {
    const Pattern p = make_pattern(0.0, 0.1, std::vector<double>(64, 5.5));
    for (const auto& v : analytic_signal(p)) {
        CHECK(v.real() == doctest::Approx(5.5).epsilon(1e-12));
        CHECK(std::abs(v.imag()) < 1e-10);
    }
}

TEST_CASE("analytic signal keeps the real part") {
    std::mt19937_64 rng(61);
    const Pattern p = make_pattern(0.0, 0.1,
                                   testutil::random_vector(rng, 200, 0.0, 10.0));
    const cvec h = analytic_signal(p);
    for (std::size_t i = 0; i < p.size(); ++i)
        CHECK(std::abs(h[i].real() - p.intensity[i]) <= 1e-10);
}

TEST_CASE("hankel operator shape and dense equivalence on (1,2,3)-like input") {
    // minimum-size variant of the classic 3-sample layout
    cvec sig(9);
    for (std::size_t i = 0; i < 9; ++i)
        sig[i] = {static_cast<double>(i + 1), 0.0};
    const HankelOperator op(sig);
    CHECK(op.rows() == 5);
    CHECK(op.cols() == 5);

    const Eigen::MatrixXcd h = dense_hankel(sig);
    CHECK(h(0, 0) == std::complex<double>(1.0, 0.0));
    CHECK(h(0, 1) == std::complex<double>(2.0, 0.0));
    CHECK(h(1, 1) == std::complex<double>(3.0, 0.0));

    for (long j = 0; j < 5; ++j) {
        Eigen::VectorXcd e = Eigen::VectorXcd::Zero(5);
        e[j] = 1.0;
        const Eigen::VectorXcd col = op.apply(e);
        CHECK((col - h.col(j)).norm() <= 1e-12 * h.col(j).norm());
    }
}

TEST_CASE("fast matvec matches the dense oracle") {
    std::mt19937_64 rng(67);
    cvec sig(64);
    for (auto& v : sig) v = {synth::normal_draw(rng), synth::normal_draw(rng)};
    const HankelOperator op(sig);
    const Eigen::MatrixXcd h = dense_hankel(sig);

    for (int trial = 0; trial < 8; ++trial) {
        Eigen::VectorXcd x(op.cols());
        for (long i = 0; i < x.size(); ++i)
            x[i] = {synth::normal_draw(rng), synth::normal_draw(rng)};
        const Eigen::VectorXcd fast = op.apply(x);
        const Eigen::VectorXcd dense = h * x;
        CHECK((fast - dense).norm() <= 1e-10 * dense.norm());

        Eigen::VectorXcd y(op.rows());
        for (long i = 0; i < y.size(); ++i)
            y[i] = {synth::normal_draw(rng), synth::normal_draw(rng)};
        const Eigen::VectorXcd fast_adj = op.apply_adjoint(y);
        const Eigen::VectorXcd dense_adj = h.adjoint() * y;
        CHECK((fast_adj - dense_adj).norm() <= 1e-10 * dense_adj.norm());

        // adjoint consistency <Hx, y> = <x, H^H y>
        const std::complex<double> lhs = fast.dot(y);
        const std::complex<double> rhs = x.dot(fast_adj);
        CHECK(std::abs(lhs - rhs) <=
              1e-10 * std::max(std::abs(lhs), std::abs(rhs)));
    }
}

TEST_CASE("lanczos detects a rank-1 exponential") {
    const cvec sig =
        exponential_signal({{3.0, 1.0}}, {std::polar(0.985, 0.6)}, 128);
    const HankelOperator op(sig);
    const PartialSVD svd = lanczos_bidiag(op, 4);
    if (svd.rank_used >= 2)
        CHECK(svd.singular_values[1] <= 1e-10 * svd.singular_values[0]);
    else
        CHECK(svd.rank_used == 1);  // exact breakdown after one step
}

TEST_CASE("three well-separated exponentials give exactly three singular values") {
    const cvec sig = exponential_signal(
        {{5.0, 0.0}, {2.0, 1.0}, {1.0, -0.5}},
        {std::polar(0.99, 0.5), std::polar(0.97, 1.3), std::polar(0.995, 2.2)},
        128);
    const HankelOperator op(sig);
    const PartialSVD svd = lanczos_bidiag(op, 8);

    const auto dense = synth::dense_hankel_svd(sig);
    int dense_above = 0;
    for (long i = 0; i < dense.singular_values.size(); ++i)
        if (dense.singular_values[i] > 1e-8 * dense.singular_values[0])
            ++dense_above;
    CHECK(dense_above == 3);

    int lanczos_above = 0;
    for (long i = 0; i < svd.singular_values.size(); ++i)
        if (svd.singular_values[i] > 1e-8 * svd.singular_values[0])
            ++lanczos_above;
    CHECK(lanczos_above == 3);
    for (int i = 0; i < 3; ++i)
        CHECK(std::abs(svd.singular_values[i] - dense.singular_values[i]) <=
              1e-8 * dense.singular_values[i]);
}

TEST_CASE("lanczos singular values match the dense oracle on random data") {
    std::mt19937_64 rng(71);
    cvec sig(64);
    for (auto& v : sig) v = {synth::normal_draw(rng), synth::normal_draw(rng)};
    const HankelOperator op(sig);
    const int rank = 16;
    const PartialSVD svd = lanczos_bidiag(op, rank);
    REQUIRE(svd.rank_used == rank);

    const auto dense = synth::dense_hankel_svd(sig);
    for (int i = 0; i < rank; ++i)
        CHECK(std::abs(svd.singular_values[i] - dense.singular_values[i]) <=
              1e-8 * dense.singular_values[i]);

    // orthonormal factors
    const double iu = (svd.u.adjoint() * svd.u -
                       Eigen::MatrixXcd::Identity(rank, rank))
                          .cwiseAbs()
                          .maxCoeff();
    const double iv = (svd.v.adjoint() * svd.v -
                       Eigen::MatrixXcd::Identity(rank, rank))
                          .cwiseAbs()
                          .maxCoeff();
    CHECK(iu <= 1e-8);
    CHECK(iv <= 1e-8);

    // leading subspace angle against the oracle
    const Eigen::MatrixXcd overlap =
        svd.v.leftCols(6).adjoint() * dense.v.leftCols(6);
    Eigen::JacobiSVD<Eigen::MatrixXcd> angles(overlap);
    CHECK(angles.singularValues().minCoeff() >= 1.0 - 1e-6);
}

TEST_CASE("lanczos rejects out-of-range ranks") {
    const cvec sig(32, {1.0, 0.0});
    const HankelOperator op(sig);
    CHECK_THROWS_AS(lanczos_bidiag(op, 0), DomainError);
    CHECK_THROWS_AS(lanczos_bidiag(op, 17), DomainError);
}

TEST_CASE("single-mode estimates recover frequency and damping") {
    const double step = 0.02, f = 4.0, d = 0.8;
    const std::complex<double> z =
        std::exp(std::complex<double>(-d, kTwoPi * f) * step);
    const cvec sig = exponential_signal({{1.5, 0.7}}, {z}, 256);
    const PartialSVD svd = lanczos_bidiag(HankelOperator(sig), 2);
    const auto modes = estimate_modes(svd, 1, step);
    REQUIRE(modes.size() == 1);
    CHECK(std::abs(modes[0].frequency - f) <= 1e-8 * f);
    CHECK(std::abs(modes[0].damping - d) <= 1e-8 * d);
    CHECK_FALSE(modes[0].growing);
}

TEST_CASE("undamped cosine through the analytic signal") {
    const double step = 0.02, f = 7.3;
    const std::size_t n = 2048;
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i)
        v[i] = std::cos(kTwoPi * f * (10.0 + step * static_cast<double>(i)));
    const Pattern p = make_pattern(10.0, step, std::move(v));
    const PartialSVD svd = lanczos_bidiag(HankelOperator(analytic_signal(p)), 3);
    const auto modes = estimate_modes(svd, 1, step);
    REQUIRE(modes.size() == 1);
    CHECK(std::abs(modes[0].frequency - f) <= 1e-6);
    CHECK(std::abs(modes[0].damping) <= 1e-4);
}

TEST_CASE("constant signal maps to zero frequency and damping") {
    const cvec sig(64, {4.0, 0.0});
    const PartialSVD svd = lanczos_bidiag(HankelOperator(sig), 1);
    const auto modes = estimate_modes(svd, 1, 0.05);
    REQUIRE(modes.size() == 1);
    CHECK(std::abs(modes[0].frequency) <= 1e-9);
    CHECK(std::abs(modes[0].damping) <= 1e-9);
}

TEST_CASE("estimate_modes preconditions") {
    const cvec sig(64, {1.0, 0.0});
    const PartialSVD svd = lanczos_bidiag(HankelOperator(sig), 1);
    CHECK_THROWS_AS(estimate_modes(svd, 5, 0.05), DomainError);
    CHECK_THROWS_AS(estimate_modes(svd, 1, 0.0), DomainError);
}

TEST_CASE("amplitude fit recovers a two-component model from exact modes") {
    SinusoidModel truth;
    truth.theta0 = 10.0;
    truth.step = 0.02;
    truth.components = {{12.0, 0.4, 3.0, 0.7}, {7.0, 0.9, 8.0, -2.2}};
    const Pattern p = cosine_pattern(truth, 512);

    const std::vector<Mode> modes = {{3.0, 0.4, false}, {8.0, 0.9, false}};
    const AmplitudeFit fit = fit_amplitudes(p, modes);
    REQUIRE(fit.model.components.size() == 2);
    for (std::size_t k = 0; k < 2; ++k) {
        CHECK(std::abs(fit.model.components[k].amplitude -
                       truth.components[k].amplitude) <= 1e-8 * 12.0);
        CHECK(std::abs(fit.model.components[k].phase -
                       truth.components[k].phase) <= 1e-8);
    }
    double norm = testutil::l2_norm(p.intensity);
    CHECK(fit.residual_norm <= 1e-10 * norm);
}

TEST_CASE("amplitude fit of zero data is zero") {
    const Pattern p = make_pattern(0.0, 0.05, std::vector<double>(128, 0.0));
    const AmplitudeFit fit = fit_amplitudes(p, {{2.0, 0.1, false}});
    CHECK(fit.model.components[0].amplitude == 0.0);
}

TEST_CASE("a spurious extra mode receives negligible amplitude") {
    SinusoidModel truth;
    truth.theta0 = 10.0;
    truth.step = 0.02;
    truth.components = {{9.0, 0.5, 4.0, 1.0}};
    const Pattern p = cosine_pattern(truth, 512);
    const AmplitudeFit fit =
        fit_amplitudes(p, {{4.0, 0.5, false}, {11.0, 0.3, false}});
    REQUIRE(fit.model.components.size() == 2);
    CHECK(fit.model.components[0].amplitude == doctest::Approx(9.0).epsilon(1e-9));
    CHECK(fit.model.components[1].amplitude <= 1e-8 * 9.0);
}

TEST_CASE("colliding modes are rejected by name") {
    const Pattern p = make_pattern(0.0, 0.05, std::vector<double>(128, 1.0));
    CHECK_THROWS_WITH_AS(
        fit_amplitudes(p, {{4.0, 0.5, false}, {4.0, 0.5, false}}),
        doctest::Contains("collide"), NumericalError);
}

TEST_CASE("full fit recovers all parameters of a noiseless 3-peak pattern") {
    const SinusoidModel truth = three_peak_model();
    const Pattern p = cosine_pattern(truth, 512);
    FitOptions opts;
    opts.k = 3;
    const FitResult fit = hlsvd_fit(p, opts);
    REQUIRE(fit.model.components.size() == 3);
    for (std::size_t k = 0; k < 3; ++k) {
        const auto& est = fit.model.components[k];
        const auto& ref = truth.components[k];
        CAPTURE(k);
        CHECK(std::abs(est.frequency - ref.frequency) <= 1e-6 * ref.frequency);
        CHECK(std::abs(est.damping - ref.damping) <= 1e-6 * ref.damping);
        CHECK(std::abs(est.amplitude - ref.amplitude) <= 1e-6 * ref.amplitude);
        CHECK(std::abs(est.phase - ref.phase) <= 1e-6 * std::abs(ref.phase));
    }
    CHECK(fit.diagnostics.relative_residual <= 1e-9);
}

TEST_CASE("frequencies stay within 1e-3 relative under 1% noise") {
    const SinusoidModel truth = three_peak_model();
    const Pattern clean = cosine_pattern(truth, 1024);
    double peak = 0.0;
    for (double v : clean.intensity) peak = std::max(peak, std::abs(v));

    FitOptions opts;
    opts.k = 3;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        std::mt19937_64 rng(seed);
        Pattern noisy = clean;
        for (auto& v : noisy.intensity)
            v += 0.01 * peak * synth::normal_draw(rng);
        const FitResult fit = hlsvd_fit(noisy, opts);
        REQUIRE(fit.model.components.size() == 3);
        for (std::size_t k = 0; k < 3; ++k) {
            CAPTURE(seed);
            CAPTURE(k);
            CHECK(std::abs(fit.model.components[k].frequency -
                           truth.components[k].frequency) <=
                  1e-3 * truth.components[k].frequency);
        }
    }
}

TEST_CASE("automatic order selection finds K=3") {
    const SinusoidModel truth = three_peak_model();
    const Pattern p = cosine_pattern(truth, 512);
    const FitResult fit = hlsvd_fit(p);  // k = auto
    CHECK(fit.diagnostics.k_auto);
    CHECK(fit.model.components.size() == 3);
    CHECK(fit.diagnostics.complex_rank == 6);  // three conjugate pairs
}

TEST_CASE("fit is equivariant under positive rescaling") {
    const SinusoidModel truth = three_peak_model();
    const Pattern p = cosine_pattern(truth, 512);
    Pattern scaled = p;
    const double s = 37.5;
    for (auto& v : scaled.intensity) v *= s;

    FitOptions opts;
    opts.k = 3;
    const FitResult base = hlsvd_fit(p, opts);
    const FitResult big = hlsvd_fit(scaled, opts);
    REQUIRE(base.model.components.size() == big.model.components.size());
    for (std::size_t k = 0; k < base.model.components.size(); ++k) {
        const auto& a = base.model.components[k];
        const auto& b = big.model.components[k];
        CHECK(std::abs(b.amplitude - s * a.amplitude) <= 1e-9 * s * a.amplitude);
        CHECK(std::abs(b.frequency - a.frequency) <= 1e-9 * a.frequency);
        CHECK(std::abs(b.damping - a.damping) <= 1e-9 * std::max(1.0, a.damping));
        CHECK(std::abs(b.phase - a.phase) <= 1e-9);
    }
}

TEST_CASE("components come out sorted by frequency") {
    const SinusoidModel truth = three_peak_model();
    const Pattern p = cosine_pattern(truth, 512);
    FitOptions opts;
    opts.k = 3;
    const FitResult fit = hlsvd_fit(p, opts);
    for (std::size_t k = 1; k < fit.model.components.size(); ++k)
        CHECK(fit.model.components[k - 1].frequency <
              fit.model.components[k].frequency);
}

TEST_CASE("reconstruct basics") {
    SinusoidModel empty;
    empty.theta0 = 0.0;
    empty.step = 0.1;
    const std::vector<double> theta{0.0, 0.1, 0.2};
    for (double v : reconstruct(empty, theta)) CHECK(v == 0.0);

    SinusoidModel ones;
    ones.step = 0.1;
    ones.components = {{1.0, 0.0, 0.0, 0.0}};
    for (double v : reconstruct(ones, theta))
        CHECK(v == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("round trip: reconstruction stays within the reported residual") {
    const SinusoidModel truth = three_peak_model();
    const Pattern p = cosine_pattern(truth, 512);
    FitOptions opts;
    opts.k = 3;
    const FitResult fit = hlsvd_fit(p, opts);
    const auto recon = reconstruct(fit.model, p.theta);
    double err = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
        err += (recon[i] - p.intensity[i]) * (recon[i] - p.intensity[i]);
    CHECK(std::sqrt(err) <= fit.diagnostics.residual_norm + 1e-9);
}

}  // TEST_SUITE
