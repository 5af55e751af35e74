#include "xrpd/wavelet.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "xrpd/errors.hpp"

namespace xrpd::wavelet {

namespace {

// Extremal-phase Daubechies low-pass filters, orthonormal convention.
// Starting values only; the Newton polish below takes them to full
// double precision under the sum(c^2) = 2 normalization.
const std::vector<std::vector<double>> kStartLowpass = {
    {0.7071067811865476, 0.7071067811865476},
    {0.4829629131445341, 0.8365163037378079, 0.2241438680420134,
     -0.1294095225512604},
    {0.3326705529500826, 0.8068915093110928, 0.4598775021184915,
     -0.1350110200102546, -0.0854412738820267, 0.0352262918857096},
    {0.2303778133088965, 0.7148465705529157, 0.6308807679298589,
     -0.0279837694168599, -0.1870348117190931, 0.0308413818355607,
     0.0328830116668852, -0.0105974017850690},
    {0.1601023979741929, 0.6038292697971898, 0.7243085284377729,
     0.1384281459013204, -0.2422948870663824, -0.0322448695846381,
     0.0775714938400459, -0.0062414902127983, -0.0125807519990820,
     0.0033357252854738},
    {0.1115407433501095, 0.4946238903984533, 0.7511339080210959,
     0.3152503517091982, -0.2262646939654400, -0.1297668675672625,
     0.0975016055873225, 0.0275228655303053, -0.0315820393174862,
     0.0005538422011614, 0.0047772575109455, -0.0010773010853085}};

// Regularity exponents for orders 1..6 (Haar has none).
const double kRegularity[] = {0.0, 0.500, 0.915, 1.275, 1.596, 1.888};

double int_pow(double base, int e) {
    if (e == 0) return 1.0;  // 0^0 = 1 by convention in the moment sums
    double r = 1.0;
    for (int i = 0; i < e; ++i) r *= base;
    return r;
}

// Residual of the defining system: N shift-orthogonality equations
// (including the sum(c^2) = 2 normalization) and N vanishing moments.
Eigen::VectorXd constraint_residual(const Eigen::VectorXd& c, int order) {
    const int len = 2 * order;
    Eigen::VectorXd f(len);
    for (int m = 0; m < order; ++m) {
        double s = 0.0;
        for (int k = 0; k + 2 * m < len; ++k) s += c[k] * c[k + 2 * m];
        f[m] = s - (m == 0 ? 2.0 : 0.0);
    }
    for (int m = 0; m < order; ++m) {
        double s = 0.0;
        for (int k = 0; k < len; ++k)
            s += (k % 2 == 0 ? 1.0 : -1.0) * int_pow(double(k), m) * c[k];
        f[order + m] = s;
    }
    return f;
}

Eigen::MatrixXd constraint_jacobian(const Eigen::VectorXd& c, int order) {
    const int len = 2 * order;
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(len, len);
    for (int m = 0; m < order; ++m) {
        for (int k = 0; k < len; ++k) {
            if (k + 2 * m < len) j(m, k) += c[k + 2 * m];
            if (k - 2 * m >= 0) j(m, k) += c[k - 2 * m];
        }
    }
    for (int m = 0; m < order; ++m)
        for (int k = 0; k < len; ++k)
            j(order + m, k) = (k % 2 == 0 ? 1.0 : -1.0) * int_pow(double(k), m);
    return j;
}

// One analysis step with periodic wrapping: splits s into approximation
// and detail halves. Filters are the stored c, b scaled by 1/sqrt(2) so the
// step is orthonormal (energy preserving).
void dwt_step(const std::vector<double>& s, const WaveletBasis& basis,
              std::vector<double>& approx, std::vector<double>& detail) {
    const std::size_t n = s.size();
    const std::size_t half = n / 2;
    const std::size_t flen = basis.filter_length();
    const double scale = 1.0 / std::sqrt(2.0);
    approx.assign(half, 0.0);
    detail.assign(half, 0.0);
    for (std::size_t i = 0; i < half; ++i) {
        double a = 0.0, d = 0.0;
        for (std::size_t k = 0; k < flen; ++k) {
            const double v = s[(2 * i + k) % n];
            a += basis.lowpass[k] * v;
            d += basis.highpass[k] * v;
        }
        approx[i] = a * scale;
        detail[i] = d * scale;
    }
}

// Transpose of dwt_step; exact inverse for orthonormal filters.
std::vector<double> idwt_step(const std::vector<double>& approx,
                              const std::vector<double>& detail,
                              const WaveletBasis& basis) {
    const std::size_t half = approx.size();
    const std::size_t n = 2 * half;
    const std::size_t flen = basis.filter_length();
    const double scale = 1.0 / std::sqrt(2.0);
    std::vector<double> s(n, 0.0);
    for (std::size_t i = 0; i < half; ++i) {
        const double a = approx[i] * scale;
        const double d = detail[i] * scale;
        for (std::size_t k = 0; k < flen; ++k)
            s[(2 * i + k) % n] += basis.lowpass[k] * a + basis.highpass[k] * d;
    }
    return s;
}

// Index into the symmetric (mirror, edge repeated) extension of x.
double mirror_at(const std::vector<double>& x, std::size_t j) {
    const std::size_t n = x.size();
    const std::size_t m = j % (2 * n);
    return m < n ? x[m] : x[2 * n - 1 - m];
}

}  // namespace

WaveletBasis daubechies_filter(int order) {
    if (order < kMinOrder || order > kMaxOrder)
        throw DomainError("daubechies_filter: order must be in [" +
                          std::to_string(kMinOrder) + ", " +
                          std::to_string(kMaxOrder) + "], got " +
                          std::to_string(order));
    const int len = 2 * order;
    Eigen::VectorXd c(len);
    for (int k = 0; k < len; ++k)
        c[k] = kStartLowpass[order - 1][k] * std::sqrt(2.0);

    for (int it = 0; it < 50; ++it) {
        Eigen::VectorXd f = constraint_residual(c, order);
        if (f.lpNorm<Eigen::Infinity>() < 1e-14) break;
        Eigen::MatrixXd j = constraint_jacobian(c, order);
        c -= j.fullPivLu().solve(f);
    }
    if (constraint_residual(c, order).lpNorm<Eigen::Infinity>() > 1e-12)
        throw NumericalError("daubechies_filter: constraint solve failed for order " +
                             std::to_string(order));

    WaveletBasis basis;
    basis.order = order;
    basis.regularity = kRegularity[order - 1];
    basis.lowpass.assign(c.data(), c.data() + len);
    basis.highpass.resize(len);
    for (int k = 0; k < len; ++k)
        basis.highpass[k] =
            (k % 2 == 0 ? 1.0 : -1.0) * basis.lowpass[len - 1 - k];
    return basis;
}

std::size_t WaveletCoeffs::signal_length() const {
    std::size_t n = approx.size();
    for (const auto& d : details) n += d.size();
    return n;
}

WaveletCoeffs dwt(const std::vector<double>& signal, const WaveletBasis& basis,
                  int levels) {
    if (levels < 1) throw DomainError("dwt: levels must be >= 1");
    const std::size_t n = signal.size();
    if (n == 0 || n % (std::size_t(1) << levels) != 0)
        throw SizeError("dwt: signal length " + std::to_string(n) +
                        " not divisible by 2^" + std::to_string(levels));
    std::size_t coarsest = n >> levels;
    if (2 * coarsest < basis.filter_length())
        throw SizeError("dwt: coarsest level too short for order " +
                        std::to_string(basis.order) + " filters");

    WaveletCoeffs out;
    out.levels = levels;
    out.details.resize(levels);
    std::vector<double> current = signal;
    for (int lv = 0; lv < levels; ++lv) {
        std::vector<double> approx, detail;
        dwt_step(current, basis, approx, detail);
        out.details[levels - 1 - lv] = std::move(detail);  // coarse -> fine
        current = std::move(approx);
    }
    out.approx = std::move(current);
    return out;
}

std::vector<double> idwt(const WaveletCoeffs& coeffs, const WaveletBasis& basis) {
    if (coeffs.levels < 1 ||
        coeffs.details.size() != static_cast<std::size_t>(coeffs.levels))
        throw SizeError("idwt: level count does not match detail bands");
    std::vector<double> current = coeffs.approx;
    for (int lv = 0; lv < coeffs.levels; ++lv) {
        const auto& detail = coeffs.details[lv];
        if (detail.size() != current.size())
            throw SizeError("idwt: detail band " + std::to_string(lv) +
                            " has length " + std::to_string(detail.size()) +
                            ", expected " + std::to_string(current.size()));
        current = idwt_step(current, detail, basis);
    }
    return current;
}

double estimate_noise_sigma(const WaveletCoeffs& coeffs) {
    if (coeffs.details.empty() || coeffs.details.back().empty())
        throw SizeError("estimate_noise_sigma: no finest detail band");
    std::vector<double> mags = coeffs.details.back();
    for (auto& v : mags) v = std::abs(v);
    const std::size_t mid = mags.size() / 2;
    std::nth_element(mags.begin(), mags.begin() + mid, mags.end());
    double med = mags[mid];
    if (mags.size() % 2 == 0) {
        std::nth_element(mags.begin(), mags.begin() + (mid - 1), mags.end());
        med = 0.5 * (med + mags[mid - 1]);
    }
    return med / 0.6745;
}

int default_levels(std::size_t n) {
    int log2n = 0;
    while ((std::size_t(1) << (log2n + 1)) <= n) ++log2n;
    return std::max(1, std::min(4, log2n - 2));
}

DenoiseResult denoise(const Pattern& pattern, const WaveletBasis& basis,
                      int levels) {
    validate_pattern(pattern);
    if (levels < 1) throw DomainError("denoise: levels must be >= 1");
    const std::size_t n = pattern.size();
    const std::size_t block = std::size_t(1) << levels;
    const std::size_t padded = ((n + block - 1) / block) * block;
    if (block > padded || (padded >> levels) * 2 < basis.filter_length())
        throw DomainError("denoise: " + std::to_string(levels) +
                          " levels exceed what " + std::to_string(n) +
                          " samples support");

    std::vector<double> ext(padded);
    for (std::size_t i = 0; i < padded; ++i)
        ext[i] = mirror_at(pattern.intensity, i);

    WaveletCoeffs coeffs = dwt(ext, basis, levels);
    const double sigma = estimate_noise_sigma(coeffs);
    const double threshold =
        sigma * std::sqrt(2.0 * std::log(static_cast<double>(n)));

    for (auto& band : coeffs.details)
        for (auto& d : band) {
            const double mag = std::abs(d) - threshold;
            d = mag > 0.0 ? (d > 0.0 ? mag : -mag) : 0.0;
        }

    std::vector<double> rec = idwt(coeffs, basis);
    rec.resize(n);

    DenoiseResult result;
    result.sigma = sigma;
    result.threshold = threshold;
    result.levels = levels;
    result.denoised = pattern;
    result.denoised.intensity = std::move(rec);
    result.noise = pattern;
    for (std::size_t i = 0; i < n; ++i)
        result.noise.intensity[i] =
            pattern.intensity[i] - result.denoised.intensity[i];
    return result;
}

}  // namespace xrpd::wavelet
