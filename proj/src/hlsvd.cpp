#include "xrpd/hlsvd.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "xrpd/errors.hpp"
#include "xrpd/fft.hpp"

namespace xrpd::hlsvd {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_phase(double phi) {
    phi = std::remainder(phi, kTwoPi);  // (-pi, pi]
    if (phi <= -std::numbers::pi) phi += kTwoPi;
    return phi;
}

bool component_less(const SinusoidComponent& a, const SinusoidComponent& b) {
    if (a.frequency != b.frequency) return a.frequency < b.frequency;
    return a.damping < b.damping;
}

}  // namespace

std::vector<double> reconstruct(const SinusoidModel& model,
                                const std::vector<double>& theta) {
    std::vector<double> out(theta.size(), 0.0);
    for (const auto& c : model.components)
        for (std::size_t i = 0; i < theta.size(); ++i)
            out[i] += c.amplitude * std::exp(-c.damping * theta[i]) *
                      std::cos(kTwoPi * c.frequency * theta[i] + c.phase);
    return out;
}

cvec analytic_signal(const Pattern& pattern) {
    validate_pattern(pattern);
    const std::size_t n = pattern.size();
    cvec spec(pattern.intensity.begin(), pattern.intensity.end());
    fft::transform(spec, false);
    // keep DC (and Nyquist for even n), double the positive half, zero the rest
    for (std::size_t k = 1; k < (n + 1) / 2; ++k) spec[k] *= 2.0;
    for (std::size_t k = n / 2 + 1; k < n; ++k) spec[k] = 0.0;
    fft::transform(spec, true);
    // force the real part to the exact input; only the quadrature is synthetic
    for (std::size_t i = 0; i < n; ++i)
        spec[i] = {pattern.intensity[i], spec[i].imag()};
    return spec;
}

HankelOperator::HankelOperator(cvec signal) : signal_(std::move(signal)) {
    const std::size_t n = signal_.size();
    if (n < kMinPatternSize)
        throw SizeError("hankel_operator: need at least " +
                        std::to_string(kMinPatternSize) + " samples");
    l_ = (n + 2) / 2;  // ceil((n + 1) / 2)
    m_ = n + 1 - l_;
    fft_size_ = fft::next_pow2(n + std::max(l_, m_) - 1);
    signal_fft_.assign(fft_size_, 0.0);
    std::copy(signal_.begin(), signal_.end(), signal_fft_.begin());
    fft::transform(signal_fft_, false);
}

// y[i] = sum_j s[i + j] x[j]: a correlation, evaluated as the linear
// convolution of s with the reversed input read at offset len(x) - 1.
Eigen::VectorXcd HankelOperator::apply(const Eigen::VectorXcd& x) const {
    if (static_cast<std::size_t>(x.size()) != m_)
        throw SizeError("hankel apply: expected length " + std::to_string(m_));
    cvec work(fft_size_, 0.0);
    for (std::size_t j = 0; j < m_; ++j) work[j] = x[static_cast<long>(m_ - 1 - j)];
    fft::transform(work, false);
    for (std::size_t i = 0; i < fft_size_; ++i) work[i] *= signal_fft_[i];
    fft::transform(work, true);
    Eigen::VectorXcd y(l_);
    for (std::size_t i = 0; i < l_; ++i) y[static_cast<long>(i)] = work[m_ - 1 + i];
    return y;
}

Eigen::VectorXcd HankelOperator::apply_adjoint(const Eigen::VectorXcd& y) const {
    if (static_cast<std::size_t>(y.size()) != l_)
        throw SizeError("hankel adjoint: expected length " + std::to_string(l_));
    cvec work(fft_size_, 0.0);
    for (std::size_t i = 0; i < l_; ++i)
        work[i] = std::conj(y[static_cast<long>(l_ - 1 - i)]);
    fft::transform(work, false);
    for (std::size_t i = 0; i < fft_size_; ++i) work[i] *= signal_fft_[i];
    fft::transform(work, true);
    Eigen::VectorXcd z(m_);
    for (std::size_t j = 0; j < m_; ++j)
        z[static_cast<long>(j)] = std::conj(work[l_ - 1 + j]);
    return z;
}

namespace {

// Modified Gram-Schmidt sweep (two passes) of w against the first `count`
// columns of basis.
void reorthogonalize(Eigen::VectorXcd& w, const Eigen::MatrixXcd& basis,
                     int count) {
    for (int pass = 0; pass < 2; ++pass)
        for (int j = 0; j < count; ++j)
            w -= basis.col(j) * basis.col(j).dot(w);
}

struct BidiagSVD {
    Eigen::MatrixXd p;  // left singular vectors of B
    Eigen::MatrixXd q;  // right singular vectors of B
    Eigen::VectorXd sigma;
};

// B is su x sv with sv in {su, su + 1}: diagonal alpha, superdiagonal beta.
// The rectangular shape arises when the alpha recursion breaks down while
// the last right vector is still coupled through beta[su - 1].
BidiagSVD svd_of_bidiagonal(const std::vector<double>& alpha,
                            const std::vector<double>& beta, int su, int sv) {
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(su, sv);
    for (int i = 0; i < su; ++i) {
        b(i, i) = alpha[static_cast<std::size_t>(i)];
        if (i + 1 < sv) b(i, i + 1) = beta[static_cast<std::size_t>(i)];
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(b, Eigen::ComputeFullU | Eigen::ComputeFullV);
    return {svd.matrixU(), svd.matrixV(), svd.singularValues()};
}

}  // namespace

PartialSVD lanczos_bidiag(const HankelOperator& op, int max_rank,
                          double reorth_threshold) {
    const std::size_t l = op.rows();
    const std::size_t m = op.cols();
    const int min_lm = static_cast<int>(std::min(l, m));
    if (max_rank < 1 || max_rank > min_lm)
        throw DomainError("lanczos_bidiag: max_rank must be in [1, " +
                          std::to_string(min_lm) + "], got " +
                          std::to_string(max_rank));
    if (reorth_threshold <= 0.0) reorth_threshold = std::sqrt(kEps);

    // Small problems run as far as needed; large ones get a generous cap
    // beyond which the Ritz residual stop must have fired for the leading
    // triplets anyway.
    const int steps_max =
        min_lm <= 256 ? min_lm
                      : std::min(min_lm, std::max(6 * max_rank + 40, 200));
    const double conv_tol = 1e-13;

    Eigen::MatrixXcd us(l, steps_max);
    Eigen::MatrixXcd vs(m, steps_max);
    std::vector<double> alpha, beta;
    alpha.reserve(static_cast<std::size_t>(steps_max));
    beta.reserve(static_cast<std::size_t>(steps_max));

    // deterministic start vector
    std::mt19937_64 rng(0x9e3779b97f4a7c15ULL);
    Eigen::VectorXcd v0(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double u1 =
            (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
        const double u2 = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        v0[static_cast<long>(i)] =
            std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
    }
    v0.normalize();
    vs.col(0) = v0;

    Eigen::VectorXcd p = op.apply(v0);
    double a = p.norm();
    double norm_scale = a;  // grows into a Frobenius-ish estimate of ||H||
    bool breakdown = false;
    int s = 0;  // completed (u, v) pairs

    if (a <= kEps * static_cast<double>(m)) {
        breakdown = true;
    } else {
        us.col(0) = p / a;
        alpha.push_back(a);
        s = 1;
    }

    // orthogonality-loss estimates: mu[j] ~ |<u_s, u_j>|, nu[j] ~ |<v_s, v_j>|
    std::vector<double> mu{1.0}, nu{1.0};
    bool full_mode = false;
    bool dangling_v = false;  // v_s exists but the alpha recursion ended
    int triggers = 0;

    while (!breakdown && s < steps_max) {
        const int k = s - 1;  // index of the newest completed pair
        const double tiny = kEps * std::max(norm_scale, 1.0);
        const double breakdown_tol =
            kEps * static_cast<double>(std::max(l, m)) * std::max(norm_scale, 1.0);

        // --- right step: r = H^H u_k - alpha_k v_k
        Eigen::VectorXcd r = op.apply_adjoint(us.col(k)) -
                             alpha[static_cast<std::size_t>(k)] * vs.col(k);
        double beta_raw = r.norm();
        std::vector<double> nu_next(static_cast<std::size_t>(s) + 1, kEps);
        {
            const double denom = std::max(beta_raw, tiny);
            const double fudge = kEps * (norm_scale / denom + 1.0);
            for (int j = 0; j < k; ++j) {
                double num = alpha[static_cast<std::size_t>(j)] *
                             mu[static_cast<std::size_t>(j)];
                if (j > 0)
                    num += beta[static_cast<std::size_t>(j - 1)] *
                           mu[static_cast<std::size_t>(j - 1)];
                num -= alpha[static_cast<std::size_t>(k)] *
                       nu[static_cast<std::size_t>(j)];
                nu_next[static_cast<std::size_t>(j)] = std::abs(num) / denom + fudge;
            }
            nu_next[static_cast<std::size_t>(k)] = fudge;
        }
        double worst = 0.0;
        for (int j = 0; j < s; ++j)
            worst = std::max(worst, nu_next[static_cast<std::size_t>(j)]);
        if (full_mode || worst > reorth_threshold) {
            reorthogonalize(r, vs, s);
            ++triggers;
            std::fill(nu_next.begin(), nu_next.end(), kEps);
        }
        const double b = r.norm();
        if (b <= breakdown_tol) {
            breakdown = true;
            break;
        }
        beta.push_back(b);
        vs.col(s) = r / b;
        norm_scale = std::hypot(norm_scale, b);
        nu_next[static_cast<std::size_t>(s)] = 1.0;

        // Ritz residual stop: the coupling to v_{s+1} bounds the error of
        // the leading triplets of the current s-step factorization.
        if (s >= max_rank && (s % 4 == 0 || s == steps_max - 1)) {
            BidiagSVD bsvd = svd_of_bidiagonal(alpha, beta, s, s);
            const double sigma1 = bsvd.sigma[0];
            bool done = sigma1 > 0.0;
            const int want = std::min(max_rank, s);
            for (int i = 0; i < want && done; ++i)
                if (b * std::abs(bsvd.p(s - 1, i)) > conv_tol * sigma1)
                    done = false;
            if (done) break;
        }

        // --- left step: p = H v_s - beta_{k} u_k
        p = op.apply(vs.col(s)) - b * us.col(k);
        double alpha_raw = p.norm();
        std::vector<double> mu_next(static_cast<std::size_t>(s) + 1, kEps);
        {
            const double denom = std::max(alpha_raw, tiny);
            const double fudge = kEps * (norm_scale / denom + 1.0);
            for (int j = 0; j < s; ++j) {
                double num = alpha[static_cast<std::size_t>(j)] *
                             nu_next[static_cast<std::size_t>(j)];
                num += beta[static_cast<std::size_t>(j)] *
                       nu_next[static_cast<std::size_t>(j + 1)];
                num -= b * mu[static_cast<std::size_t>(j)];
                mu_next[static_cast<std::size_t>(j)] = std::abs(num) / denom + fudge;
            }
        }
        worst = 0.0;
        for (int j = 0; j < s; ++j)
            worst = std::max(worst, mu_next[static_cast<std::size_t>(j)]);
        if (full_mode || worst > reorth_threshold) {
            reorthogonalize(p, us, s);
            ++triggers;
            std::fill(mu_next.begin(), mu_next.end(), kEps);
        }
        a = p.norm();
        if (a <= breakdown_tol) {
            // v_s stays coupled through beta[s-1]: B becomes s x (s+1)
            dangling_v = true;
            breakdown = true;
            break;
        }
        alpha.push_back(a);
        us.col(s) = p / a;
        norm_scale = std::hypot(norm_scale, a);
        mu_next[static_cast<std::size_t>(s)] = 1.0;
        ++s;

        if (2 * triggers > s) full_mode = true;
        mu = std::move(mu_next);
        nu = std::move(nu_next);
    }

    if (s == 0) {
        // zero operator: no triplets at all
        PartialSVD out;
        out.breakdown = true;
        return out;
    }

    const int sv = dangling_v ? s + 1 : s;
    BidiagSVD bsvd = svd_of_bidiagonal(alpha, beta, s, sv);
    const double sigma1 = bsvd.sigma[0];
    int rank = std::min(max_rank, s);
    while (rank > 0 && bsvd.sigma[rank - 1] <= sigma1 * 1e-15) --rank;
    if (rank == 0) rank = 1;

    PartialSVD out;
    out.rank_used = rank;
    out.breakdown = breakdown || rank < max_rank;
    out.singular_values = bsvd.sigma.head(rank);
    out.u = us.leftCols(s) * bsvd.p.leftCols(rank);
    out.v = vs.leftCols(sv) * bsvd.q.leftCols(rank);
    return out;
}

std::vector<Mode> estimate_modes(const PartialSVD& svd, int k, double step) {
    if (k < 1 || k > svd.rank_used)
        throw DomainError("estimate_modes: k must be in [1, " +
                          std::to_string(svd.rank_used) + "], got " +
                          std::to_string(k));
    if (!(step > 0.0)) throw DomainError("estimate_modes: step must be positive");
    const long m = svd.v.rows();
    if (m - 1 < k)
        throw NumericalError("estimate_modes: shift system is under-determined");

    Eigen::MatrixXcd vk = svd.v.leftCols(k);
    Eigen::MatrixXcd vtop = vk.topRows(m - 1);
    Eigen::MatrixXcd vbot = vk.bottomRows(m - 1);

    Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(vtop);
    if (qr.rank() < k) {
        const auto& rdiag = qr.matrixR();
        throw NumericalError(
            "estimate_modes: singular shift system, condition ~ " +
            std::to_string(std::abs(rdiag(0, 0)) /
                           std::max(std::abs(rdiag(k - 1, k - 1)), 1e-300)));
    }
    Eigen::MatrixXcd eh = qr.solve(vbot);  // E^H

    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(eh.adjoint());
    if (es.info() != Eigen::Success)
        throw NumericalError("estimate_modes: eigen decomposition failed");

    std::vector<Mode> modes;
    modes.reserve(static_cast<std::size_t>(k));
    for (long i = 0; i < k; ++i) {
        const std::complex<double> z = es.eigenvalues()[i];
        const double mag = std::max(std::abs(z), 1e-12);
        Mode mode;
        mode.frequency = std::arg(z) / (kTwoPi * step);
        mode.damping = -std::log(mag) / step;
        mode.growing = std::abs(z) > 1.0;
        modes.push_back(mode);
    }
    std::sort(modes.begin(), modes.end(), [](const Mode& a, const Mode& b) {
        if (a.frequency != b.frequency) return a.frequency < b.frequency;
        return a.damping < b.damping;
    });
    return modes;
}

AmplitudeFit fit_amplitudes(const Pattern& pattern,
                            const std::vector<Mode>& modes) {
    validate_pattern(pattern);
    if (modes.empty()) throw DomainError("fit_amplitudes: no modes given");
    const std::size_t n = pattern.size();
    const double span = pattern.theta.back() - pattern.theta.front();

    // duplicate (colliding) modes make the design matrix rank deficient
    for (std::size_t i = 0; i < modes.size(); ++i)
        for (std::size_t j = i + 1; j < modes.size(); ++j) {
            const auto zi = std::exp(std::complex<double>(-modes[i].damping,
                                                          kTwoPi * modes[i].frequency) *
                                     pattern.step);
            const auto zj = std::exp(std::complex<double>(-modes[j].damping,
                                                          kTwoPi * modes[j].frequency) *
                                     pattern.step);
            if (std::abs(zi - zj) <=
                1e-10 * std::max({1.0, std::abs(zi), std::abs(zj)}))
                throw NumericalError(
                    "fit_amplitudes: modes " + std::to_string(i) + " and " +
                    std::to_string(j) + " collide (f=" +
                    std::to_string(modes[i].frequency) + ", d=" +
                    std::to_string(modes[i].damping) + ")");
        }

    // an oscillation below ~1e-6 radians across the window cannot be
    // resolved from its quadrature; such modes get a single basis column
    std::vector<bool> oscillating(modes.size());
    std::size_t ncols = 0;
    for (std::size_t k = 0; k < modes.size(); ++k) {
        oscillating[k] = kTwoPi * std::abs(modes[k].frequency) * span > 1e-6;
        ncols += oscillating[k] ? 2 : 1;
    }

    Eigen::MatrixXd design(n, ncols);
    {
        std::size_t col = 0;
        for (std::size_t k = 0; k < modes.size(); ++k) {
            for (std::size_t i = 0; i < n; ++i) {
                const double th = pattern.theta[i];
                const double env = std::exp(-modes[k].damping * th);
                const double w = kTwoPi * modes[k].frequency * th;
                if (oscillating[k]) {
                    design(i, col) = env * std::cos(w);
                    design(i, col + 1) = -env * std::sin(w);
                } else {
                    design(i, col) = env;
                }
            }
            col += oscillating[k] ? 2 : 1;
        }
    }

    Eigen::Map<const Eigen::VectorXd> rhs(pattern.intensity.data(),
                                          static_cast<long>(n));
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (qr.rank() < static_cast<long>(ncols))
        throw NumericalError("fit_amplitudes: rank-deficient design matrix (" +
                             std::to_string(qr.rank()) + " < " +
                             std::to_string(ncols) + ")");
    Eigen::VectorXd x = qr.solve(rhs);

    const auto& rmat = qr.matrixR();
    const double condition =
        std::abs(rmat(0, 0)) /
        std::max(std::abs(rmat(static_cast<long>(ncols) - 1,
                               static_cast<long>(ncols) - 1)),
                 1e-300);

    AmplitudeFit fit;
    fit.condition = condition;
    fit.residual_norm = (design * x - rhs).norm();
    fit.model.theta0 = pattern.theta0();
    fit.model.step = pattern.step;
    {
        std::size_t col = 0;
        for (std::size_t k = 0; k < modes.size(); ++k) {
            SinusoidComponent c;
            c.frequency = modes[k].frequency;
            c.damping = modes[k].damping;
            if (oscillating[k]) {
                const double pc = x[static_cast<long>(col)];
                const double qc = x[static_cast<long>(col + 1)];
                c.amplitude = std::hypot(pc, qc);
                c.phase = c.amplitude > 0.0 ? wrap_phase(std::atan2(qc, pc)) : 0.0;
                col += 2;
            } else {
                const double pc = x[static_cast<long>(col)];
                c.amplitude = std::abs(pc);
                c.phase = pc >= 0.0 ? 0.0 : std::numbers::pi;
                col += 1;
            }
            fit.model.components.push_back(c);
        }
    }
    std::sort(fit.model.components.begin(), fit.model.components.end(),
              component_less);
    return fit;
}

namespace {

// Merge the conjugate mode pairs of a real signal into cosine modes.
// Positive-frequency modes are matched to their mirror images in z-space;
// near-zero frequencies stand alone.
std::vector<Mode> pair_conjugate_modes(const std::vector<Mode>& modes,
                                       double step) {
    const double f_tol = 1e-9 / step;
    std::vector<const Mode*> pos, neg;
    std::vector<Mode> out;
    for (const auto& mode : modes) {
        if (mode.frequency > f_tol)
            pos.push_back(&mode);
        else if (mode.frequency < -f_tol)
            neg.push_back(&mode);
        else
            out.push_back(mode);  // self-conjugate
    }
    std::vector<bool> used(neg.size(), false);
    auto z_of = [step](double f, double d) {
        return std::exp(std::complex<double>(-d, kTwoPi * f) * step);
    };
    for (const Mode* pm : pos) {
        const auto zp = z_of(pm->frequency, pm->damping);
        long best = -1;
        double best_dist = std::numeric_limits<double>::max();
        for (std::size_t i = 0; i < neg.size(); ++i) {
            if (used[i]) continue;
            const double dist =
                std::abs(zp - std::conj(z_of(neg[i]->frequency, neg[i]->damping)));
            if (dist < best_dist) {
                best_dist = dist;
                best = static_cast<long>(i);
            }
        }
        Mode merged = *pm;
        if (best >= 0 && best_dist < 0.5) {
            used[static_cast<std::size_t>(best)] = true;
            const Mode& nm = *neg[static_cast<std::size_t>(best)];
            merged.frequency = 0.5 * (pm->frequency - nm.frequency);
            merged.damping = 0.5 * (pm->damping + nm.damping);
            merged.growing = pm->growing || nm.growing;
        }
        out.push_back(merged);
    }
    for (std::size_t i = 0; i < neg.size(); ++i) {
        if (used[i]) continue;
        Mode mirrored = *neg[i];  // cosine is even: reflect lone negatives
        mirrored.frequency = -mirrored.frequency;
        out.push_back(mirrored);
    }

    std::sort(out.begin(), out.end(), [](const Mode& a, const Mode& b) {
        return a.frequency < b.frequency;
    });
    // collapse collisions that would make the amplitude solve singular
    std::vector<Mode> dedup;
    for (const auto& mode : out) {
        if (!dedup.empty()) {
            const auto za = z_of(dedup.back().frequency, dedup.back().damping);
            const auto zb = z_of(mode.frequency, mode.damping);
            if (std::abs(za - zb) <= 1e-9 * std::max({1.0, std::abs(za), std::abs(zb)}))
                continue;
        }
        dedup.push_back(mode);
    }
    return dedup;
}

}  // namespace

FitResult hlsvd_fit(const Pattern& pattern, const FitOptions& options) {
    validate_pattern(pattern);
    const bool pairs = options.bridge == Bridge::conjugate_pairs;

    cvec signal;
    if (pairs)
        signal.assign(pattern.intensity.begin(), pattern.intensity.end());
    else
        signal = analytic_signal(pattern);

    HankelOperator op(signal);
    const int min_lm = static_cast<int>(std::min(op.rows(), op.cols()));
    const bool k_auto = options.k <= 0;

    int request;
    if (k_auto) {
        request = std::min(std::max(options.max_gap_rank, 2), min_lm);
    } else {
        const int needed = pairs ? 2 * options.k : options.k;
        if (needed > min_lm)
            throw DomainError("hlsvd_fit: k=" + std::to_string(options.k) +
                              " exceeds the rank available from " +
                              std::to_string(pattern.size()) + " samples");
        request = needed;
    }

    PartialSVD svd = lanczos_bidiag(op, request, options.reorth_threshold);
    if (svd.rank_used < 1)
        throw NumericalError("hlsvd_fit: no usable singular triplets");

    int complex_rank;
    int gap_index = 0;
    if (k_auto) {
        if (svd.breakdown && svd.rank_used < request) {
            // Krylov space exhausted: the exact rank, minus round-off tail
            complex_rank = svd.rank_used;
            while (complex_rank > 1 &&
                   svd.singular_values[complex_rank - 1] <=
                       1e-12 * svd.singular_values[0])
                --complex_rank;
        } else {
            complex_rank = 1;
            double best = 0.0;
            for (int g = 1; g < svd.rank_used; ++g) {
                const double ratio =
                    svd.singular_values[g - 1] /
                    std::max(svd.singular_values[g], 1e-300);
                if (ratio > best) {
                    best = ratio;
                    complex_rank = g;
                }
            }
            gap_index = complex_rank;
        }
    } else {
        complex_rank = std::min(pairs ? 2 * options.k : options.k, svd.rank_used);
    }

    std::vector<Mode> modes = estimate_modes(svd, complex_rank, pattern.step);
    int growing = 0;
    for (const auto& mode : modes)
        if (mode.growing) ++growing;

    std::vector<Mode> cosine_modes =
        pairs ? pair_conjugate_modes(modes, pattern.step) : modes;
    // drop modes whose envelope underflows on this grid: their design
    // column would be identically zero
    const double theta_lo = pattern.theta.front();
    const double theta_hi = pattern.theta.back();
    std::erase_if(cosine_modes, [&](const Mode& mode) {
        const double exponent =
            std::max(-mode.damping * theta_lo, -mode.damping * theta_hi);
        return exponent < -450.0;
    });
    if (cosine_modes.empty())
        throw NumericalError("hlsvd_fit: all estimated modes are degenerate");
    AmplitudeFit afit = fit_amplitudes(pattern, cosine_modes);

    FitResult result;
    result.model = std::move(afit.model);
    result.diagnostics.singular_values = svd.singular_values;
    result.diagnostics.complex_rank = complex_rank;
    result.diagnostics.k_auto = k_auto;
    result.diagnostics.gap_index = gap_index;
    result.diagnostics.condition = afit.condition;
    result.diagnostics.growing_modes = growing;
    result.diagnostics.residual_norm = afit.residual_norm;
    double signal_norm = 0.0;
    for (double v : pattern.intensity) signal_norm += v * v;
    signal_norm = std::sqrt(signal_norm);
    result.diagnostics.relative_residual =
        signal_norm > 0.0 ? afit.residual_norm / signal_norm : 0.0;
    return result;
}

}  // namespace xrpd::hlsvd
