#pragma once

#include <Eigen/Core>
#include <complex>
#include <cstddef>
#include <vector>

#include "xrpd/pattern.hpp"

namespace xrpd::hlsvd {

using cvec = std::vector<std::complex<double>>;

/// One damped cosine: a * exp(-d * theta) * cos(2 pi f * theta + phi).
/// Amplitude is non-negative; sign lives in the phase.
struct SinusoidComponent {
    double amplitude = 0.0;  // a_k
    double damping = 0.0;    // d_k, 1/degrees
    double frequency = 0.0;  // f_k, cycles/degree
    double phase = 0.0;      // phi_k in (-pi, pi]
};

/// Sum of damped cosines over a uniform grid, components sorted by
/// frequency (ties broken by damping).
struct SinusoidModel {
    std::vector<SinusoidComponent> components;
    double theta0 = 0.0;
    double step = 0.0;
};

/// Evaluates the model on a grid.
std::vector<double> reconstruct(const SinusoidModel& model,
                                const std::vector<double>& theta);

/// Discrete analytic signal via FFT half-spectrum doubling. The real part
/// reproduces the input exactly; the quadrature part is approximate near
/// the grid edges for non-periodic content.
cvec analytic_signal(const Pattern& pattern);

/// Hankel matrix H[i][j] = signal[i + j] of shape L x M, L + M = N + 1,
/// applied matrix-free: matvec and adjoint-matvec run through FFT-based
/// fast convolution in O((L+M) log(L+M)).
class HankelOperator {
public:
    explicit HankelOperator(cvec signal);

    std::size_t rows() const { return l_; }
    std::size_t cols() const { return m_; }
    const cvec& signal() const { return signal_; }

    Eigen::VectorXcd apply(const Eigen::VectorXcd& x) const;          // H x
    Eigen::VectorXcd apply_adjoint(const Eigen::VectorXcd& y) const;  // H^H y

private:
    cvec signal_;
    std::size_t l_ = 0;
    std::size_t m_ = 0;
    std::size_t fft_size_ = 0;
    cvec signal_fft_;  // forward transform of the padded signal
};

/// Leading singular triplets. Columns of u and v are orthonormal;
/// singular values are positive and non-increasing.
struct PartialSVD {
    Eigen::MatrixXcd u;               // L x rank_used
    Eigen::MatrixXcd v;               // M x rank_used
    Eigen::VectorXd singular_values;  // rank_used
    int rank_used = 0;
    bool breakdown = false;  // Krylov space exhausted before max_rank
};

/// Golub-Kahan-Lanczos bidiagonalization with partial reorthogonalization:
/// orthogonality loss is tracked with the classical coupled recurrences and
/// a reorthogonalization sweep fires once an estimate crosses the
/// threshold (default sqrt of machine epsilon). Falls back to
/// reorthogonalizing every step when more than half the steps trigger.
PartialSVD lanczos_bidiag(const HankelOperator& op, int max_rank,
                          double reorth_threshold = 0.0);

/// (frequency, damping) of one complex mode; growing marks |z| > 1.
struct Mode {
    double frequency = 0.0;
    double damping = 0.0;
    bool growing = false;
};

/// Shift-equation mode estimates: least-squares solve of
/// V_top E^H = V_bottom, then eigenvalues z_k of E mapped through
/// z_k = exp((-d_k + i 2 pi f_k) * step).
std::vector<Mode> estimate_modes(const PartialSVD& svd, int k, double step);

struct AmplitudeFit {
    SinusoidModel model;
    double residual_norm = 0.0;   // ||design * x - intensity||_2
    double condition = 0.0;       // design-matrix condition estimate
};

/// Linear least-squares amplitudes and phases for fixed modes, two real
/// basis columns per oscillating mode (one for frequency ~ 0).
AmplitudeFit fit_amplitudes(const Pattern& pattern,
                            const std::vector<Mode>& modes);

/// How the real cosine model is bridged to complex exponentials.
/// conjugate_pairs works on the raw real samples, whose Hankel matrix is
/// exactly rank 2K for K damped cosines, and merges the conjugate mode
/// pairs afterwards; analytic estimates K modes from the analytic signal
/// (approximate near edges, kept for diagnostics and comparisons).
enum class Bridge { conjugate_pairs, analytic };

struct FitOptions {
    int k = 0;  // number of cosine components; 0 selects by singular-value gap
    Bridge bridge = Bridge::conjugate_pairs;
    int max_gap_rank = 20;  // gap search span for automatic selection
    double reorth_threshold = 0.0;
};

struct FitDiagnostics {
    Eigen::VectorXd singular_values;  // leading values computed
    int complex_rank = 0;             // modes used before pairing
    bool k_auto = false;
    int gap_index = 0;                // argmax of consecutive ratios (auto only)
    double residual_norm = 0.0;
    double relative_residual = 0.0;
    double condition = 0.0;
    int growing_modes = 0;            // flagged |z| > 1 modes retained
};

struct FitResult {
    SinusoidModel model;
    FitDiagnostics diagnostics;
};

/// End-to-end fit: Hankel embedding, Lanczos partial SVD, shift-equation
/// modes, linear amplitude solve. Reconstruction residual is reported in
/// the diagnostics.
FitResult hlsvd_fit(const Pattern& pattern, const FitOptions& options = {});

}  // namespace xrpd::hlsvd
