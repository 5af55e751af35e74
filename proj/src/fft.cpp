#include "xrpd/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>

#include "xrpd/errors.hpp"

namespace xrpd::fft {

namespace {

// FFTW planning is not thread-safe; execution on distinct arrays is.
// Plans are created UNALIGNED so they can run on any heap buffer.
class PlanCache {
public:
    fftw_plan get(std::size_t n, int sign) {
        std::lock_guard<std::mutex> lock(mutex_);
        auto key = std::make_pair(n, sign);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;
        std::vector<std::complex<double>> tmp(n);
        fftw_plan plan = fftw_plan_dft_1d(
            static_cast<int>(n), reinterpret_cast<fftw_complex*>(tmp.data()),
            reinterpret_cast<fftw_complex*>(tmp.data()), sign,
            FFTW_ESTIMATE | FFTW_UNALIGNED);
        if (!plan) throw NumericalError("fftw plan creation failed");
        plans_.emplace(key, plan);
        return plan;
    }

    ~PlanCache() {
        for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
    }

private:
    std::mutex mutex_;
    std::map<std::pair<std::size_t, int>, fftw_plan> plans_;
};

PlanCache& cache() {
    static PlanCache c;
    return c;
}

}  // namespace

void transform(cvec& data, bool inverse) {
    if (data.empty()) return;
    const std::size_t n = data.size();
    fftw_plan plan = cache().get(n, inverse ? FFTW_BACKWARD : FFTW_FORWARD);
    fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(data.data()),
                     reinterpret_cast<fftw_complex*>(data.data()));
    if (inverse) {
        const double scale = 1.0 / static_cast<double>(n);
        for (auto& v : data) v *= scale;
    }
}

cvec forward(cvec data) {
    transform(data, false);
    return data;
}

cvec inverse(cvec data) {
    transform(data, true);
    return data;
}

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

cvec convolve_linear(const cvec& a, const cvec& b) {
    if (a.empty() || b.empty()) return {};
    const std::size_t out_len = a.size() + b.size() - 1;
    const std::size_t n = next_pow2(out_len);
    cvec fa(n), fb(n);
    std::copy(a.begin(), a.end(), fa.begin());
    std::copy(b.begin(), b.end(), fb.begin());
    transform(fa, false);
    transform(fb, false);
    for (std::size_t i = 0; i < n; ++i) fa[i] *= fb[i];
    transform(fa, true);
    fa.resize(out_len);
    return fa;
}

std::vector<double> convolve_linear(const std::vector<double>& a,
                                    const std::vector<double>& b) {
    cvec ca(a.begin(), a.end()), cb(b.begin(), b.end());
    cvec cc = convolve_linear(ca, cb);
    std::vector<double> out(cc.size());
    for (std::size_t i = 0; i < cc.size(); ++i) out[i] = cc[i].real();
    return out;
}

}  // namespace xrpd::fft
