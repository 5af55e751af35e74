#include "xrpd/pattern.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "xrpd/errors.hpp"

namespace xrpd {

namespace {

bool parse_two_columns(const std::string& line, double& a, double& b) {
    const char* p = line.data();
    const char* end = p + line.size();
    auto skip_ws = [&] {
        while (p < end && (*p == ' ' || *p == '\t' || *p == '\r')) ++p;
    };
    skip_ws();
    auto r1 = std::from_chars(p, end, a);
    if (r1.ec != std::errc()) return false;
    p = r1.ptr;
    skip_ws();
    auto r2 = std::from_chars(p, end, b);
    if (r2.ec != std::errc()) return false;
    p = r2.ptr;
    skip_ws();
    return p == end;
}

}  // namespace

void validate_pattern(const Pattern& p, bool require_nonnegative) {
    if (p.theta.size() != p.intensity.size())
        throw SizeError("pattern: theta/intensity length mismatch");
    const std::size_t n = p.theta.size();
    if (n < kMinPatternSize)
        throw SizeError("pattern: need at least " +
                        std::to_string(kMinPatternSize) + " samples, got " +
                        std::to_string(n));
    if (!(p.step > 0.0) || !std::isfinite(p.step))
        throw GridError("pattern: step must be positive and finite");
    const double tol = kGridTolerance * p.step;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double d = p.theta[i + 1] - p.theta[i];
        if (!(d > 0.0))
            throw GridError("pattern: theta not strictly increasing at index " +
                            std::to_string(i));
        if (std::abs(d - p.step) > tol)
            throw GridError("pattern: non-uniform grid at index " +
                            std::to_string(i) + " (dtheta=" + std::to_string(d) +
                            ", step=" + std::to_string(p.step) + ")");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(p.intensity[i]))
            throw DomainError("pattern: non-finite intensity at index " +
                              std::to_string(i));
        if (require_nonnegative && p.intensity[i] < 0.0)
            throw DomainError("pattern: negative intensity at index " +
                              std::to_string(i));
    }
}

Pattern make_pattern(double theta0, double step, std::vector<double> intensity) {
    Pattern p;
    p.step = step;
    p.intensity = std::move(intensity);
    p.theta.resize(p.intensity.size());
    for (std::size_t i = 0; i < p.theta.size(); ++i)
        p.theta[i] = theta0 + step * static_cast<double>(i);
    validate_pattern(p);
    return p;
}

bool same_grid(const Pattern& a, const Pattern& b) {
    if (a.size() != b.size()) return false;
    const double tol = kGridTolerance * a.step;
    return std::abs(a.step - b.step) <= tol &&
           std::abs(a.theta0() - b.theta0()) <= tol;
}

const char* stage_name(Stage s) {
    switch (s) {
        case Stage::raw: return "raw";
        case Stage::denoised: return "denoised";
        case Stage::background: return "background";
        case Stage::background_free: return "background_free";
        case Stage::deblurred: return "deblurred";
        case Stage::reconvolved: return "reconvolved";
    }
    return "unknown";
}

Pattern load_pattern(const std::string& path, PatternFormat format) {
    (void)format;  // xy_ascii is the only format
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "' for reading");

    Pattern p;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;           // blank
        if (line[first] == '#') continue;                   // comment
        double a = 0.0, b = 0.0;
        if (!parse_two_columns(line, a, b))
            throw ParseError("malformed line in '" + path + "': \"" + line + "\"",
                             lineno);
        p.theta.push_back(a);
        p.intensity.push_back(b);
    }
    if (p.theta.size() < 2)
        throw SizeError("'" + path + "': need at least " +
                        std::to_string(kMinPatternSize) + " data rows");
    p.step = (p.theta.back() - p.theta.front()) /
             static_cast<double>(p.theta.size() - 1);
    validate_pattern(p, /*require_nonnegative=*/true);
    return p;
}

void save_pattern(const Pattern& p, const std::string& path) {
    validate_pattern(p);
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    char buf[96];
    for (std::size_t i = 0; i < p.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g %.17g\n", p.theta[i],
                      p.intensity[i]);
        out << buf;
    }
    if (!out) throw IoError("write failure on '" + path + "'");
}

}  // namespace xrpd
