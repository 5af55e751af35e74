#include "xrpd/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "xrpd/deblur.hpp"
#include "xrpd/errors.hpp"
#include "xrpd/hlsvd.hpp"
#include "xrpd/morphology.hpp"
#include "xrpd/pattern.hpp"
#include "xrpd/wavelet.hpp"

namespace xrpd::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

int parse_int_or_auto(const std::string& value, const std::string& key) {
    if (value == "auto") return 0;
    try {
        return std::stoi(value);
    } catch (const std::exception&) {
        throw ParseError("config: bad integer for '" + key + "': " + value);
    }
}

double parse_double(const std::string& value, const std::string& key) {
    try {
        return std::stod(value);
    } catch (const std::exception&) {
        throw ParseError("config: bad number for '" + key + "': " + value);
    }
}

json config_echo(const PipelineConfig& c) {
    json echo;
    echo["input"] = c.input;
    echo["standard"] = c.standard;
    echo["output_dir"] = c.output_dir;
    echo["wavelet_order"] = std::to_string(c.wavelet_order);
    echo["levels"] = c.levels > 0 ? std::to_string(c.levels) : "auto";
    echo["bg_radius"] = std::to_string(c.bg_radius);
    echo["k"] = c.k > 0 ? std::to_string(c.k) : "auto";
    echo["lr_iterations"] = std::to_string(c.lr_iterations);
    echo["damping_threshold"] = std::to_string(c.damping_threshold);
    echo["prominence"] = std::to_string(c.prominence);
    echo["deblur_input"] = c.deblur_from_model ? "model" : "signal";
    return echo;
}

json model_to_json(const hlsvd::FitResult& fit, int component_count) {
    json out;
    out["components"] = json::array();
    for (const auto& c : fit.model.components)
        out["components"].push_back({{"amplitude", c.amplitude},
                                     {"damping", c.damping},
                                     {"frequency", c.frequency},
                                     {"phase", c.phase}});
    out["theta0"] = fit.model.theta0;
    out["step"] = fit.model.step;
    out["residual_norm"] = fit.diagnostics.residual_norm;
    out["relative_residual"] = fit.diagnostics.relative_residual;
    out["condition"] = fit.diagnostics.condition;
    out["growing_modes"] = fit.diagnostics.growing_modes;
    json sel;
    sel["auto"] = fit.diagnostics.k_auto;
    sel["complex_rank"] = fit.diagnostics.complex_rank;
    sel["components"] = component_count;
    sel["gap_index"] = fit.diagnostics.gap_index;
    sel["singular_values"] = json::array();
    for (long i = 0; i < fit.diagnostics.singular_values.size(); ++i)
        sel["singular_values"].push_back(fit.diagnostics.singular_values[i]);
    out["selection"] = sel;
    return out;
}

void write_json(const json& j, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << j.dump(2) << "\n";
}

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    json j;
    in >> j;
    return j;
}

double elapsed_ms(std::chrono::steady_clock::time_point since) {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now() - since)
        .count();
}

}  // namespace

PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config '" + path + "'");
    PipelineConfig c;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw ParseError("config: expected 'key = value'", lineno);
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (key == "input")
            c.input = value;
        else if (key == "standard")
            c.standard = value;
        else if (key == "output_dir")
            c.output_dir = value;
        else if (key == "wavelet_order")
            c.wavelet_order = parse_int_or_auto(value, key);
        else if (key == "levels")
            c.levels = parse_int_or_auto(value, key);
        else if (key == "bg_radius")
            c.bg_radius = parse_int_or_auto(value, key);
        else if (key == "k")
            c.k = parse_int_or_auto(value, key);
        else if (key == "lr_iterations")
            c.lr_iterations = parse_int_or_auto(value, key);
        else if (key == "damping_threshold")
            c.damping_threshold = parse_double(value, key);
        else if (key == "prominence")
            c.prominence = parse_double(value, key);
        else if (key == "deblur_input")
            c.deblur_from_model = value == "model";
        else
            throw ParseError("config: unknown key '" + key + "'", lineno);
    }
    return c;
}

void save_config(const PipelineConfig& config, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    const json echo = config_echo(config);
    for (const auto& [key, value] : echo.items())
        out << key << " = " << value.get<std::string>() << "\n";
}

json run_pipeline(const PipelineConfig& config) {
    if (config.input.empty() || config.standard.empty() ||
        config.output_dir.empty())
        throw DomainError("run_pipeline: input, standard and output_dir are required");

    const fs::path dir(config.output_dir);
    fs::create_directories(dir);

    json report;
    report["config"] = config_echo(config);
    report["stages"] = json::object();
    json timing = json::object();

    std::string stage = "load";
    try {
        auto t0 = std::chrono::steady_clock::now();
        const Pattern raw = load_pattern(config.input);
        const Pattern standard_raw = load_pattern(config.standard);
        if (!same_grid(raw, standard_raw))
            throw GridError("input and standard must share the angular grid");
        save_pattern(raw, (dir / "raw.xy").string());
        report["stages"]["load"] = {
            {"input", config.input},
            {"standard", config.standard},
            {"samples", raw.size()},
            {"theta0", raw.theta0()},
            {"step", raw.step}};
        timing["load_ms"] = elapsed_ms(t0);

        // --- denoise
        stage = "denoise";
        t0 = std::chrono::steady_clock::now();
        const auto basis = wavelet::daubechies_filter(config.wavelet_order);
        const int levels = config.levels > 0
                               ? config.levels
                               : wavelet::default_levels(raw.size());
        const auto den = wavelet::denoise(raw, basis, levels);
        save_pattern(den.denoised, (dir / "denoised.xy").string());
        save_pattern(den.noise, (dir / "noise.xy").string());
        // the instrumental standard gets the same cleanup before serving
        // as the PSF source
        const auto std_den = wavelet::denoise(standard_raw, basis, levels);
        report["stages"]["denoise"] = {{"order", config.wavelet_order},
                                       {"levels", levels},
                                       {"sigma", den.sigma},
                                       {"threshold", den.threshold}};
        timing["denoise_ms"] = elapsed_ms(t0);

        // --- background
        stage = "background";
        t0 = std::chrono::steady_clock::now();
        const auto bg = morpho::estimate_background(den.denoised, config.bg_radius);
        save_pattern(bg.background, (dir / "background.xy").string());
        save_pattern(bg.corrected, (dir / "background_free.xy").string());
        const auto std_bg =
            morpho::estimate_background(std_den.denoised, config.bg_radius);
        const Pattern& standard_clean = std_bg.corrected;
        save_pattern(standard_clean, (dir / "standard_clean.xy").string());
        // reconstruction identity before clamping: corrected + bg + noise = raw
        double recon_gap = 0.0;
        for (std::size_t i = 0; i < raw.size(); ++i) {
            const double lhs = bg.corrected.intensity[i] +
                               bg.background.intensity[i] +
                               den.noise.intensity[i];
            if (bg.corrected.intensity[i] > 0.0)
                recon_gap = std::max(recon_gap,
                                     std::abs(lhs - raw.intensity[i]));
        }
        report["stages"]["background"] = {
            {"radius", config.bg_radius},
            {"reshape_width", bg.layout.width},
            {"clamped_samples", bg.clamped_count},
            {"identity_gap_unclamped", recon_gap}};
        timing["background_ms"] = elapsed_ms(t0);

        // --- peak fit (diagnostic unless deblur_input = model)
        stage = "fit";
        t0 = std::chrono::steady_clock::now();
        hlsvd::FitOptions fopt;
        fopt.k = config.k;
        const auto fit = hlsvd::hlsvd_fit(bg.corrected, fopt);
        const json model_json =
            model_to_json(fit, static_cast<int>(fit.model.components.size()));
        write_json(model_json, dir / "model.json");
        Pattern recon = bg.corrected;
        recon.intensity = hlsvd::reconstruct(fit.model, recon.theta);
        save_pattern(recon, (dir / "recon.xy").string());
        report["stages"]["fit"] = {
            {"k_components", fit.model.components.size()},
            {"complex_rank", fit.diagnostics.complex_rank},
            {"auto", fit.diagnostics.k_auto},
            {"relative_residual", fit.diagnostics.relative_residual},
            {"growing_modes", fit.diagnostics.growing_modes}};
        timing["fit_ms"] = elapsed_ms(t0);

        // --- deblur
        stage = "deblur";
        t0 = std::chrono::steady_clock::now();
        Pattern deblur_input = bg.corrected;
        if (config.deblur_from_model) {
            deblur_input.intensity = recon.intensity;
            for (auto& v : deblur_input.intensity) v = std::max(v, 0.0);
        }
        const auto deb = deblur::deblur_full_pattern(
            deblur_input, standard_clean, config.lr_iterations,
            config.damping_threshold, config.prominence);
        save_pattern(deb.deblurred, (dir / "deblurred.xy").string());
        json ranges = json::array();
        for (const auto& r : deb.ranges)
            ranges.push_back({{"lo", r.lo}, {"hi", r.hi}});
        write_json(ranges, dir / "ranges.json");
        report["stages"]["deblur"] = {
            {"iterations", config.lr_iterations},
            {"damping_threshold", config.damping_threshold},
            {"prominence", config.prominence},
            {"input", config.deblur_from_model ? "model" : "signal"},
            {"ranges", deb.ranges.size()}};
        timing["deblur_ms"] = elapsed_ms(t0);

        // --- reconvolution check
        stage = "reconvolve";
        t0 = std::chrono::steady_clock::now();
        const auto check = deblur::reconvolve_check(
            deb.deblurred, standard_clean, bg.background, den.noise, raw,
            config.prominence);
        save_pattern(check.residue, (dir / "residue.xy").string());
        Pattern reconvolved = raw;
        for (std::size_t i = 0; i < raw.size(); ++i)
            reconvolved.intensity[i] =
                raw.intensity[i] - check.residue.intensity[i];
        save_pattern(reconvolved, (dir / "reconvolved.xy").string());
        double full_sq = 0.0;
        for (double v : check.residue.intensity) full_sq += v * v;
        report["stages"]["reconvolve"] = {
            {"rms", check.stats.rms},
            {"rms_full", std::sqrt(full_sq /
                                   static_cast<double>(check.residue.size()))},
            {"max_abs", check.stats.max_abs},
            {"relative_rms", check.stats.relative_rms},
            {"in_range_samples", check.stats.in_range_samples}};
        timing["reconvolve_ms"] = elapsed_ms(t0);
    } catch (const std::exception& e) {
        report["error"] = {{"stage", stage}, {"message", e.what()}};
        report["timing"] = timing;
        write_json(report, dir / "report.json");
        throw Error("[" + stage + "] " + e.what());
    }

    report["timing"] = timing;
    write_json(report, dir / "report.json");
    return report;
}

namespace {

// Stage outputs (noise, residue, ...) may dip below zero, which the raw
// loader rejects; read them leniently but still check the grid.
Pattern load_stage(const fs::path& dir, const std::string& stage,
                   const std::string& file) {
    const fs::path path = dir / file;
    if (!fs::exists(path))
        throw IoError("missing stage artifact '" + stage + "' (" +
                      path.string() + ")");
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    Pattern p;
    std::string line;
    while (std::getline(in, line)) {
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream ss(line);
        double a = 0.0, b = 0.0;
        if (!(ss >> a >> b))
            throw ParseError("malformed line in '" + path.string() + "'");
        p.theta.push_back(a);
        p.intensity.push_back(b);
    }
    if (p.theta.size() >= 2)
        p.step = (p.theta.back() - p.theta.front()) /
                 static_cast<double>(p.theta.size() - 1);
    validate_pattern(p);
    return p;
}

void write_pattern_csv(const Pattern& p, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << "# theta intensity\n";
    char buf[96];
    for (std::size_t i = 0; i < p.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g %.17g\n", p.theta[i],
                      p.intensity[i]);
        out << buf;
    }
}

void write_image_csv(const morpho::Image2D& img, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << "# row,col,value\n";
    char buf[96];
    for (std::size_t r = 0; r < img.rows; ++r)
        for (std::size_t c = 0; c < img.cols; ++c) {
            std::snprintf(buf, sizeof(buf), "%zu,%zu,%.17g\n", r, c,
                          img.at(r, c));
            out << buf;
        }
}

}  // namespace

void emit_figure_tables(const std::string& run_dir, const std::string& out_dir) {
    const fs::path in(run_dir);
    const fs::path out(out_dir);
    fs::create_directories(out);

    const fs::path report_path = in / "report.json";
    if (!fs::exists(report_path))
        throw IoError("missing stage artifact 'report' (" + report_path.string() +
                      ")");
    const json report = read_json(report_path);
    const int radius = report.at("stages").at("background").at("radius");

    const Pattern raw = load_stage(in, "raw", "raw.xy");
    const Pattern denoised = load_stage(in, "denoised", "denoised.xy");
    const Pattern background = load_stage(in, "background", "background.xy");
    const Pattern cleaned = load_stage(in, "background_free", "background_free.xy");
    const Pattern deblurred = load_stage(in, "deblurred", "deblurred.xy");
    const Pattern residue = load_stage(in, "residue", "residue.xy");

    const auto [reshaped, layout] = morpho::reshape_to_image(denoised.intensity);
    const auto opened = morpho::open(reshaped, morpho::disk_se(radius));

    write_pattern_csv(raw, out / "fig2_original.csv");
    write_image_csv(reshaped, out / "fig2_reshaped.csv");
    write_image_csv(opened, out / "fig2_opened.csv");
    write_pattern_csv(background, out / "fig2_background.csv");

    write_pattern_csv(raw, out / "fig3_original.csv");
    write_pattern_csv(cleaned, out / "fig3_cleaned.csv");
    write_pattern_csv(deblurred, out / "fig3_deblurred.csv");
    write_pattern_csv(residue, out / "fig3_residue.csv");
}

}  // namespace xrpd::pipeline
