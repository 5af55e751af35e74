#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <string>

#include "xrpd/deblur.hpp"
#include "xrpd/errors.hpp"
#include "xrpd/hlsvd.hpp"
#include "xrpd/morphology.hpp"
#include "xrpd/pattern.hpp"
#include "xrpd/pipeline.hpp"
#include "xrpd/synth.hpp"
#include "xrpd/wavelet.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace xrpd;

namespace {

int parse_k(const std::string& value) {
    if (value == "auto") return 0;
    const int k = std::stoi(value);
    if (k < 1) throw DomainError("k must be 'auto' or a positive integer");
    return k;
}

synth::SynthSpec spec_from_json(const json& j) {
    synth::SynthSpec spec;
    spec.n = j.at("n").get<std::size_t>();
    spec.theta0 = j.value("theta0", spec.theta0);
    spec.step = j.value("step", spec.step);
    spec.noise_sigma = j.value("noise_sigma", 0.0);
    spec.seed = j.value("seed", std::uint64_t(0));
    const std::string kind = j.value("noise", "gaussian");
    if (kind == "poisson")
        spec.noise_kind = synth::NoiseKind::poisson;
    else if (kind != "gaussian")
        throw DomainError("synth spec: noise must be 'gaussian' or 'poisson'");
    if (j.contains("peaks"))
        for (const auto& p : j.at("peaks"))
            spec.peaks.push_back({p.at("center").get<double>(),
                                  p.at("height").get<double>(),
                                  p.at("fwhm").get<double>()});
    if (j.contains("background"))
        for (const auto& c : j.at("background"))
            spec.background.push_back(c.get<double>());
    if (j.contains("model")) {
        const auto& m = j.at("model");
        spec.model.theta0 = spec.theta0;
        spec.model.step = spec.step;
        for (const auto& c : m.at("components"))
            spec.model.components.push_back({c.at("amplitude").get<double>(),
                                             c.at("damping").get<double>(),
                                             c.at("frequency").get<double>(),
                                             c.at("phase").get<double>()});
    }
    return spec;
}

Pattern slice_range(const Pattern& p, const std::string& range) {
    const auto colon = range.find(':');
    if (colon == std::string::npos)
        throw DomainError("range must be '<theta_min>:<theta_max>'");
    const double lo = std::stod(range.substr(0, colon));
    const double hi = std::stod(range.substr(colon + 1));
    if (!(lo < hi)) throw DomainError("range: theta_min must be below theta_max");
    Pattern out;
    out.step = p.step;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p.theta[i] < lo || p.theta[i] > hi) continue;
        out.theta.push_back(p.theta[i]);
        out.intensity.push_back(p.intensity[i]);
    }
    validate_pattern(out);
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Model-independent pre-processing of X-ray powder "
                 "diffraction profiles"};
    app.require_subcommand(1);

    // --- synth
    auto* synth_cmd = app.add_subcommand(
        "synth", "Generate a synthetic pattern with known ground truth");
    std::string synth_spec_path, synth_out, synth_truth_dir;
    synth_cmd->add_option("--spec", synth_spec_path, "JSON spec file")->required();
    synth_cmd->add_option("--out", synth_out, "output pattern (xy)")->required();
    synth_cmd->add_option("--truth-dir", synth_truth_dir,
                          "directory for the clean component patterns");

    // --- denoise
    auto* den_cmd = app.add_subcommand("denoise", "Wavelet denoising");
    std::string den_in, den_out, den_noise_out;
    int den_order = 2, den_levels = 0;
    den_cmd->add_option("input", den_in, "input pattern (xy)")->required();
    den_cmd->add_option("--order", den_order, "Daubechies order (1-6)");
    den_cmd->add_option("--levels", den_levels,
                        "decomposition levels (0 = automatic)");
    den_cmd->add_option("--out", den_out, "denoised output")->required();
    den_cmd->add_option("--noise-out", den_noise_out, "removed-noise output");

    // --- background
    auto* bg_cmd = app.add_subcommand("background",
                                      "Morphological background suppression");
    std::string bg_in, bg_out, bg_bg_out;
    int bg_radius = 3;
    bg_cmd->add_option("input", bg_in, "input pattern (xy)")->required();
    bg_cmd->add_option("--radius", bg_radius, "disk radius in pixels");
    bg_cmd->add_option("--out", bg_out, "background-free output")->required();
    bg_cmd->add_option("--background-out", bg_bg_out, "background output");

    // --- fit
    auto* fit_cmd = app.add_subcommand("fit", "Damped-sinusoid peak fit");
    std::string fit_in, fit_out, fit_recon_out, fit_k = "auto", fit_range,
                fit_bridge = "pairs";
    fit_cmd->add_option("input", fit_in, "input pattern (xy)")->required();
    fit_cmd->add_option("--k", fit_k, "component count or 'auto'");
    fit_cmd->add_option("--range", fit_range,
                        "restrict the fit window, '<lo>:<hi>' in degrees");
    fit_cmd->add_option("--bridge", fit_bridge,
                        "'pairs' (conjugate pairs) or 'analytic'");
    fit_cmd->add_option("--out", fit_out, "model JSON output")->required();
    fit_cmd->add_option("--recon-out", fit_recon_out, "model reconstruction (xy)");

    // --- deblur
    auto* deb_cmd = app.add_subcommand("deblur",
                                       "Damped Richardson-Lucy deblurring");
    std::string deb_in, deb_std, deb_out, deb_ranges_out;
    int deb_iter = 5;
    double deb_damping = 0.0, deb_prominence = 0.05;
    deb_cmd->add_option("input", deb_in, "input pattern (xy)")->required();
    deb_cmd->add_option("--standard", deb_std, "instrumental standard (xy)")
        ->required();
    deb_cmd->add_option("--iterations", deb_iter, "iteration count");
    deb_cmd->add_option("--damping", deb_damping, "damping threshold (counts)");
    deb_cmd->add_option("--prominence", deb_prominence,
                        "peak threshold as a fraction of the maximum");
    deb_cmd->add_option("--out", deb_out, "deblurred output")->required();
    deb_cmd->add_option("--ranges-out", deb_ranges_out, "peak ranges JSON");

    // --- run
    auto* run_cmd = app.add_subcommand("run", "Full pipeline");
    std::string run_config, run_input, run_standard, run_outdir, run_k,
        run_deblur_input;
    int run_order = -1, run_levels = -1, run_radius = -1, run_iter = -1;
    double run_damping = NAN, run_prominence = NAN;
    run_cmd->add_option("--config", run_config, "flat key = value config file");
    run_cmd->add_option("--input", run_input, "sample pattern (xy)");
    run_cmd->add_option("--standard", run_standard, "instrumental standard (xy)");
    run_cmd->add_option("--output-dir", run_outdir, "run directory");
    run_cmd->add_option("--wavelet-order", run_order, "Daubechies order");
    run_cmd->add_option("--levels", run_levels, "wavelet levels (0 = auto)");
    run_cmd->add_option("--bg-radius", run_radius, "disk radius");
    run_cmd->add_option("--k", run_k, "component count or 'auto'");
    run_cmd->add_option("--lr-iterations", run_iter, "Richardson-Lucy iterations");
    run_cmd->add_option("--damping", run_damping, "damping threshold");
    run_cmd->add_option("--prominence", run_prominence, "peak threshold");
    run_cmd->add_option("--deblur-input", run_deblur_input,
                        "'signal' (default) or 'model'");

    // --- figures
    auto* fig_cmd = app.add_subcommand("figures", "Plot-ready CSV tables");
    std::string fig_run_dir, fig_out_dir;
    fig_cmd->add_option("--run-dir", fig_run_dir, "completed run directory")
        ->required();
    fig_cmd->add_option("--out-dir", fig_out_dir, "CSV output directory")
        ->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth_cmd->parsed()) {
            std::ifstream in(synth_spec_path);
            if (!in) throw IoError("cannot open spec '" + synth_spec_path + "'");
            json j;
            in >> j;
            const auto result = synth::synth_pattern(spec_from_json(j));
            save_pattern(result.pattern, synth_out);
            if (!synth_truth_dir.empty()) {
                fs::create_directories(synth_truth_dir);
                const fs::path dir(synth_truth_dir);
                save_pattern(result.clean, (dir / "clean.xy").string());
                save_pattern(result.peaks_only, (dir / "peaks.xy").string());
                save_pattern(result.background, (dir / "background.xy").string());
                save_pattern(result.noise, (dir / "noise.xy").string());
            }
        } else if (den_cmd->parsed()) {
            const Pattern p = load_pattern(den_in);
            const auto basis = wavelet::daubechies_filter(den_order);
            const int levels =
                den_levels > 0 ? den_levels : wavelet::default_levels(p.size());
            const auto result = wavelet::denoise(p, basis, levels);
            save_pattern(result.denoised, den_out);
            if (!den_noise_out.empty()) save_pattern(result.noise, den_noise_out);
            std::printf("denoise: levels=%d sigma=%.6g threshold=%.6g\n",
                        result.levels, result.sigma, result.threshold);
        } else if (bg_cmd->parsed()) {
            const Pattern p = load_pattern(bg_in);
            const auto result = morpho::estimate_background(p, bg_radius);
            save_pattern(result.corrected, bg_out);
            if (!bg_bg_out.empty()) save_pattern(result.background, bg_bg_out);
            std::printf("background: radius=%d width=%zu clamped=%zu\n",
                        bg_radius, result.layout.width, result.clamped_count);
        } else if (fit_cmd->parsed()) {
            Pattern p = load_pattern(fit_in);
            if (!fit_range.empty()) p = slice_range(p, fit_range);
            hlsvd::FitOptions opts;
            opts.k = parse_k(fit_k);
            if (fit_bridge == "analytic")
                opts.bridge = hlsvd::Bridge::analytic;
            else if (fit_bridge != "pairs")
                throw DomainError("bridge must be 'pairs' or 'analytic'");
            const auto fit = hlsvd::hlsvd_fit(p, opts);
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
            out["selection"] = {{"auto", fit.diagnostics.k_auto},
                                {"complex_rank", fit.diagnostics.complex_rank},
                                {"gap_index", fit.diagnostics.gap_index}};
            json sv = json::array();
            for (long i = 0; i < fit.diagnostics.singular_values.size(); ++i)
                sv.push_back(fit.diagnostics.singular_values[i]);
            out["selection"]["singular_values"] = sv;
            std::ofstream jo(fit_out);
            if (!jo) throw IoError("cannot open '" + fit_out + "' for writing");
            jo << out.dump(2) << "\n";
            if (!fit_recon_out.empty()) {
                Pattern recon = p;
                recon.intensity = hlsvd::reconstruct(fit.model, p.theta);
                save_pattern(recon, fit_recon_out);
            }
            std::printf("fit: components=%zu relative_residual=%.6g\n",
                        fit.model.components.size(),
                        fit.diagnostics.relative_residual);
        } else if (deb_cmd->parsed()) {
            const Pattern p = load_pattern(deb_in);
            const Pattern std_pat = load_pattern(deb_std);
            const auto result = deblur::deblur_full_pattern(
                p, std_pat, deb_iter, deb_damping, deb_prominence);
            save_pattern(result.deblurred, deb_out);
            if (!deb_ranges_out.empty()) {
                json ranges = json::array();
                for (const auto& r : result.ranges)
                    ranges.push_back({{"lo", r.lo}, {"hi", r.hi}});
                std::ofstream jo(deb_ranges_out);
                if (!jo)
                    throw IoError("cannot open '" + deb_ranges_out +
                                  "' for writing");
                jo << ranges.dump(2) << "\n";
            }
            std::printf("deblur: ranges=%zu iterations=%d\n",
                        result.ranges.size(), deb_iter);
        } else if (run_cmd->parsed()) {
            pipeline::PipelineConfig config;
            if (!run_config.empty()) config = pipeline::load_config(run_config);
            if (!run_input.empty()) config.input = run_input;
            if (!run_standard.empty()) config.standard = run_standard;
            if (!run_outdir.empty()) config.output_dir = run_outdir;
            if (run_order >= 0) config.wavelet_order = run_order;
            if (run_levels >= 0) config.levels = run_levels;
            if (run_radius >= 0) config.bg_radius = run_radius;
            if (!run_k.empty()) config.k = parse_k(run_k);
            if (run_iter >= 0) config.lr_iterations = run_iter;
            if (!std::isnan(run_damping)) config.damping_threshold = run_damping;
            if (!std::isnan(run_prominence)) config.prominence = run_prominence;
            if (!run_deblur_input.empty()) {
                if (run_deblur_input != "signal" && run_deblur_input != "model")
                    throw DomainError("deblur-input must be 'signal' or 'model'");
                config.deblur_from_model = run_deblur_input == "model";
            }
            const json report = pipeline::run_pipeline(config);
            std::printf("run: report written to %s/report.json "
                        "(in-range residue %.4g%%)\n",
                        config.output_dir.c_str(),
                        100.0 * report.at("stages").at("reconvolve")
                                    .at("relative_rms").get<double>());
        } else if (fig_cmd->parsed()) {
            pipeline::emit_figure_tables(fig_run_dir, fig_out_dir);
            std::printf("figures: tables written to %s\n", fig_out_dir.c_str());
        }
    } catch (const std::exception& e) {
        std::cerr << "xrpd: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
