#pragma once

#include <string>

#include <nlohmann/json_fwd.hpp>

namespace xrpd::pipeline {

/// Everything one run needs; defaults follow the library stage defaults.
/// Serialized as a flat `key = value` text file and echoed verbatim into
/// the run report.
struct PipelineConfig {
    std::string input;
    std::string standard;
    std::string output_dir;
    int wavelet_order = 2;
    int levels = 0;  // 0: min(4, floor(log2 n) - 2)
    int bg_radius = 3;
    int k = 0;       // 0: automatic singular-value-gap selection
    int lr_iterations = 5;
    double damping_threshold = 0.0;
    double prominence = 0.05;
    bool deblur_from_model = false;  // feed the fitted model, not the signal
};

PipelineConfig load_config(const std::string& path);
void save_config(const PipelineConfig& config, const std::string& path);

/// Runs denoise -> background -> fit (diagnostic) -> deblur ->
/// reconvolution check, writing one stage file per step plus report.json
/// into the output directory. Returns the report. A stage failure is
/// recorded in report.json and rethrown with the stage name attached.
nlohmann::json run_pipeline(const PipelineConfig& config);

/// Writes the plot-ready tables for the background-procedure panels
/// (fig2_*) and the before/after/residue panels (fig3_*) from a completed
/// run directory.
void emit_figure_tables(const std::string& run_dir, const std::string& out_dir);

}  // namespace xrpd::pipeline
