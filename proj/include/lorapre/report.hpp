#pragma once

#include <string>
#include <vector>

#include "lorapre/diagnostics.hpp"

namespace lorapre {

// Locale-independent float formatting: shortest form with 17 significant
// digits, round-trip exact.
std::string format_double(double value);

// Write-temp-then-rename so readers never observe a partial file.
void atomic_write_file(const std::string& path, const std::string& content);

// run.csv: step,loss,grad_norm,e_m,e_v,delta_subspace,wall_ms with LF line
// endings. Shadow columns aggregate across parameters (root sum of squares);
// zero when the oracle is off.
std::string run_csv_string(const RunRecord& record);

// Structured bound report. Top-level BoundReport fields when the run has
// exactly one shadowed parameter, plus a per-parameter list.
std::string bounds_json_string(const RunRecord& record, double beta1, double lambda,
                               const std::vector<long long>& param_elements);

std::string summary_string(const RunRecord& record, const std::string& problem_desc,
                           const std::string& optimizer_desc);

struct SweepRow {
    int rank = 0;
    double final_loss = 0.0;
    double steady_e_ss = 0.0; // NaN when the rank was routed dense
    long long state_entries = 0;
    bool routed_dense = false;
};

std::string sweep_csv_string(const std::vector<SweepRow>& rows);

// Minimal static SVG: polyline of y against x with axes and tick labels.
std::string line_chart_svg(const std::string& title, const std::string& x_label,
                           const std::string& y_label, const std::vector<double>& xs,
                           const std::vector<double>& ys);

} // namespace lorapre
