#include "lorapre/report.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace lorapre {

std::string format_double(double value) {
    char buf[48];
    const auto res =
        std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

void atomic_write_file(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open for write: " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw std::runtime_error("write failed: " + tmp.string());
    }
    fs::rename(tmp, target);
}

namespace {

double shadow_rss(const RunRecord& record, std::size_t step,
                  const std::vector<double> ShadowSeries::* member) {
    double sq = 0.0;
    for (const ShadowSeries& s : record.shadow) {
        const auto& series = s.*member;
        if (step < series.size()) sq += series[step] * series[step];
    }
    return std::sqrt(sq);
}

} // namespace

std::string run_csv_string(const RunRecord& record) {
    std::string out = "step,loss,grad_norm,e_m,e_v,delta_subspace,wall_ms\n";
    for (long t = 0; t < record.steps; ++t) {
        const std::size_t i = static_cast<std::size_t>(t);
        out += std::to_string(t + 1);
        out += ',';
        out += format_double(record.loss[i]);
        out += ',';
        out += format_double(record.grad_norm[i]);
        out += ',';
        out += format_double(shadow_rss(record, i, &ShadowSeries::e_m));
        out += ',';
        out += format_double(shadow_rss(record, i, &ShadowSeries::e_v));
        out += ',';
        out += format_double(shadow_rss(record, i, &ShadowSeries::delta_subspace));
        // wall_ms is pinned to 0: desk-scale steps sit below the column's
        // 1 ms resolution and run.csv must be byte-identical across reruns.
        // Measured timing lives in summary.txt.
        out += ",0\n";
    }
    return out;
}

namespace {

nlohmann::ordered_json bound_report_json(const BoundReport& r) {
    nlohmann::ordered_json j;
    j["G"] = r.G;
    j["G_inf"] = r.G_inf;
    j["delta"] = r.delta;
    j["C_Q"] = r.C_Q;
    j["Delta_res"] = r.Delta_res;
    j["E_bound"] = r.E_bound;
    j["E_ss"] = r.E_ss;
    j["sigma_total_sq"] = r.sigma_total_sq;
    j["convergence_floor_unscaled"] = r.convergence_floor_unscaled;
    j["recursion_violations"] = r.recursion_violations;
    j["recursion_violations_measured"] = r.recursion_violations_measured;
    return j;
}

} // namespace

std::string bounds_json_string(const RunRecord& record, double beta1, double lambda,
                               const std::vector<long long>& param_elements) {
    nlohmann::ordered_json j;
    j["shadow_oracle"] = !record.shadow.empty();
    nlohmann::ordered_json per_param = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < record.shadow.size(); ++i) {
        const BoundReport r =
            compute_bounds(record.shadow[i], beta1, lambda, param_elements.at(i));
        nlohmann::ordered_json entry = bound_report_json(r);
        entry["param"] = record.shadow[i].param;
        per_param.push_back(std::move(entry));
    }
    if (record.shadow.size() == 1) {
        const BoundReport r =
            compute_bounds(record.shadow[0], beta1, lambda, param_elements.at(0));
        const nlohmann::ordered_json top = bound_report_json(r);
        for (const auto& [key, value] : top.items()) j[key] = value;
    }
    j["per_param"] = std::move(per_param);
    return j.dump(2) + "\n";
}

std::string summary_string(const RunRecord& record, const std::string& problem_desc,
                           const std::string& optimizer_desc) {
    std::ostringstream out;
    out << "problem:          " << problem_desc << "\n";
    out << "optimizer:        " << optimizer_desc << "\n";
    out << "seed:             " << record.seed << "\n";
    out << "steps completed:  " << record.steps << "\n";
    out << "status:           "
        << (record.aborted ? "ABORTED (" + record.abort_reason + ")" : "ok") << "\n";
    if (!record.loss.empty()) {
        out << "initial loss:     " << format_double(record.loss.front()) << "\n";
        out << "final loss:       " << format_double(record.final_loss) << "\n";
    }
    out << "wall time:        " << format_double(record.total_wall_us / 1000.0)
        << " ms total";
    if (record.steps > 0)
        out << ", " << format_double(record.total_wall_us / record.steps)
            << " us/step";
    out << "\n";
    out << "optimizer state:  " << record.memory.total_entries << " entries (dense-adam"
        << " reference " << record.memory.total_dense_adam_entries << ")\n";
    for (const MemoryItem& item : record.memory.items) {
        out << "  " << item.param << ": " << item.slot_kind << ", "
            << item.state_entries << " entries\n";
    }
    return out.str();
}

std::string sweep_csv_string(const std::vector<SweepRow>& rows) {
    std::string out = "rank,final_loss,steady_E_ss,state_entries\n";
    for (const SweepRow& r : rows) {
        out += std::to_string(r.rank);
        out += ',';
        out += format_double(r.final_loss);
        out += ',';
        out += r.routed_dense ? "nan" : format_double(r.steady_e_ss);
        out += ',';
        out += std::to_string(r.state_entries);
        out += '\n';
    }
    return out;
}

std::string line_chart_svg(const std::string& title, const std::string& x_label,
                           const std::string& y_label, const std::vector<double>& xs,
                           const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.empty())
        throw ArgumentError("line_chart_svg: need equal non-empty series");
    const double width = 640.0, height = 420.0;
    const double ml = 70.0, mr = 20.0, mt = 40.0, mb = 50.0;
    double x_min = xs[0], x_max = xs[0], y_min = ys[0], y_max = ys[0];
    for (std::size_t i = 1; i < xs.size(); ++i) {
        x_min = std::min(x_min, xs[i]);
        x_max = std::max(x_max, xs[i]);
        y_min = std::min(y_min, ys[i]);
        y_max = std::max(y_max, ys[i]);
    }
    if (x_max == x_min) x_max = x_min + 1.0;
    if (y_max == y_min) y_max = y_min + 1.0;
    const auto sx = [&](double x) {
        return ml + (x - x_min) / (x_max - x_min) * (width - ml - mr);
    };
    const auto sy = [&](double y) {
        return height - mb - (y - y_min) / (y_max - y_min) * (height - mt - mb);
    };
    char buf[256];
    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"420\" "
           "viewBox=\"0 0 640 420\">\n";
    svg += "<rect width=\"640\" height=\"420\" fill=\"white\"/>\n";
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"320\" y=\"24\" text-anchor=\"middle\" "
                  "font-family=\"monospace\" font-size=\"14\">%s</text>\n",
                  title.c_str());
    svg += buf;
    // axes
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" "
                  "stroke=\"black\"/>\n",
                  ml, height - mb, width - mr, height - mb);
    svg += buf;
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" "
                  "stroke=\"black\"/>\n",
                  ml, mt, ml, height - mb);
    svg += buf;
    // tick labels at the extremes
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\" "
                  "font-family=\"monospace\" font-size=\"11\">%.6g</text>\n",
                  sx(x_min), height - mb + 18.0, x_min);
    svg += buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\" "
                  "font-family=\"monospace\" font-size=\"11\">%.6g</text>\n",
                  sx(x_max), height - mb + 18.0, x_max);
    svg += buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\" "
                  "font-family=\"monospace\" font-size=\"11\">%.6g</text>\n",
                  ml - 6.0, sy(y_min) + 4.0, y_min);
    svg += buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\" "
                  "font-family=\"monospace\" font-size=\"11\">%.6g</text>\n",
                  ml - 6.0, sy(y_max) + 4.0, y_max);
    svg += buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\" "
                  "font-family=\"monospace\" font-size=\"12\">%s</text>\n",
                  (ml + width - mr) / 2.0, height - 12.0, x_label.c_str());
    svg += buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"16\" y=\"%.1f\" text-anchor=\"middle\" "
                  "font-family=\"monospace\" font-size=\"12\" "
                  "transform=\"rotate(-90 16 %.1f)\">%s</text>\n",
                  (mt + height - mb) / 2.0, (mt + height - mb) / 2.0, y_label.c_str());
    svg += buf;
    // data polyline + point markers
    svg += "<polyline fill=\"none\" stroke=\"#1f6fb2\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < xs.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", sx(xs[i]), sy(ys[i]));
        svg += buf;
    }
    svg += "\"/>\n";
    for (std::size_t i = 0; i < xs.size(); ++i) {
        std::snprintf(buf, sizeof(buf),
                      "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"3\" fill=\"#1f6fb2\"/>\n",
                      sx(xs[i]), sy(ys[i]));
        svg += buf;
    }
    svg += "</svg>\n";
    return svg;
}

} // namespace lorapre
