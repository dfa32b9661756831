#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "grw/config.hpp"
#include "grw/core.hpp"
#include "grw/graph_geometry.hpp"

// On-disk artifacts. Every file is self-describing: CSV and .dat files start
// with `# schema=1`, `# version=...` and a one-line config echo; JSON
// summaries carry "schema", "version" and the resolved config object.

namespace grw {

inline constexpr int kSchemaVersion = 1;

using json = nlohmann::json;

inline std::string config_echo_line(const ExperimentConfig& cfg) {
    std::string s;
    for (const auto& [k, v] : cfg.echo()) {
        if (!s.empty()) s += "; ";
        s += k + " = " + v;
    }
    return s;
}

inline json config_echo_json(const ExperimentConfig& cfg) {
    json j = json::object();
    for (const auto& [k, v] : cfg.echo()) j[k] = v;
    return j;
}

class CsvWriter {
  public:
    CsvWriter(const std::filesystem::path& path, const ExperimentConfig& cfg,
              const std::string& header) {
        out_.open(path);
        if (!out_) throw error("cannot open " + path.string() + " for writing");
        out_ << "# schema=" << kSchemaVersion << "\n";
        out_ << "# version=" << kVersion << "\n";
        out_ << "# config=" << config_echo_line(cfg) << "\n";
        out_ << header << "\n";
        out_ << std::setprecision(17);
    }

    template <typename... Ts>
    void row(Ts... vals) {
        bool first = true;
        ((out_ << (first ? "" : ","), first = false, out_ << vals), ...);
        out_ << "\n";
    }

  private:
    std::ofstream out_;
};

// two-column plot data for external plotters
inline void write_dat(const std::filesystem::path& path, const ExperimentConfig& cfg,
                      const std::string& what, const std::vector<double>& xs,
                      const std::vector<double>& ys) {
    std::ofstream out(path);
    if (!out) throw error("cannot open " + path.string() + " for writing");
    out << "# schema=" << kSchemaVersion << "\n";
    out << "# version=" << kVersion << "\n";
    out << "# config=" << config_echo_line(cfg) << "\n";
    out << "# columns=" << what << "\n";
    out << std::setprecision(17);
    for (std::size_t k = 0; k < xs.size(); ++k) out << xs[k] << " " << ys[k] << "\n";
}

inline void write_summary_json(const std::filesystem::path& path, const ExperimentConfig& cfg,
                               const std::string& command, json payload) {
    json j;
    j["schema"] = kSchemaVersion;
    j["version"] = kVersion;
    j["command"] = command;
    j["config"] = config_echo_json(cfg);
    j.update(payload);
    std::ofstream out(path);
    if (!out) throw error("cannot open " + path.string() + " for writing");
    out << j.dump(2) << "\n";
}

// one row per node: coordinates, u, H, cosh phi, trA2
inline void export_fields_csv(const std::filesystem::path& path, const ExperimentConfig& cfg,
                              const GraphFunction& gf, const GeometryFields& fields) {
    const FiberGrid& g = *gf.grid;
    CsvWriter csv(path, cfg, "i,j,x,y,u,H,cosh_phi,trA2");
    for (int i = 0; i < g.nx(); ++i)
        for (int j = 0; j < g.ny(); ++j)
            csv.row(i, j, g.x_of(i), g.y_of(j), gf.u(i, j), fields.H(i, j),
                    fields.cosh_phi(i, j), fields.trA2(i, j));
}

inline json field_stats(const FiberGrid& g, const ScalarField& s) {
    json j;
    j["min"] = s.min();
    j["max"] = s.max();
    j["mean"] = mean_value(g, s);
    return j;
}

inline json fields_summary_json(const GraphFunction& gf, const GeometryFields& fields) {
    const FiberGrid& g = *gf.grid;
    json j;
    j["u"] = field_stats(g, gf.u);
    j["H"] = field_stats(g, fields.H);
    j["cosh_phi"] = field_stats(g, fields.cosh_phi);
    j["trA2"] = field_stats(g, fields.trA2);
    j["gKN"] = field_stats(g, fields.gKN);
    j["margin"] = fields.margin;
    j["sup_cosh_phi"] = fields.sup_cosh_phi;
    j["conditioning_warning"] = fields.conditioning_warning;
    return j;
}

inline json read_summary_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw error("cannot read " + path.string());
    json j;
    in >> j;
    return j;
}

}  // namespace grw
