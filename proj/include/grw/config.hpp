#pragma once

#include <cctype>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "grw/cmc_solver.hpp"
#include "grw/core.hpp"
#include "grw/fiber.hpp"
#include "grw/warping.hpp"

// Line-oriented experiment configuration: `section.key = value`, '#' comments,
// no nesting beyond one dot. Parsing collects every error (with line numbers)
// instead of stopping at the first, and validates by actually constructing
// the referenced objects.

namespace grw {

struct ParseError {
    int line;
    std::string message;
};

struct ExperimentConfig {
    // warping
    std::string warping_family = "constant";
    std::vector<double> warping_params = {1.0};
    double domain_lo = -std::numeric_limits<double>::infinity();
    double domain_hi = std::numeric_limits<double>::infinity();
    std::optional<double> ref_point;
    // einstein family route
    int einstein_case = 0;  // 0 = not used
    int einstein_n = 2;
    double einstein_cbar = 0.0;
    double einstein_c = 0.0;
    std::vector<double> einstein_params;

    // fiber
    std::string fiber_topology = "torus";
    int fiber_nx = 64, fiber_ny = 64;
    double fiber_length = 1.0;
    double fiber_radius = 1.0;

    // graph / perturbation
    double graph_t0 = 0.0;
    std::uint64_t graph_seed = 1;
    double graph_margin = 0.4;
    int graph_modes = 4;

    // solver
    SolverConfig solver;
    double solver_c = std::numeric_limits<double>::quiet_NaN();
    std::optional<double> anchor_t;

    // conditions
    double cond_t_lo = -1.0, cond_t_hi = 1.0;
    int cond_samples = 512;

    // experiment
    std::string experiment_theorem = "slice-strict-ncc";
    int experiment_runs = 10;
    std::uint64_t experiment_seed = 1;

    // run
    std::string out_dir;
    int refine_levels = 3;
    bool quiet = false;

    WarpingFunction build_warping() const {
        if (warping_family == "einstein")
            return make_einstein_family(einstein_case, einstein_n, einstein_cbar, einstein_c,
                                        einstein_params);
        WarpingFamily fam;
        if (warping_family == "constant") fam = WarpingFamily::constant;
        else if (warping_family == "exponential") fam = WarpingFamily::exponential;
        else if (warping_family == "cosh_type") fam = WarpingFamily::cosh_type;
        else if (warping_family == "affine") fam = WarpingFamily::affine;
        else if (warping_family == "trigonometric") fam = WarpingFamily::trigonometric;
        else throw error("unknown warping.family '" + warping_family + "'");
        return WarpingFunction::make(fam, warping_params, Interval(domain_lo, domain_hi),
                                     ref_point ? *ref_point
                                               : std::numeric_limits<double>::quiet_NaN());
    }

    FiberGrid build_fiber() const {
        if (fiber_topology == "torus") return FiberGrid::torus(fiber_nx, fiber_ny, fiber_length);
        if (fiber_topology == "sphere") return FiberGrid::sphere(fiber_nx, fiber_ny, fiber_radius);
        throw error("unknown fiber.topology '" + fiber_topology + "'");
    }

    // resolved key-value echo, embedded in every artifact
    std::vector<std::pair<std::string, std::string>> echo() const;
};

struct ParseResult {
    ExperimentConfig config;
    std::vector<ParseError> errors;
    bool ok() const { return errors.empty(); }
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

inline bool parse_double(const std::string& s, double& out) {
    const std::string t = trim(s);
    if (t == "inf" || t == "+inf") {
        out = std::numeric_limits<double>::infinity();
        return true;
    }
    if (t == "-inf") {
        out = -std::numeric_limits<double>::infinity();
        return true;
    }
    try {
        std::size_t pos = 0;
        out = std::stod(t, &pos);
        return pos == t.size();
    } catch (...) {
        return false;
    }
}

inline bool parse_int(const std::string& s, long long& out) {
    try {
        std::size_t pos = 0;
        out = std::stoll(trim(s), &pos);
        return pos == trim(s).size();
    } catch (...) {
        return false;
    }
}

inline bool parse_list(const std::string& s, std::vector<double>& out) {
    out.clear();
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        double v;
        if (!parse_double(item, v)) return false;
        out.push_back(v);
    }
    return !out.empty();
}

}  // namespace detail

inline ParseResult parse_config(const std::string& text) {
    ParseResult res;
    ExperimentConfig& c = res.config;
    auto fail = [&](int line, const std::string& msg) { res.errors.push_back({line, msg}); };

    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    std::map<std::string, int> seen_lines;  // key -> line, for construction-time errors

    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = raw;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;

        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            fail(lineno, "expected 'section.key = value'");
            continue;
        }
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string val = detail::trim(line.substr(eq + 1));
        if (key.empty() || val.empty()) {
            fail(lineno, "expected 'section.key = value'");
            continue;
        }
        if (std::count(key.begin(), key.end(), '.') != 1) {
            fail(lineno, "key '" + key + "' must have exactly one section dot");
            continue;
        }
        seen_lines[key] = lineno;

        auto want_double = [&](double& slot) {
            double v;
            if (detail::parse_double(val, v)) slot = v;
            else fail(lineno, "key '" + key + "': expected a real number, got '" + val + "'");
        };
        auto want_int = [&](int& slot, long long lo, long long hi) {
            long long v;
            if (detail::parse_int(val, v) && v >= lo && v <= hi) slot = static_cast<int>(v);
            else fail(lineno, "key '" + key + "': expected an integer in [" + std::to_string(lo) +
                                  ", " + std::to_string(hi) + "], got '" + val + "'");
        };
        auto want_u64 = [&](std::uint64_t& slot) {
            long long v;
            if (detail::parse_int(val, v) && v >= 0) slot = static_cast<std::uint64_t>(v);
            else fail(lineno, "key '" + key + "': expected a non-negative integer");
        };
        auto want_list = [&](std::vector<double>& slot) {
            if (!detail::parse_list(val, slot))
                fail(lineno, "key '" + key + "': expected a comma-separated list of reals");
        };

        if (key == "warping.family") c.warping_family = val;
        else if (key == "warping.params") want_list(c.warping_params);
        else if (key == "warping.domain") {
            std::vector<double> d;
            if (detail::parse_list(val, d) && d.size() == 2) {
                c.domain_lo = d[0];
                c.domain_hi = d[1];
            } else fail(lineno, "warping.domain expects 'lo, hi'");
        } else if (key == "warping.ref_point") {
            double v;
            if (detail::parse_double(val, v)) c.ref_point = v;
            else fail(lineno, "warping.ref_point: expected a real number");
        } else if (key == "einstein.case") want_int(c.einstein_case, 1, 6);
        else if (key == "einstein.n") want_int(c.einstein_n, 2, 16);
        else if (key == "einstein.cbar") want_double(c.einstein_cbar);
        else if (key == "einstein.c") want_double(c.einstein_c);
        else if (key == "einstein.params") want_list(c.einstein_params);
        else if (key == "fiber.topology") c.fiber_topology = val;
        else if (key == "fiber.size") {
            std::vector<double> d;
            if (detail::parse_list(val, d) && (d.size() == 1 || d.size() == 2)) {
                c.fiber_nx = static_cast<int>(d[0]);
                c.fiber_ny = static_cast<int>(d.size() == 2 ? d[1] : d[0]);
            } else fail(lineno, "fiber.size expects 'n' or 'nx, ny'");
        } else if (key == "fiber.length") want_double(c.fiber_length);
        else if (key == "fiber.radius") want_double(c.fiber_radius);
        else if (key == "graph.t0") want_double(c.graph_t0);
        else if (key == "graph.seed") want_u64(c.graph_seed);
        else if (key == "graph.margin") want_double(c.graph_margin);
        else if (key == "graph.modes") want_int(c.graph_modes, 1, 4);
        else if (key == "solver.lambda_cap") {
            double v;
            if (!detail::parse_double(val, v)) fail(lineno, "solver.lambda_cap: expected a real");
            else if (!(v > 0.0 && v < 1.0)) fail(lineno, "lambda_cap must lie in (0,1)");
            else c.solver.lambda_cap = v;
        } else if (key == "solver.residual_tol") want_double(c.solver.residual_tol);
        else if (key == "solver.max_newton_iters") want_int(c.solver.max_newton_iters, 1, 100000);
        else if (key == "solver.max_linear_iters") want_int(c.solver.max_linear_iters, 1, 100000);
        else if (key == "solver.mode") {
            if (val == "fixed-c") c.solver.mode = SolveMode::fixed_c;
            else if (val == "slice-anchored") c.solver.mode = SolveMode::slice_anchored;
            else fail(lineno, "solver.mode must be 'fixed-c' or 'slice-anchored'");
        } else if (key == "solver.c") want_double(c.solver_c);
        else if (key == "solver.anchor_t") {
            double v;
            if (detail::parse_double(val, v)) c.anchor_t = v;
            else fail(lineno, "solver.anchor_t: expected a real number");
        } else if (key == "solver.flow_pretol") want_double(c.solver.flow_pretol);
        else if (key == "solver.seed") want_u64(c.solver.seed);
        else if (key == "solver.threads") want_int(c.solver.threads, 1, 256);
        else if (key == "conditions.t_lo") want_double(c.cond_t_lo);
        else if (key == "conditions.t_hi") want_double(c.cond_t_hi);
        else if (key == "conditions.samples") want_int(c.cond_samples, 1, 1000000);
        else if (key == "experiment.theorem") c.experiment_theorem = val;
        else if (key == "experiment.runs") want_int(c.experiment_runs, 1, 1000);
        else if (key == "experiment.seed") want_u64(c.experiment_seed);
        else if (key == "run.out_dir") c.out_dir = val;
        else if (key == "run.refine") want_int(c.refine_levels, 1, 6);
        else if (key == "run.quiet") c.quiet = val == "true" || val == "1";
        else fail(lineno, "unknown key '" + key + "'");
    }

    // construction-time validation, reported with the most relevant line
    auto line_of = [&](std::initializer_list<const char*> keys) {
        for (const char* k : keys) {
            auto it = seen_lines.find(k);
            if (it != seen_lines.end()) return it->second;
        }
        return 0;
    };
    if (res.errors.empty()) {
        try {
            (void)res.config.build_warping();
        } catch (const std::exception& e) {
            fail(line_of({"warping.family", "einstein.params", "einstein.case", "warping.params"}),
                 std::string("warping: ") + e.what());
        }
        try {
            (void)res.config.build_fiber();
        } catch (const std::exception& e) {
            fail(line_of({"fiber.topology", "fiber.size"}), std::string("fiber: ") + e.what());
        }
        try {
            res.config.solver.validate();
        } catch (const std::exception& e) {
            fail(line_of({"solver.lambda_cap", "solver.residual_tol"}),
                 std::string("solver: ") + e.what());
        }
        TheoremTag tag;
        if (!theorem_tag_from_name(res.config.experiment_theorem, tag))
            fail(line_of({"experiment.theorem"}),
                 "unknown experiment.theorem '" + res.config.experiment_theorem + "'");
    }
    return res;
}

inline std::vector<std::pair<std::string, std::string>> ExperimentConfig::echo() const {
    std::vector<std::pair<std::string, std::string>> kv;
    auto num = [](double v) {
        std::ostringstream os;
        os.precision(17);
        os << v;
        return os.str();
    };
    auto list = [&](const std::vector<double>& v) {
        std::string s;
        for (std::size_t k = 0; k < v.size(); ++k) s += (k ? "," : "") + num(v[k]);
        return s;
    };
    kv.emplace_back("warping.family", warping_family);
    if (warping_family == "einstein") {
        kv.emplace_back("einstein.case", std::to_string(einstein_case));
        kv.emplace_back("einstein.n", std::to_string(einstein_n));
        kv.emplace_back("einstein.cbar", num(einstein_cbar));
        kv.emplace_back("einstein.c", num(einstein_c));
        kv.emplace_back("einstein.params", list(einstein_params));
    } else {
        kv.emplace_back("warping.params", list(warping_params));
        kv.emplace_back("warping.domain", num(domain_lo) + "," + num(domain_hi));
        if (ref_point) kv.emplace_back("warping.ref_point", num(*ref_point));
    }
    kv.emplace_back("fiber.topology", fiber_topology);
    kv.emplace_back("fiber.size", std::to_string(fiber_nx) + "," + std::to_string(fiber_ny));
    kv.emplace_back(fiber_topology == "sphere" ? "fiber.radius" : "fiber.length",
                    num(fiber_topology == "sphere" ? fiber_radius : fiber_length));
    kv.emplace_back("graph.t0", num(graph_t0));
    kv.emplace_back("graph.seed", std::to_string(graph_seed));
    kv.emplace_back("graph.margin", num(graph_margin));
    kv.emplace_back("graph.modes", std::to_string(graph_modes));
    kv.emplace_back("solver.lambda_cap", num(solver.lambda_cap));
    kv.emplace_back("solver.residual_tol", num(solver.residual_tol));
    kv.emplace_back("solver.max_newton_iters", std::to_string(solver.max_newton_iters));
    kv.emplace_back("solver.max_linear_iters", std::to_string(solver.max_linear_iters));
    kv.emplace_back("solver.mode",
                    solver.mode == SolveMode::fixed_c ? "fixed-c" : "slice-anchored");
    if (!std::isnan(solver_c)) kv.emplace_back("solver.c", num(solver_c));
    if (anchor_t) kv.emplace_back("solver.anchor_t", num(*anchor_t));
    kv.emplace_back("solver.flow_pretol", num(solver.flow_pretol));
    kv.emplace_back("solver.seed", std::to_string(solver.seed));
    kv.emplace_back("solver.threads", std::to_string(solver.threads));
    kv.emplace_back("conditions.t_lo", num(cond_t_lo));
    kv.emplace_back("conditions.t_hi", num(cond_t_hi));
    kv.emplace_back("conditions.samples", std::to_string(cond_samples));
    kv.emplace_back("experiment.theorem", experiment_theorem);
    kv.emplace_back("experiment.runs", std::to_string(experiment_runs));
    kv.emplace_back("experiment.seed", std::to_string(experiment_seed));
    kv.emplace_back("run.refine", std::to_string(refine_levels));
    return kv;
}

}  // namespace grw
