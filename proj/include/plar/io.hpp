#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "plar/backfit.hpp"
#include "plar/errors.hpp"
#include "plar/forecast.hpp"
#include "plar/kernel.hpp"
#include "plar/metrics.hpp"
#include "plar/model.hpp"

namespace plar::io {

using json = nlohmann::ordered_json;

/// Round-trip-exact decimal rendering, preferring the short form when it
/// parses back to the same double.
inline std::string format_double(double v) {
    char buf[40];
    for (int prec : {15, 16, 17}) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) return buf;
    }
    return buf;  // non-finite values land here
}

inline void write_text_file(const std::filesystem::path& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << body;
    if (!out) throw IoError("write failed: " + path.string());
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path.string());
    std::ostringstream body;
    body << in.rdbuf();
    return body.str();
}

// ---------------------------------------------------------------------------
// JSON: model specification
// ---------------------------------------------------------------------------

inline json to_json(const model::SymbolicFn& fn) {
    using Kind = model::SymbolicFn::Kind;
    json j;
    switch (fn.kind()) {
        case Kind::Zero:
            j["kind"] = "Zero";
            break;
        case Kind::Constant:
            j["kind"] = "Constant";
            j["c"] = fn.params()[0];
            break;
        case Kind::SqrtAbs:
            j["kind"] = "SqrtAbs";
            break;
        case Kind::QuadraticAffine:
            j["kind"] = "QuadraticAffine";
            j["c0"] = fn.params()[0];
            j["c2"] = fn.params()[1];
            break;
        case Kind::PiecewiseLinear: {
            j["kind"] = "PiecewiseLinear";
            json knots = json::array();
            for (std::size_t i = 0; i + 1 < fn.params().size(); i += 2) {
                knots.push_back({fn.params()[i], fn.params()[i + 1]});
            }
            j["knots"] = knots;
            break;
        }
    }
    j["gamma"] = fn.holder_exponent();
    return j;
}

inline model::SymbolicFn symbolic_fn_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    model::SymbolicFn fn = model::SymbolicFn::zero();
    if (kind == "Zero") {
        fn = model::SymbolicFn::zero();
    } else if (kind == "Constant") {
        fn = model::SymbolicFn::constant(j.at("c").get<double>());
    } else if (kind == "SqrtAbs") {
        fn = model::SymbolicFn::sqrt_abs();
    } else if (kind == "QuadraticAffine") {
        fn = model::SymbolicFn::quadratic_affine(j.at("c0").get<double>(),
                                                 j.at("c2").get<double>());
    } else if (kind == "PiecewiseLinear") {
        std::vector<std::array<double, 2>> knots;
        for (const auto& k : j.at("knots")) {
            knots.push_back({k.at(0).get<double>(), k.at(1).get<double>()});
        }
        fn = model::SymbolicFn::piecewise_linear(std::move(knots));
    } else {
        throw IoError("unknown SymbolicFn kind: " + kind);
    }
    if (j.contains("gamma")) fn.with_holder_exponent(j.at("gamma").get<double>());
    return fn;
}

inline json to_json(const model::NoiseLaw& law) {
    using Kind = model::NoiseLaw::Kind;
    json j;
    switch (law.kind) {
        case Kind::Uniform:
            j["kind"] = "Uniform";
            j["half_width"] = law.param;
            break;
        case Kind::Gaussian:
            j["kind"] = "Gaussian";
            break;
        case Kind::TruncGaussian:
            j["kind"] = "TruncGaussian";
            j["cut"] = law.param;
            break;
    }
    return j;
}

inline model::NoiseLaw noise_law_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "Uniform") return model::NoiseLaw::uniform(j.at("half_width").get<double>());
    if (kind == "Gaussian") return model::NoiseLaw::gaussian();
    if (kind == "TruncGaussian") return model::NoiseLaw::trunc_gaussian(j.at("cut").get<double>());
    throw IoError("unknown NoiseLaw kind: " + kind);
}

inline json to_json(const model::ModelSpec& spec) {
    json j;
    j["p"] = spec.p;
    j["theta"] = std::vector<double>(spec.theta.data(), spec.theta.data() + spec.theta.size());
    j["b_fn"] = to_json(spec.b_fn);
    j["sigma_fn"] = to_json(spec.sigma_fn);
    j["period_T"] = spec.period_T;
    j["seasonal_s"] = spec.seasonal_s;
    j["eta_law"] = to_json(spec.eta_law);
    j["eps_law"] = to_json(spec.eps_law);
    j["seed"] = spec.seed;
    return j;
}

inline model::ModelSpec model_spec_from_json(const json& j) {
    model::ModelSpec spec;
    spec.p = j.at("p").get<int>();
    const auto theta = j.at("theta").get<std::vector<double>>();
    spec.theta = Eigen::Map<const Eigen::VectorXd>(theta.data(),
                                                   static_cast<Eigen::Index>(theta.size()));
    spec.b_fn = symbolic_fn_from_json(j.at("b_fn"));
    spec.sigma_fn = symbolic_fn_from_json(j.at("sigma_fn"));
    spec.period_T = j.at("period_T").get<int>();
    spec.seasonal_s = j.at("seasonal_s").get<std::vector<double>>();
    spec.eta_law = noise_law_from_json(j.at("eta_law"));
    spec.eps_law = noise_law_from_json(j.at("eps_law"));
    spec.seed = j.at("seed").get<std::uint64_t>();
    return spec;
}

inline model::ModelSpec load_model_spec(const std::filesystem::path& path) {
    return model_spec_from_json(json::parse(read_text_file(path)));
}

inline void save_model_spec(const model::ModelSpec& spec, const std::filesystem::path& path) {
    write_text_file(path, to_json(spec).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// CSV: trajectories, function grids, intervals, reports
// ---------------------------------------------------------------------------

inline std::string trajectory_csv(const model::Trajectory& traj) {
    std::string out = "t,x,e\n";
    for (int t = 0; t < traj.n(); ++t) {
        out += std::to_string(t + 1);
        out += ',';
        out += format_double(traj.x[static_cast<std::size_t>(t)]);
        out += ',';
        out += format_double(traj.e[static_cast<std::size_t>(t)]);
        out += '\n';
    }
    return out;
}

inline void save_trajectory(const model::Trajectory& traj, const std::filesystem::path& path) {
    write_text_file(path, trajectory_csv(traj));
}

inline model::Trajectory load_trajectory(const std::filesystem::path& path) {
    std::istringstream in(read_text_file(path));
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty trajectory file: " + path.string());
    if (line != "t,x,e" && line != "t,x,e\r") {
        throw IoError("expected header 't,x,e' in " + path.string());
    }
    model::Trajectory traj;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        double t = 0, x = 0, e = 0;
        if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &t, &x, &e) != 3) {
            throw IoError("bad row " + std::to_string(line_no) + " in " + path.string());
        }
        traj.x.push_back(x);
        traj.e.push_back(e);
    }
    if (traj.x.empty()) throw IoError("no data rows in " + path.string());
    return traj;
}

/// Function estimate sampled on the canonical grid of its domain.
inline std::string function_grid_csv(const kernel::FunctionEstimate& fe) {
    const auto grid = fe.domain.grid(kernel::kGridPointsPerComponent);
    const auto values = kernel::nw_eval_grid(fe, grid);
    std::string out = "e,value\n";
    for (std::size_t i = 0; i < grid.size(); ++i) {
        out += format_double(grid[i]);
        out += ',';
        out += format_double(values[i]);
        out += '\n';
    }
    return out;
}

inline std::string interval_csv_header() { return "t,point,lo,hi,alpha\n"; }

inline std::string interval_csv_row(int t, const forecast::ForecastInterval& fi) {
    std::string out = std::to_string(t);
    out += ',';
    out += format_double(fi.point);
    out += ',';
    out += format_double(fi.lo);
    out += ',';
    out += format_double(fi.hi);
    out += ',';
    out += format_double(fi.alpha);
    out += '\n';
    return out;
}

inline std::string error_report_csv_header() {
    return "n,rep,theta_err,b_N1,b_N2,b_Ninf,s_N1,s_N2,s_Ninf,tv,hellinger,ks,k_stop\n";
}

inline std::string error_report_csv_row(int n, int rep, const metrics::ErrorReport& r) {
    std::ostringstream out;
    out << n << ',' << rep;
    for (double v : {r.theta_err, r.b_err.n1, r.b_err.n2, r.b_err.ninf, r.sigma_err.n1,
                     r.sigma_err.n2, r.sigma_err.ninf, r.noise_dist.tv,
                     r.noise_dist.hellinger, r.noise_dist.kolmogorov}) {
        out << ',' << format_double(v);
    }
    out << ',' << r.k_stop << '\n';
    return out.str();
}

inline json to_json(const backfit::EstimationResult& result) {
    json j;
    json history = json::array();
    for (const auto& th : result.theta_history) {
        history.push_back(std::vector<double>(th.data(), th.data() + th.size()));
    }
    j["theta_history"] = history;
    j["theta"] = std::vector<double>(result.theta.data(),
                                     result.theta.data() + result.theta.size());
    j["k_stop"] = result.k_stop;
    j["stabilized"] = result.stabilized;
    json sigma_rows = json::array();
    for (Eigen::Index i = 0; i < result.sigma_n_over_n.rows(); ++i) {
        std::vector<double> row(static_cast<std::size_t>(result.sigma_n_over_n.cols()));
        for (Eigen::Index c = 0; c < result.sigma_n_over_n.cols(); ++c) {
            row[static_cast<std::size_t>(c)] = result.sigma_n_over_n(i, c);
        }
        sigma_rows.push_back(row);
    }
    j["sigma_n_over_n"] = sigma_rows;
    j["sigma_n_condition"] = result.sigma_n_condition;
    j["h_b"] = result.h_b;
    j["h_sigma"] = result.h_sigma;
    return j;
}

}  // namespace plar::io
