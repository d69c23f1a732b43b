#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "plar/backfit.hpp"
#include "plar/detail/parallel.hpp"
#include "plar/errors.hpp"
#include "plar/io.hpp"
#include "plar/kernel.hpp"
#include "plar/metrics.hpp"
#include "plar/model.hpp"
#include "plar/svg.hpp"

namespace plar::harness {

enum class BuiltinId { PlusAR1, MinusAR1, AR4 };

inline std::optional<BuiltinId> builtin_id_from_string(const std::string& name) {
    if (name == "plus") return BuiltinId::PlusAR1;
    if (name == "minus") return BuiltinId::MinusAR1;
    if (name == "ar4") return BuiltinId::AR4;
    return std::nullopt;
}

inline std::string to_string(BuiltinId id) {
    switch (id) {
        case BuiltinId::PlusAR1: return "plus";
        case BuiltinId::MinusAR1: return "minus";
        case BuiltinId::AR4: return "ar4";
    }
    return "?";
}

/// The three built-in example models: b(e) = sqrt|e|, sigma(e) = 1 + e^2/24,
/// 6-periodic seasonal levels (-1.2, 3.1, 1.80, -2.51, -3.2, -0.25),
/// uniform[-3,3] exogenous noise, standard Gaussian system noise. The AR
/// part is 0.7 / -0.7 / the order-4 polynomial with roots
/// {0.5, -0.5, 0.75, 0.25}.
inline model::ModelSpec builtin_model(BuiltinId id, std::uint64_t seed = 1) {
    model::ModelSpec spec;
    spec.b_fn = model::SymbolicFn::sqrt_abs();
    spec.sigma_fn = model::SymbolicFn::quadratic_affine(1.0, 1.0 / 24.0);
    spec.period_T = 6;
    spec.seasonal_s = {-1.2, 3.1, 1.80, -2.51, -3.2, -0.25};
    spec.eta_law = model::NoiseLaw::uniform(3.0);
    spec.eps_law = model::NoiseLaw::gaussian();
    spec.seed = seed;
    switch (id) {
        case BuiltinId::PlusAR1:
            spec.p = 1;
            spec.theta = Eigen::VectorXd::Constant(1, 0.7);
            break;
        case BuiltinId::MinusAR1:
            spec.p = 1;
            spec.theta = Eigen::VectorXd::Constant(1, -0.7);
            break;
        case BuiltinId::AR4: {
            spec.p = 4;
            const double roots[] = {0.5, -0.5, 0.75, 0.25};
            spec.theta = model::coeffs_from_roots(roots);
            break;
        }
    }
    return spec;
}

/// Monte Carlo experiment description. Mirrors the JSON config format.
struct ExperimentPlan {
    std::string model_id = "minus";  // plus | minus | ar4 | custom
    std::optional<model::ModelSpec> custom;
    std::vector<int> ns = {200, 500, 1000, 2000, 4000};
    int reps = 20;
    backfit::StopMode k_policy = backfit::StopMode::fixed(20);
    double tol = 1e-3;
    std::uint64_t base_seed = 1;
    std::filesystem::path outputs = "plar-out";
    kernel::BandwidthRule bw_b = kernel::BandwidthRule::empirical_sqrt();
    kernel::BandwidthRule bw_sigma = kernel::BandwidthRule::empirical_cbrt();

    model::ModelSpec resolve_model() const {
        if (model_id == "custom") {
            if (!custom) throw InvalidInput("ExperimentPlan: custom model not provided");
            auto spec = *custom;
            spec.seed = base_seed;
            return spec;
        }
        const auto id = builtin_id_from_string(model_id);
        if (!id) throw InvalidInput("ExperimentPlan: unknown model id '" + model_id + "'");
        return builtin_model(*id, base_seed);
    }

    void validate() const {
        if (ns.empty()) throw InvalidInput("ExperimentPlan: ns must be non-empty");
        for (std::size_t i = 1; i < ns.size(); ++i) {
            if (ns[i] <= ns[i - 1]) {
                throw InvalidInput("ExperimentPlan: ns must be strictly increasing");
            }
        }
        if (reps < 1) throw InvalidInput("ExperimentPlan: reps must be >= 1");
        if (!(tol > 0.0)) throw InvalidInput("ExperimentPlan: tol must be > 0");
    }
};

/// Paper-scale grid: 200, 500, then steps of 500 up to 10000 (50 reps).
inline std::vector<int> full_scale_ns() {
    std::vector<int> ns = {200};
    for (int n = 500; n <= 10000; n += 500) ns.push_back(n);
    return ns;
}

struct RateRow {
    int n = 0;
    metrics::ErrorReport avg;
    int reps_used = 0;
};

struct RateTable {
    std::vector<RateRow> rows;
    /// (column name, fitted rate) pairs; empty when fewer than 4 sizes ran.
    std::vector<std::pair<std::string, metrics::RateFit>> slopes;
    std::vector<std::string> warnings;
};

namespace detail_hn {

struct Column {
    const char* name;
    std::function<double(const metrics::ErrorReport&)> get;
};

inline const std::vector<Column>& report_columns() {
    static const std::vector<Column> cols = {
        {"theta_err", [](const metrics::ErrorReport& r) { return r.theta_err; }},
        {"b_N1", [](const metrics::ErrorReport& r) { return r.b_err.n1; }},
        {"b_N2", [](const metrics::ErrorReport& r) { return r.b_err.n2; }},
        {"b_Ninf", [](const metrics::ErrorReport& r) { return r.b_err.ninf; }},
        {"s_N1", [](const metrics::ErrorReport& r) { return r.sigma_err.n1; }},
        {"s_N2", [](const metrics::ErrorReport& r) { return r.sigma_err.n2; }},
        {"s_Ninf", [](const metrics::ErrorReport& r) { return r.sigma_err.ninf; }},
        {"tv", [](const metrics::ErrorReport& r) { return r.noise_dist.tv; }},
        {"hellinger", [](const metrics::ErrorReport& r) { return r.noise_dist.hellinger; }},
        {"ks", [](const metrics::ErrorReport& r) { return r.noise_dist.kolmogorov; }},
    };
    return cols;
}

/// Reference curve c * ((ln n)/n)^{1/4} with c matched to the data in mean
/// log; the exponent is pinned at the theoretical value.
inline std::vector<std::pair<double, double>> quarter_rate_curve(
    const std::vector<int>& ns, const std::vector<double>& errors) {
    plar::detail::CompensatedSum acc;
    std::size_t used = 0;
    for (std::size_t i = 0; i < ns.size(); ++i) {
        if (errors[i] > 0.0) {
            const double base = std::log(std::log(static_cast<double>(ns[i])) /
                                         static_cast<double>(ns[i]));
            acc.add(std::log(errors[i]) - 0.25 * base);
            ++used;
        }
    }
    std::vector<std::pair<double, double>> curve;
    if (used == 0) return curve;
    const double c = std::exp(acc.value() / static_cast<double>(used));
    for (int n : ns) {
        const double nd = static_cast<double>(n);
        curve.emplace_back(nd, c * std::pow(std::log(nd) / nd, 0.25));
    }
    return curve;
}

inline void write_rate_svg(const std::filesystem::path& path, const std::string& title,
                           const std::vector<int>& ns,
                           const std::vector<std::pair<std::string, std::vector<double>>>& cols) {
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c"};
    svg::LogLogPlot plot(title, "n", "error");
    int color = 0;
    std::size_t plotted = 0;
    for (const auto& [label, values] : cols) {
        svg::Series s;
        s.label = label;
        s.color = palette[color++ % 3];
        for (std::size_t i = 0; i < ns.size(); ++i) {
            if (values[i] > 0.0) s.points.emplace_back(ns[i], values[i]);
        }
        if (!s.points.empty()) {
            plotted += s.points.size();
            plot.add_series(std::move(s));
        }
    }
    if (plotted == 0) {
        io::write_text_file(path,
                            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" "
                            "height=\"480\"><text x=\"320\" y=\"240\" "
                            "text-anchor=\"middle\">no data</text></svg>\n");
        return;
    }
    if (!cols.empty()) {
        const auto ref = quarter_rate_curve(ns, cols.front().second);
        if (ref.size() >= 2) {
            svg::Series s;
            s.label = "c*(ln n/n)^0.25";
            s.color = "#555555";
            s.dashed = true;
            s.markers = false;
            s.points = ref;
            plot.add_series(std::move(s));
        }
    }
    io::write_text_file(path, plot.render());
}

}  // namespace detail_hn

/// Scores one replication: simulate with a dedicated stream, estimate with
/// the configured policy, compare against the generating truth.
inline metrics::ErrorReport score_replication(const model::ModelSpec& spec, int n,
                                              std::uint64_t stream,
                                              const backfit::StopMode& stop, double tol,
                                              const kernel::BandwidthRule& bw_b,
                                              const kernel::BandwidthRule& bw_sigma) {
    const auto traj = model::simulate(spec, n, std::nullopt, stream);
    backfit::BackfitConfig cfg;
    cfg.stop_mode = stop;
    cfg.tol = tol;
    cfg.bw_b = bw_b;
    cfg.bw_sigma = bw_sigma;
    const auto result = backfit::run_backfit(traj, spec.p, cfg);

    const auto domain = spec.domain();
    metrics::ErrorReport report;
    report.n = n;
    report.k_stop = result.k_stop;
    report.theta_err = (result.theta - spec.theta).norm();
    report.b_err = metrics::fn_norms(result.b_hat, spec.b_fn, domain);
    const auto& sigma_fn = spec.sigma_fn;
    report.sigma_err = metrics::fn_norms(
        result.sigma2_hat,
        [&sigma_fn](double e) {
            const double s = sigma_fn(e);
            return s * s;
        },
        domain);
    report.noise_dist = metrics::noise_distances(result.residuals);
    return report;
}

/// Runs the Monte Carlo rate study: `reps` replications per sample size on
/// independent generator streams, averaged reports per size, fitted rate
/// slopes, CSV and SVG emission into plan.outputs. Replications run in
/// parallel (PLAR_THREADS caps the workers); aggregation order is fixed by
/// (size, replication) regardless of scheduling, so outputs are
/// deterministic. A failed replication is excluded with a warning.
inline RateTable run_plan(const ExperimentPlan& plan) {
    plan.validate();
    const auto spec = plan.resolve_model();
    std::filesystem::create_directories(plan.outputs);

    const std::size_t n_sizes = plan.ns.size();
    const auto reps = static_cast<std::size_t>(plan.reps);
    std::vector<std::optional<metrics::ErrorReport>> reports(n_sizes * reps);
    std::vector<std::string> failures(n_sizes * reps);

    plar::detail::parallel_tasks(
        n_sizes * reps, plar::detail::thread_budget(), [&](std::size_t task) {
            const std::size_t size_idx = task / reps;
            const std::size_t rep = task % reps;
            const auto stream =
                (static_cast<std::uint64_t>(size_idx) << 32) | static_cast<std::uint64_t>(rep);
            try {
                reports[task] =
                    score_replication(spec, plan.ns[size_idx], stream, plan.k_policy,
                                      plan.tol, plan.bw_b, plan.bw_sigma);
            } catch (const std::exception& ex) {
                failures[task] = ex.what();
            }
        });

    RateTable table;
    std::string rep_csv = io::error_report_csv_header();
    for (std::size_t size_idx = 0; size_idx < n_sizes; ++size_idx) {
        RateRow row;
        row.n = plan.ns[size_idx];
        metrics::ErrorReport sum;
        double k_sum = 0.0;
        for (std::size_t rep = 0; rep < reps; ++rep) {
            const std::size_t task = size_idx * reps + rep;
            if (!reports[task]) {
                table.warnings.push_back("replication (n=" + std::to_string(row.n) +
                                         ", rep=" + std::to_string(rep) +
                                         ") failed: " + failures[task]);
                continue;
            }
            const auto& r = *reports[task];
            rep_csv += io::error_report_csv_row(row.n, static_cast<int>(rep), r);
            sum.theta_err += r.theta_err;
            sum.b_err.n1 += r.b_err.n1;
            sum.b_err.n2 += r.b_err.n2;
            sum.b_err.ninf += r.b_err.ninf;
            sum.sigma_err.n1 += r.sigma_err.n1;
            sum.sigma_err.n2 += r.sigma_err.n2;
            sum.sigma_err.ninf += r.sigma_err.ninf;
            sum.noise_dist.tv += r.noise_dist.tv;
            sum.noise_dist.hellinger += r.noise_dist.hellinger;
            sum.noise_dist.kolmogorov += r.noise_dist.kolmogorov;
            k_sum += r.k_stop;
            ++row.reps_used;
        }
        if (row.reps_used > 0) {
            const double m = row.reps_used;
            row.avg.n = row.n;
            row.avg.theta_err = sum.theta_err / m;
            row.avg.b_err = {sum.b_err.n1 / m, sum.b_err.n2 / m, sum.b_err.ninf / m};
            row.avg.sigma_err = {sum.sigma_err.n1 / m, sum.sigma_err.n2 / m,
                                 sum.sigma_err.ninf / m};
            row.avg.noise_dist = {sum.noise_dist.tv / m, sum.noise_dist.hellinger / m,
                                  sum.noise_dist.kolmogorov / m};
            row.avg.k_stop = static_cast<int>(std::lround(k_sum / m));
        }
        table.rows.push_back(std::move(row));
    }

    for (const auto& w : table.warnings) std::cerr << "warning: " << w << "\n";

    // Averages CSV.
    std::string avg_csv =
        "n,reps_used,theta_err,b_N1,b_N2,b_Ninf,s_N1,s_N2,s_Ninf,tv,hellinger,ks,mean_k\n";
    for (const auto& row : table.rows) {
        std::ostringstream line;
        line << row.n << ',' << row.reps_used;
        for (const auto& col : detail_hn::report_columns()) {
            line << ',' << io::format_double(col.get(row.avg));
        }
        line << ',' << row.avg.k_stop << '\n';
        avg_csv += line.str();
    }

    // Rate fits against (ln n)/n, one per error column.
    std::vector<int> fit_ns;
    for (const auto& row : table.rows) {
        if (row.reps_used > 0) fit_ns.push_back(row.n);
    }
    std::string slope_csv = "column,slope,c_hat\n";
    if (fit_ns.size() >= 4) {
        for (const auto& col : detail_hn::report_columns()) {
            std::vector<double> errs;
            for (const auto& row : table.rows) {
                if (row.reps_used > 0) errs.push_back(col.get(row.avg));
            }
            bool positive = true;
            for (double v : errs) positive = positive && v > 0.0;
            if (!positive) continue;
            const auto fit = metrics::fit_rate(fit_ns, errs);
            table.slopes.emplace_back(col.name, fit);
            slope_csv += std::string(col.name) + "," + io::format_double(fit.slope) + "," +
                         io::format_double(fit.c_hat) + "\n";
        }
    }

    io::write_text_file(plan.outputs / "replications.csv", rep_csv);
    io::write_text_file(plan.outputs / "averages.csv", avg_csv);
    io::write_text_file(plan.outputs / "slopes.csv", slope_csv);

    auto column_values = [&](const char* name) {
        std::vector<double> out;
        for (const auto& col : detail_hn::report_columns()) {
            if (std::string(col.name) == name) {
                for (const auto& row : table.rows) {
                    out.push_back(row.reps_used > 0 ? col.get(row.avg) : 0.0);
                }
            }
        }
        return out;
    };
    std::vector<int> all_ns(plan.ns.begin(), plan.ns.end());
    detail_hn::write_rate_svg(plan.outputs / "rate_theta.svg", "coefficient error", all_ns,
                              {{"theta err", column_values("theta_err")}});
    detail_hn::write_rate_svg(plan.outputs / "rate_b.svg", "regression function error",
                              all_ns,
                              {{"N1", column_values("b_N1")},
                               {"N2", column_values("b_N2")},
                               {"Ninf", column_values("b_Ninf")}});
    detail_hn::write_rate_svg(plan.outputs / "rate_sigma.svg", "variance function error",
                              all_ns,
                              {{"N1", column_values("s_N1")},
                               {"N2", column_values("s_N2")},
                               {"Ninf", column_values("s_Ninf")}});
    detail_hn::write_rate_svg(plan.outputs / "rate_noise.svg", "noise distribution distance",
                              all_ns,
                              {{"TV", column_values("tv")},
                               {"Hellinger", column_values("hellinger")},
                               {"KS", column_values("ks")}});
    return table;
}

struct StoppingEntry {
    std::string model;
    int n = 0;
    int rep = 0;
    int k = 0;
};

/// Stabilized stopping-index study: per model and sample size, `reps`
/// replications on matched streams (the same stream per (n, rep) across
/// models, so model comparisons see the same noise draws).
inline std::vector<StoppingEntry> stopping_study(const std::vector<std::string>& models,
                                                 const std::vector<int>& ns, int reps,
                                                 double tol, std::uint64_t base_seed,
                                                 const std::filesystem::path& outputs,
                                                 int max_iters = 400) {
    if (models.empty()) throw InvalidInput("stopping_study: no models");
    if (reps < 1) throw InvalidInput("stopping_study: reps must be >= 1");
    std::filesystem::create_directories(outputs);

    std::vector<model::ModelSpec> specs;
    for (const auto& name : models) {
        const auto id = builtin_id_from_string(name);
        if (!id) throw InvalidInput("stopping_study: unknown model '" + name + "'");
        specs.push_back(builtin_model(*id, base_seed));
    }

    const std::size_t per_model = ns.size() * static_cast<std::size_t>(reps);
    std::vector<StoppingEntry> entries(models.size() * per_model);
    plar::detail::parallel_tasks(
        entries.size(), plar::detail::thread_budget(), [&](std::size_t task) {
            const std::size_t model_idx = task / per_model;
            const std::size_t inner = task % per_model;
            const std::size_t size_idx = inner / static_cast<std::size_t>(reps);
            const int rep = static_cast<int>(inner % static_cast<std::size_t>(reps));
            const auto stream = (static_cast<std::uint64_t>(size_idx) << 32) |
                                static_cast<std::uint64_t>(rep);
            const auto traj =
                model::simulate(specs[model_idx], ns[size_idx], std::nullopt, stream);
            backfit::BackfitConfig cfg;
            cfg.stop_mode = backfit::StopMode::stabilized();
            cfg.tol = tol;
            cfg.max_iters = max_iters;
            const auto result = backfit::run_backfit(traj, specs[model_idx].p, cfg);
            entries[task] = {models[model_idx], ns[size_idx], rep, result.k_stop};
        });

    std::string csv = "model,n,rep,k\n";
    for (const auto& e : entries) {
        csv += e.model + "," + std::to_string(e.n) + "," + std::to_string(e.rep) + "," +
               std::to_string(e.k) + "\n";
    }
    io::write_text_file(outputs / "stopping.csv", csv);

    std::string med_csv = "model,n,median_k\n";
    svg::LogLogPlot plot("stopping index", "n", "k");
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c"};
    for (std::size_t mi = 0; mi < models.size(); ++mi) {
        svg::Series s;
        s.label = models[mi];
        s.color = palette[mi % 3];
        for (std::size_t si = 0; si < ns.size(); ++si) {
            std::vector<int> ks;
            for (int rep = 0; rep < reps; ++rep) {
                ks.push_back(entries[mi * per_model + si * static_cast<std::size_t>(reps) +
                                     static_cast<std::size_t>(rep)]
                                 .k);
            }
            std::sort(ks.begin(), ks.end());
            const double median =
                ks.size() % 2 == 1
                    ? ks[ks.size() / 2]
                    : 0.5 * (ks[ks.size() / 2 - 1] + ks[ks.size() / 2]);
            med_csv += models[mi] + "," + std::to_string(ns[si]) + "," +
                       io::format_double(median) + "\n";
            s.points.emplace_back(ns[si], median);
        }
        plot.add_series(std::move(s));
    }
    io::write_text_file(outputs / "stopping_medians.csv", med_csv);
    io::write_text_file(outputs / "stopping.svg", plot.render());
    return entries;
}

/// JSON plan loader (fields mirror ExperimentPlan).
inline ExperimentPlan plan_from_json(const io::json& j) {
    ExperimentPlan plan;
    if (j.contains("model_id")) plan.model_id = j.at("model_id").get<std::string>();
    if (j.contains("custom")) plan.custom = io::model_spec_from_json(j.at("custom"));
    if (j.contains("ns")) plan.ns = j.at("ns").get<std::vector<int>>();
    if (j.contains("reps")) plan.reps = j.at("reps").get<int>();
    if (j.contains("k_policy")) {
        const auto& kp = j.at("k_policy");
        const std::string mode = kp.at("mode").get<std::string>();
        if (mode == "fixed") {
            plan.k_policy = backfit::StopMode::fixed(kp.at("k").get<int>());
        } else if (mode == "stabilized") {
            plan.k_policy = backfit::StopMode::stabilized();
            if (kp.contains("tol")) plan.tol = kp.at("tol").get<double>();
        } else {
            throw IoError("unknown k_policy mode: " + mode);
        }
    }
    if (j.contains("base_seed")) plan.base_seed = j.at("base_seed").get<std::uint64_t>();
    if (j.contains("outputs")) plan.outputs = j.at("outputs").get<std::string>();
    return plan;
}

}  // namespace plar::harness
