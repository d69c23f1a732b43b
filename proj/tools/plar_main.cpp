// Command-line interface: simulation, estimation, forecasting and the
// Monte Carlo studies, all emitting deterministic CSV/JSON/SVG artifacts.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "plar/plar.hpp"

namespace {

using plar::InvalidInput;

/// Accepts "200,500,1000" or "100:1000:100" (start:stop:step, inclusive).
std::vector<int> parse_sizes(const std::string& text) {
    std::vector<int> out;
    if (text.find(':') != std::string::npos) {
        int start = 0, stop = 0, step = 0;
        if (std::sscanf(text.c_str(), "%d:%d:%d", &start, &stop, &step) != 3 || step <= 0) {
            throw InvalidInput("bad size range '" + text + "' (want start:stop:step)");
        }
        for (int n = start; n <= stop; n += step) out.push_back(n);
        return out;
    }
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t next = text.find(',', pos);
        if (next == std::string::npos) next = text.size();
        out.push_back(std::stoi(text.substr(pos, next - pos)));
        pos = next + 1;
    }
    if (out.empty()) throw InvalidInput("empty size list");
    return out;
}

std::vector<std::string> split_csv_list(const std::string& text) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t next = text.find(',', pos);
        if (next == std::string::npos) next = text.size();
        out.push_back(text.substr(pos, next - pos));
        pos = next + 1;
    }
    return out;
}

plar::model::ModelSpec resolve_model_arg(const std::string& name, std::uint64_t seed) {
    if (name.rfind("custom:", 0) == 0) {
        auto spec = plar::io::load_model_spec(name.substr(7));
        spec.seed = seed;
        return spec;
    }
    const auto id = plar::harness::builtin_id_from_string(name);
    if (!id) throw InvalidInput("unknown model '" + name + "'");
    return plar::harness::builtin_model(*id, seed);
}

int cmd_simulate(const std::string& model, int n, std::uint64_t seed, int burn_in,
                 const std::string& out) {
    const auto spec = resolve_model_arg(model, seed);
    std::optional<int> burn;
    if (burn_in >= 0) burn = burn_in;
    const auto traj = plar::model::simulate(spec, n, burn);
    plar::io::save_trajectory(traj, out);
    std::cout << "wrote " << out << " (" << traj.n() << " rows)\n";
    return 0;
}

plar::backfit::EstimationResult estimate_file(const std::string& data, int p, int k,
                                              bool stabilized, double tol) {
    const auto traj = plar::io::load_trajectory(data);
    plar::backfit::BackfitConfig cfg;
    cfg.tol = tol;
    cfg.stop_mode = stabilized ? plar::backfit::StopMode::stabilized()
                               : plar::backfit::StopMode::fixed(k);
    return plar::backfit::run_backfit(traj, p, cfg, plar::detail::thread_budget());
}

int cmd_estimate(const std::string& data, int p, int k, bool stabilized, double tol,
                 const std::string& out_dir) {
    const auto result = estimate_file(data, p, k, stabilized, tol);
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path out(out_dir);
    plar::io::write_text_file(out / "result.json", plar::io::to_json(result).dump(2) + "\n");
    plar::io::write_text_file(out / "b_hat.csv", plar::io::function_grid_csv(result.b_hat));
    plar::io::write_text_file(out / "sigma2_hat.csv",
                              plar::io::function_grid_csv(result.sigma2_hat));
    std::cout << "k_stop=" << result.k_stop << (result.stabilized ? "" : " (not stabilized)")
              << " theta=[";
    for (Eigen::Index j = 0; j < result.theta.size(); ++j) {
        std::cout << (j ? "," : "") << plar::io::format_double(result.theta[j]);
    }
    std::cout << "]\nwrote " << out_dir << "/{result.json,b_hat.csv,sigma2_hat.csv}\n";
    return 0;
}

int cmd_forecast(const std::string& data, int p, double alpha, double e_next,
                 const std::string& out) {
    const auto traj = plar::io::load_trajectory(data);
    plar::backfit::BackfitConfig cfg;
    cfg.stop_mode = plar::backfit::StopMode::stabilized();
    const auto result =
        plar::backfit::run_backfit(traj, p, cfg, plar::detail::thread_budget());
    std::vector<double> last_p_x(static_cast<std::size_t>(p));
    for (int j = 0; j < p; ++j) {
        last_p_x[static_cast<std::size_t>(j)] =
            traj.x[static_cast<std::size_t>(traj.n() - 1 - j)];
    }
    const auto fi = plar::forecast::interval(result, traj, last_p_x, e_next, alpha);
    plar::io::write_text_file(out, plar::io::interval_csv_header() +
                                       plar::io::interval_csv_row(traj.n() + 1, fi));
    std::cout << "point=" << plar::io::format_double(fi.point) << " interval=["
              << plar::io::format_double(fi.lo) << ", " << plar::io::format_double(fi.hi)
              << "] alpha=" << plar::io::format_double(alpha) << "\nwrote " << out << "\n";
    return 0;
}

int cmd_mc_rate(plar::harness::ExperimentPlan plan) {
    const auto table = plar::harness::run_plan(plan);
    for (const auto& [name, fit] : table.slopes) {
        std::cout << name << ": slope=" << plar::io::format_double(fit.slope)
                  << " c=" << plar::io::format_double(fit.c_hat) << "\n";
    }
    std::cout << "wrote " << plan.outputs.string() << "\n";
    return 0;
}

int cmd_stopping(const std::string& models, const std::string& ns_text, int reps, double tol,
                 std::uint64_t seed, const std::string& out_dir) {
    const auto entries = plar::harness::stopping_study(
        split_csv_list(models), parse_sizes(ns_text), reps, tol, seed, out_dir);
    std::cout << "wrote " << out_dir << "/stopping.csv (" << entries.size() << " rows)\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Partially linear autoregression toolkit"};
    app.require_subcommand(1);

    // simulate
    std::string sim_model = "minus", sim_out = "trajectory.csv";
    int sim_n = 5000, sim_burn = -1;
    std::uint64_t sim_seed = 1;
    auto* sim = app.add_subcommand("simulate", "simulate a trajectory to CSV");
    sim->add_option("--model", sim_model, "plus|minus|ar4|custom:<path.json>");
    sim->add_option("--n", sim_n, "trajectory length")->required();
    sim->add_option("--seed", sim_seed, "generator seed");
    sim->add_option("--burn-in", sim_burn, "burn-in length (-1 = automatic)");
    sim->add_option("--out", sim_out, "output CSV path")->required();

    // estimate
    std::string est_data, est_out = "estimate-out";
    int est_p = 1, est_k = 20;
    bool est_stab = false;
    double est_tol = 1e-3;
    auto* est = app.add_subcommand("estimate", "backfitting estimation from a CSV");
    est->add_option("--data", est_data, "input CSV (t,x,e)")->required();
    est->add_option("--p", est_p, "autoregression order")->required();
    auto* est_k_opt = est->add_option("--k", est_k, "fixed iteration count");
    auto* est_stab_opt =
        est->add_flag("--stabilized", est_stab, "iterate until increments fall below --tol");
    est_k_opt->excludes(est_stab_opt);
    est->add_option("--tol", est_tol, "stabilization tolerance");
    est->add_option("--out", est_out, "output directory")->required();

    // forecast
    std::string fc_data, fc_out = "forecast.csv";
    int fc_p = 1;
    double fc_alpha = 0.1, fc_e_next = 0.0;
    auto* fc = app.add_subcommand("forecast", "one-step prediction interval");
    fc->add_option("--data", fc_data, "input CSV (t,x,e)")->required();
    fc->add_option("--p", fc_p, "autoregression order")->required();
    fc->add_option("--alpha", fc_alpha, "interval level")->required();
    fc->add_option("--e-next", fc_e_next, "next exogenous input")->required();
    fc->add_option("--out", fc_out, "output CSV path")->required();

    // mc-rate
    std::string mc_model = "minus", mc_ns, mc_out = "mc-out", mc_config;
    int mc_reps = -1, mc_k = 20;
    std::uint64_t mc_seed = 1;
    bool mc_full = false;
    auto* mc = app.add_subcommand("mc-rate", "Monte Carlo convergence-rate study");
    mc->add_option("--model", mc_model, "plus|minus|ar4|custom:<path.json>");
    mc->add_option("--ns", mc_ns, "sample sizes, e.g. 200,500,1000");
    mc->add_option("--reps", mc_reps, "replications per size");
    mc->add_option("--seed", mc_seed, "base seed");
    mc->add_option("--k", mc_k, "fixed iteration count");
    mc->add_option("--out", mc_out, "output directory");
    mc->add_flag("--full-scale", mc_full, "paper-scale grid (n up to 10000, 50 reps)");
    mc->add_option("--config", mc_config, "JSON plan file (other flags override)");

    // stopping
    std::string st_models = "plus,minus,ar4", st_ns = "100:1000:100", st_out = "stopping-out";
    int st_reps = 5;
    double st_tol = 1e-3;
    std::uint64_t st_seed = 1;
    auto* st = app.add_subcommand("stopping", "stabilized stopping-index study");
    st->add_option("--models", st_models, "comma list of builtin models");
    st->add_option("--ns", st_ns, "sizes (list or start:stop:step)");
    st->add_option("--reps", st_reps, "replications per size");
    st->add_option("--tol", st_tol, "stabilization tolerance");
    st->add_option("--seed", st_seed, "base seed");
    st->add_option("--out", st_out, "output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) return cmd_simulate(sim_model, sim_n, sim_seed, sim_burn, sim_out);
        if (est->parsed()) {
            return cmd_estimate(est_data, est_p, est_k, est_stab, est_tol, est_out);
        }
        if (fc->parsed()) return cmd_forecast(fc_data, fc_p, fc_alpha, fc_e_next, fc_out);
        if (mc->parsed()) {
            plar::harness::ExperimentPlan plan;
            if (!mc_config.empty()) {
                plan = plar::harness::plan_from_json(
                    plar::io::json::parse(plar::io::read_text_file(mc_config)));
            }
            if (mc->count("--model") || mc_config.empty()) {
                if (mc_model.rfind("custom:", 0) == 0) {
                    plan.model_id = "custom";
                    plan.custom = plar::io::load_model_spec(mc_model.substr(7));
                } else {
                    plan.model_id = mc_model;
                }
            }
            if (mc_full) {
                plan.ns = plar::harness::full_scale_ns();
                plan.reps = 50;
            }
            if (!mc_ns.empty()) plan.ns = parse_sizes(mc_ns);
            if (mc_reps > 0) plan.reps = mc_reps;
            if (mc->count("--seed") || mc_config.empty()) plan.base_seed = mc_seed;
            if (mc->count("--k") || mc_config.empty()) {
                plan.k_policy = plar::backfit::StopMode::fixed(mc_k);
            }
            if (mc->count("--out") || mc_config.empty()) plan.outputs = mc_out;
            return cmd_mc_rate(std::move(plan));
        }
        if (st->parsed()) {
            return cmd_stopping(st_models, st_ns, st_reps, st_tol, st_seed, st_out);
        }
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    }
    return 0;
}
