// Acceptance suite: runs every acceptance criterion at its pinned settings
// and prints one PASS/FAIL line per criterion. Exit code is the number of
// failed criteria. argv[1] must point at the CLI binary (used by the
// determinism criterion).

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "plar/plar.hpp"

using namespace plar;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
    std::printf("criterion %d: %s - %s\n", criterion, pass ? "PASS" : "FAIL",
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

double spectral_radius(const Eigen::MatrixXd& m) {
    Eigen::EigenSolver<Eigen::MatrixXd> eig(m);
    double rho = 0;
    for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) {
        rho = std::max(rho, std::abs(eig.eigenvalues()[i]));
    }
    return rho;
}

bool check_report_invariants(const metrics::ErrorReport& r, std::string& why) {
    const double slack = 1e-9;
    if (!(r.b_err.n1 <= r.b_err.n2 + slack && r.b_err.n2 <= r.b_err.ninf + slack)) {
        why = "b norms out of order";
        return false;
    }
    if (!(r.sigma_err.n1 <= r.sigma_err.n2 + slack &&
          r.sigma_err.n2 <= r.sigma_err.ninf + slack)) {
        why = "sigma norms out of order";
        return false;
    }
    const auto& d = r.noise_dist;
    if (!(d.kolmogorov <= d.tv)) {
        why = "Kolmogorov > TV";
        return false;
    }
    if (!(d.hellinger <= std::sqrt(d.tv) + slack)) {
        why = "Hellinger > sqrt(TV)";
        return false;
    }
    for (double v : {d.tv, d.hellinger, d.kolmogorov}) {
        if (!(v >= 0.0 && v <= 1.0)) {
            why = "distance outside [0,1]";
            return false;
        }
    }
    return true;
}

// --- criterion 1: rate reproduction -----------------------------------------

harness::RateTable criterion1(const fs::path& workdir) {
    harness::ExperimentPlan plan;
    plan.model_id = "minus";
    plan.ns = {200, 500, 1000, 2000, 4000};
    plan.reps = 20;
    plan.k_policy = backfit::StopMode::fixed(20);
    plan.base_seed = 1;
    plan.outputs = workdir / "rate";
    const auto table = harness::run_plan(plan);

    double slope_theta = 0, slope_b2 = 0;
    for (const auto& [name, fit] : table.slopes) {
        if (name == "theta_err") slope_theta = fit.slope;
        if (name == "b_N2") slope_b2 = fit.slope;
    }
    const bool theta_ok = slope_theta >= 0.15 && slope_theta <= 0.35;
    const bool b_ok = slope_b2 >= 0.15 && slope_b2 <= 0.35;
    report(1, theta_ok && b_ok,
           "theta slope " + fmt(slope_theta) + (theta_ok ? " in" : " outside") +
               " [0.15,0.35]; b N2 slope " + fmt(slope_b2) + (b_ok ? " in" : " outside") +
               " [0.15,0.35]");
    double err2000 = 0, err_max = 0;
    for (const auto& row : table.rows) {
        if (row.n == 2000) err2000 = row.avg.theta_err;
        if (row.n == plan.ns.back()) err_max = row.avg.theta_err;
    }
    std::printf("  note: averaged theta error n=2000: %s, n=4000: %s (flattening regime)\n",
                fmt(err2000).c_str(), fmt(err_max).c_str());
    return table;
}

// --- criterion 2: stopping behavior ------------------------------------------

void criterion2(const fs::path& workdir) {
    std::vector<int> ns;
    for (int n = 100; n <= 1000; n += 100) ns.push_back(n);
    const auto entries = harness::stopping_study({"plus", "minus", "ar4"}, ns, 5, 1e-3, 1,
                                                 workdir / "stopping");
    auto median = [&](const std::string& m, int n) {
        std::vector<int> ks;
        for (const auto& e : entries) {
            if (e.model == m && e.n == n) ks.push_back(e.k);
        }
        std::sort(ks.begin(), ks.end());
        return 0.5 * (ks[(ks.size() - 1) / 2] + ks[ks.size() / 2]);
    };

    int minus_lo = 1 << 30, minus_hi = 0;
    for (const auto& e : entries) {
        if (e.model == "minus") {
            minus_lo = std::min(minus_lo, e.k);
            minus_hi = std::max(minus_hi, e.k);
        }
    }
    const bool band_ok = minus_lo >= 4 && minus_hi <= 10;

    bool plus_above = true, ar4_between = true;
    double plus_med_at_500 = 0, ar4_med_at_500 = 0, minus_med_at_500 = 0;
    for (int n : ns) {
        const double m_minus = median("minus", n);
        const double m_plus = median("plus", n);
        const double m_ar4 = median("ar4", n);
        plus_above = plus_above && m_plus > m_minus;
        ar4_between = ar4_between && m_ar4 > m_minus && m_ar4 < m_plus;
        if (n == 500) {
            minus_med_at_500 = m_minus;
            plus_med_at_500 = m_plus;
            ar4_med_at_500 = m_ar4;
        }
    }
    report(2, band_ok && plus_above && ar4_between,
           std::string("minus k in [4,10]: ") + (band_ok ? "yes" : "no") + " (range [" +
               std::to_string(minus_lo) + "," + std::to_string(minus_hi) +
               "]); plus median > minus at every n: " + (plus_above ? "yes" : "no") +
               "; ar4 median between: " + (ar4_between ? "yes" : "no") +
               " (medians at n=500: minus " + fmt(minus_med_at_500) + ", ar4 " +
               fmt(ar4_med_at_500) + ", plus " + fmt(plus_med_at_500) + ")");
}

// --- criterion 3: contraction property ---------------------------------------

void criterion3() {
    const auto spec = harness::builtin_model(harness::BuiltinId::MinusAR1, 5);
    const auto traj = model::simulate(spec, 2000);
    const auto phi = backfit::build_phi(traj, 1);
    const double h = kernel::bandwidth(kernel::BandwidthRule::empirical_sqrt(), 2000, traj.e);
    const auto a_n = backfit::compute_An(traj, phi, kernel::Kernel::gaussian(), h);

    backfit::BackfitConfig ca, cb;
    ca.stop_mode = cb.stop_mode = backfit::StopMode::fixed(20);
    cb.theta_init = Eigen::VectorXd::Constant(1, 10.0);
    const auto ra = backfit::run_backfit(traj, 1, ca);
    const auto rb = backfit::run_backfit(traj, 1, cb);

    double worst_residual = 0;
    bool geometric = true;
    Eigen::VectorXd gap_prev = Eigen::VectorXd::Constant(1, -10.0);
    double prev_norm = gap_prev.norm();
    for (int k = 0; k < 20; ++k) {
        const Eigen::VectorXd gap =
            ra.theta_history[static_cast<std::size_t>(k)] -
            rb.theta_history[static_cast<std::size_t>(k)];
        worst_residual = std::max(worst_residual, (gap - a_n * gap_prev).norm());
        if (gap.norm() > prev_norm + 1e-15) geometric = false;
        prev_norm = gap.norm();
        gap_prev = gap;
    }
    const double rho = spectral_radius(a_n);
    const bool pass = worst_residual <= 1e-8 && geometric && rho < 1.0;
    report(3, pass,
           "recursion residual " + fmt(worst_residual) + " (tol 1e-8); gap decay " +
               (geometric ? "geometric" : "non-monotone") + "; spectral radius " + fmt(rho));
}

// --- criterion 4: least-squares oracle equivalence ---------------------------

void criterion4() {
    model::ModelSpec spec;
    spec.p = 2;
    spec.theta = (Eigen::VectorXd(2) << 0.5, -0.3).finished();
    spec.b_fn = model::SymbolicFn::zero();
    spec.sigma_fn = model::SymbolicFn::constant(1.0);
    spec.period_T = 1;
    spec.seasonal_s = {0.0};
    spec.eta_law = model::NoiseLaw::uniform(2.0);
    spec.eps_law = model::NoiseLaw::gaussian();
    spec.seed = 17;
    const auto traj = model::simulate(spec, 4000);
    const auto phi = backfit::build_phi(traj, 2);

    backfit::BackfitConfig cfg;
    cfg.zero_b = true;
    const auto step = backfit::backfit_step(traj, phi, Eigen::VectorXd::Zero(2), cfg);

    Eigen::VectorXd y(phi.rows());
    for (Eigen::Index l = 0; l < phi.rows(); ++l) {
        y[l] = traj.x[static_cast<std::size_t>(l + 2)];
    }
    const auto ols = oracles::least_squares(phi, y);
    const double gap = (step.theta_next - ols).norm();
    report(4, gap <= 1e-10, "one zero-b step vs closed-form least squares: gap " + fmt(gap));
}

// --- criterion 5: smoother exactness ------------------------------------------

void criterion5() {
    PhiloxRng rng(8, 0);
    std::vector<double> e, r;
    for (int i = 0; i < 500; ++i) {
        e.push_back(rng.uniform(-2.0, 2.0));
        r.push_back(3.7);
    }
    const auto dom = IntervalUnion::single(-2.0, 2.0);
    const auto fe = kernel::nw_fit(e, r, kernel::Kernel::gaussian(), 0.3, dom);
    double worst = 0;
    for (double g : dom.grid(200)) {
        worst = std::max(worst, std::abs(kernel::nw_eval(fe, g) - 3.7));
    }

    const auto unit = IntervalUnion::single(0.0, 1.0);
    const std::vector<double> ze{0.0, 0.5, 1.0}, zr{0.0, 0.0, 0.0};
    const auto zero_est = kernel::nw_fit(ze, zr, kernel::Kernel::gaussian(), 1.0, unit);
    const auto norms = metrics::fn_norms(zero_est, [](double x) { return -x; }, unit);
    const bool norm_ok = std::abs(norms.n1 - 0.5) <= 1e-3 &&
                         std::abs(norms.n2 - 0.57735) <= 1e-3 &&
                         std::abs(norms.ninf - 1.0) <= 1e-3;
    report(5, worst <= 1e-12 && norm_ok,
           "constant reproduction error " + fmt(worst) + "; norm trio (" + fmt(norms.n1) +
               ", " + fmt(norms.n2) + ", " + fmt(norms.ninf) + ") vs (0.5, 0.57735, 1)");
}

// --- criterion 6: interval coverage -------------------------------------------

void criterion6() {
    const auto spec = harness::builtin_model(harness::BuiltinId::MinusAR1, 2024);
    const int n = 5000, holdout = 1000;
    const auto full = model::simulate(spec, n + holdout);
    model::Trajectory est;
    est.x.assign(full.x.begin(), full.x.begin() + n);
    est.e.assign(full.e.begin(), full.e.begin() + n);
    est.truth = spec;
    backfit::BackfitConfig cfg;
    const auto res = backfit::run_backfit(est, 1, cfg, detail::thread_budget());
    const auto rr = forecast::retro_residuals(res, est);

    auto coverage = [&](double alpha) {
        const double q = forecast::quantile(rr, alpha);
        int covered = 0;
        for (int t = n; t < n + holdout; ++t) {
            const double last = full.x[static_cast<std::size_t>(t - 1)];
            const double e_t = full.e[static_cast<std::size_t>(t)];
            const double pred = res.theta[0] * last + kernel::nw_eval(res.b_hat, e_t);
            const double s = std::sqrt(
                std::max(kernel::nw_eval(res.sigma2_hat, e_t), backfit::kVarianceFloor));
            if (std::abs(full.x[static_cast<std::size_t>(t)] - pred) <= s * q) ++covered;
        }
        return static_cast<double>(covered) / holdout;
    };
    const double c10 = coverage(0.10), c05 = coverage(0.05), c20 = coverage(0.20);
    const bool pass = c10 >= 0.87 && c10 <= 0.93 && c05 >= c20;
    report(6, pass,
           "coverage alpha=0.10: " + fmt(c10) + " (want [0.87,0.93]); alpha=0.05: " +
               fmt(c05) + " >= alpha=0.20: " + fmt(c20));
}

// --- criterion 7: norm and distance invariants --------------------------------

void criterion7(const harness::RateTable& table) {
    std::string why;
    bool ok = true;
    int checked = 0;
    for (const auto& row : table.rows) {
        if (row.reps_used == 0) continue;
        ok = ok && check_report_invariants(row.avg, why);
        ++checked;
    }
    const auto spec = harness::builtin_model(harness::BuiltinId::MinusAR1, 1);
    for (int rep = 0; rep < 5 && ok; ++rep) {
        const auto r = harness::score_replication(
            spec, 300, 7000 + static_cast<std::uint64_t>(rep), backfit::StopMode::fixed(8),
            1e-3, kernel::BandwidthRule::empirical_sqrt(), kernel::BandwidthRule::empirical_cbrt());
        ok = ok && check_report_invariants(r, why);
        ++checked;
    }
    report(7, ok,
           ok ? "N1<=N2<=Ninf, K<=TV, H<=sqrt(TV), distances in [0,1] on " +
                    std::to_string(checked) + " reports"
              : why);
}

// --- criterion 8: CLI determinism ----------------------------------------------

bool run_cli(const std::string& cli, const std::string& args) {
    const std::string cmd = "\"" + cli + "\" " + args + " > /dev/null 2>&1";
    return std::system(cmd.c_str()) == 0;
}

bool same_dir_bytes(const fs::path& a, const fs::path& b, std::string& why) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(a)) {
        if (entry.is_regular_file()) files.push_back(fs::relative(entry.path(), a));
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
        why = "no files under " + a.string();
        return false;
    }
    for (const auto& rel : files) {
        if (!fs::exists(b / rel)) {
            why = "missing " + rel.string();
            return false;
        }
        if (io::read_text_file(a / rel) != io::read_text_file(b / rel)) {
            why = "byte mismatch in " + rel.string();
            return false;
        }
    }
    return true;
}

void criterion8(const std::string& cli, const fs::path& workdir) {
    if (cli.empty()) {
        report(8, false, "no CLI path provided");
        return;
    }
    const fs::path d1 = workdir / "cli1", d2 = workdir / "cli2";
    fs::create_directories(d1);
    fs::create_directories(d2);

    bool ran = true;
    for (const fs::path& d : {d1, d2}) {
        const std::string traj = (d / "traj.csv").string();
        ran = ran && run_cli(cli, "simulate --model minus --n 600 --seed 9 --out " + traj);
        ran = ran && run_cli(cli, "estimate --data " + traj + " --p 1 --k 6 --out " +
                                      (d / "est").string());
        ran = ran && run_cli(cli, "forecast --data " + traj +
                                      " --p 1 --alpha 0.1 --e-next 0.5 --out " +
                                      (d / "forecast.csv").string());
        ran = ran && run_cli(cli, "mc-rate --model minus --ns 150,300 --reps 2 --seed 4 "
                                  "--k 4 --out " +
                                      (d / "mc").string());
        ran = ran && run_cli(cli, "stopping --models minus --ns 200:400:200 --reps 2 "
                                  "--tol 1e-3 --seed 1 --out " +
                                      (d / "stop").string());
    }
    std::string why;
    const bool pass = ran && same_dir_bytes(d1, d2, why);
    report(8, pass,
           pass ? "simulate/estimate/forecast/mc-rate/stopping reruns byte-identical"
                : (ran ? why : "a CLI invocation failed"));
}

}  // namespace

int main(int argc, char** argv) {
    const std::string cli = argc > 1 ? argv[1] : "";
    const auto workdir = fs::temp_directory_path() / "plar_acceptance";
    fs::remove_all(workdir);
    fs::create_directories(workdir);

    const auto table = criterion1(workdir);
    criterion2(workdir);
    criterion3();
    criterion4();
    criterion5();
    criterion6();
    criterion7(table);
    criterion8(cli, workdir);

    std::printf("%d of 8 criteria passed\n", 8 - failures);
    return failures;
}
