#include "pamtomo/analytic.hpp"
#include "pamtomo/config.hpp"
#include "pamtomo/filtering.hpp"
#include "pamtomo/maxlik.hpp"
#include "pamtomo/sampler.hpp"
#include "pamtomo/sim.hpp"
#include "pamtomo/version.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace pamtomo;

namespace {

constexpr double two_pi = 6.28318530717958647692;

struct Paths {
    fs::path out;
    fs::path records() const { return out / "records.bin"; }
    fs::path povm() const { return out / "povm.tsv"; }
    fs::path povm_rep(int rep) const { return out / ("povm_rep" + std::to_string(rep) + ".tsv"); }
    fs::path sweep() const { return out / "sweep.tsv"; }
    fs::path rho_re() const { return out / "rho_re.tsv"; }
    fs::path rho_im() const { return out / "rho_im.tsv"; }
    fs::path wig() const { return out / "wigner.tsv"; }
    fs::path iters() const { return out / "iterations.tsv"; }
    fs::path fid() const { return out / "fidelity.txt"; }
    fs::path manifest() const { return out / "manifest.json"; }
};

Paths make_paths(const ExperimentConfig& cfg, const std::string& out_override)
{
    Paths p;
    p.out = out_override.empty() ? fs::path(cfg.run.out_dir) : fs::path(out_override);
    fs::create_directories(p.out);
    return p;
}

void print_warnings(const ExperimentConfig& cfg)
{
    for (const std::string& w : cfg.params.regime_warnings())
        std::cerr << "warning: " << w << "\n";
}

void write_manifest(const Paths& paths, const ExperimentConfig& cfg, const std::string& stage,
                    json extra)
{
    json m{{"tool_version", PAMTOMO_VERSION},
           {"config_hash", cfg.config_hash},
           {"stage", stage},
           {"schedule", {{"tau", cfg.schedule.tau},
                         {"T", is_infinite(cfg.schedule.T) ? -1.0 : cfg.schedule.T},
                         {"maintain_squeezing", cfg.schedule.maintain_squeezing},
                         {"characteristic_units", cfg.characteristic_units},
                         {"characteristic_time", characteristic_time(cfg.params)}}}};
    m["details"] = std::move(extra);
    std::ofstream os(paths.manifest());
    os << m.dump(2) << "\n";
}

std::vector<ProtocolSchedule> phase_schedules(const ExperimentConfig& cfg)
{
    std::vector<ProtocolSchedule> out(cfg.run.n_phases, cfg.schedule);
    for (int k = 0; k < cfg.run.n_phases; ++k)
        out[k].squeeze_phase = two_pi * k / cfg.run.n_phases;
    return out;
}

void header_comment(std::ofstream& os, const ExperimentConfig& cfg, const char* what)
{
    os << "# pamtomo " << what << " v1\n";
    os << "# tool_version=" << PAMTOMO_VERSION << "\n";
    os << "# config_hash=" << cfg.config_hash << "\n";
}

// ---------------------------------------------------------------- analytic

int cmd_analytic(const ExperimentConfig& cfg, const Paths& paths, bool emit_gnuplot)
{
    if (!cfg.has_sweep) throw ConfigError("analytic needs a 'sweep' section in the config");

    std::ofstream os(paths.sweep());
    if (!os) throw ConfigError("cannot write " + paths.sweep().string());
    header_comment(os, cfg, "analytic sweep");

    {
        const Thresholds th1 = thresholds_one_step(cfg.params);
        os << "# thresholds: chi_osc=" << th1.chi_osc << " chi_het=" << th1.chi_het
           << " chi_del_one_step=" << th1.chi_del;
        const double ehz = eta_het_zero(cfg.params, cfg.schedule.T);
        if (ehz > 0.0 && ehz <= 1.0) {
            const Thresholds th2 = thresholds_two_step(cfg.params, ehz);
            os << " chi_del_two_step=" << th2.chi_del;
        }
        os << "\n";
    }
    os << "# columns: " << cfg.sweep.axis
       << " s2y_zero_1step s2y_zero_2step_maint s2y_zero_2step_off s2y_blue_1step"
          " s2y_blue_2step_maint s2x_zero_1step s2x_zero_2step_maint eta_het_zero"
          " eta_het_blue eta_hom\n";

    char buf[512];
    for (int i = 0; i < cfg.sweep.points; ++i) {
        const double f = i / double(cfg.sweep.points - 1);
        const double x = cfg.sweep.log_scale
                             ? cfg.sweep.from * std::pow(cfg.sweep.to / cfg.sweep.from, f)
                             : cfg.sweep.from + (cfg.sweep.to - cfg.sweep.from) * f;
        SystemParams q = cfg.params;
        if (cfg.sweep.axis == "chi") q.chi = x;
        else q.mu = x;

        ProtocolSchedule one{0.0, cfg.schedule.T, true, 0.0};
        ProtocolSchedule two_m{cfg.schedule.tau, cfg.schedule.T, true, 0.0};
        ProtocolSchedule two_o{cfg.schedule.tau, cfg.schedule.T, false, 0.0};
        if (cfg.characteristic_units) {
            const double scale = characteristic_time(q);
            one.T = two_m.T = two_o.T = cfg.t_raw * scale;
            two_m.tau = two_o.tau = cfg.tau_raw * scale;
        }

        SystemParams qb = q;
        qb.regime = Regime::BlueDetuned;
        q.regime = Regime::ZeroDetuned;

        const EstimateStats z1 = sigma_zero_detuned(q, one);
        const EstimateStats zm = sigma_zero_detuned(q, two_m);
        const EstimateStats zo = sigma_zero_detuned(q, two_o);
        const EstimateStats b1 = sigma_blue_detuned(qb, one);
        const EstimateStats bm = sigma_blue_detuned(qb, two_m);
        const double ehz = eta_het_zero(q, one.T);
        const double ehb = eta_het_blue(qb, one.T);
        const double ehom = q.chi > q.gamma ? eta_hom(q) : std::nan("");

        std::snprintf(buf, sizeof(buf),
                      "%.10g %.10g %.10g %.10g %.10g %.10g %.10g %.10g %.10g %.10g %.10g\n", x,
                      z1.sigma2_y, zm.sigma2_y, zo.sigma2_y, b1.sigma2_y, bm.sigma2_y, z1.sigma2_x,
                      zm.sigma2_x, ehz, ehb, ehom);
        os << buf;
    }
    os.close();

    if (emit_gnuplot) {
        std::ofstream gp(paths.out / "sweep.gp");
        gp << "set datafile commentschars '#'\n";
        if (cfg.sweep.log_scale) gp << "set logscale x\nset logscale y\n";
        gp << "set xlabel '" << cfg.sweep.axis << "'\n";
        gp << "set ylabel 'estimate variance'\n";
        gp << "plot 'sweep.tsv' u 1:2 w l t 'zero one-step', \\\n"
              "     'sweep.tsv' u 1:3 w l t 'zero two-step', \\\n"
              "     'sweep.tsv' u 1:5 w l t 'blue one-step', \\\n"
              "     'sweep.tsv' u 1:6 w l t 'blue two-step', \\\n"
              "     0.5 w l dt 2 t 'homodyne limit', 1.0 w l dt 3 t 'heterodyne limit'\n";
    }

    write_manifest(paths, cfg, "analytic",
                   json{{"sweep_axis", cfg.sweep.axis},
                        {"points", cfg.sweep.points},
                        {"output", paths.sweep().string()}});
    std::cout << "analytic sweep written to " << paths.sweep().string() << "\n";
    return 0;
}

// ---------------------------------------------------------------- simulate

int cmd_simulate(const ExperimentConfig& cfg, const Paths& paths)
{
    if (is_infinite(cfg.schedule.T))
        throw ConfigError("simulate requires a finite measurement duration T");
    const FockState truth = build_truth_state(cfg.truth);
    const double dt = resolve_dt(cfg);
    GrowthPolicy policy;
    policy.initial_dim = truth.dim();
    policy.max_dim = cfg.run.sim_max_dim;

    const auto records = simulate_ensemble(truth, cfg.params, phase_schedules(cfg), dt,
                                           cfg.run.n_trials, cfg.run.base_seed, policy);
    write_records(paths.records().string(), records, cfg.config_hash);

    double max_tail = 0.0;
    int max_dim = 0;
    for (const auto& r : records) {
        max_tail = std::max(max_tail, r.max_tail_mass);
        max_dim = std::max(max_dim, r.final_dim);
    }
    write_manifest(paths, cfg, "simulate",
                   json{{"n_trials", cfg.run.n_trials},
                        {"dt", dt},
                        {"max_tail_mass", max_tail},
                        {"max_dim", max_dim},
                        {"output", paths.records().string()}});
    std::cout << "simulated " << records.size() << " trajectories (dt=" << dt
              << ", max basis " << max_dim << ", max tail " << max_tail << ")\n";
    return 0;
}

// ------------------------------------------------------------------ filter

int cmd_filter(const ExperimentConfig& cfg, const Paths& paths)
{
    std::string stored_hash;
    const auto records = read_records(paths.records().string(), &stored_hash);
    if (stored_hash != cfg.config_hash)
        throw ContractError("records file was produced with config hash " + stored_hash +
                            ", current config hash is " + cfg.config_hash);
    std::vector<GaussianPovmElement> elems;
    elems.reserve(records.size());
    for (const auto& r : records) elems.push_back(povm_element(r));
    write_povm_elements(paths.povm().string(), elems, {cfg.config_hash, PAMTOMO_VERSION});
    write_manifest(paths, cfg, "filter",
                   json{{"n_elements", elems.size()}, {"output", paths.povm().string()}});
    std::cout << "filtered " << elems.size() << " records into " << paths.povm().string() << "\n";
    return 0;
}

// ------------------------------------------------------------- reconstruct

struct ReconOutcome {
    double fidelity = 0.0;
    int iterations = 0;
    bool converged = false;
    double min_wigner = 0.0;
};

ReconOutcome run_reconstruction(const ExperimentConfig& cfg, const Paths& paths,
                                const std::vector<GaussianPovmElement>& elems, bool write_outputs)
{
    const FockState truth_hint = build_truth_state(cfg.truth);
    const int dim = cfg.recon.dim > 0 ? cfg.recon.dim
                                      : reconstruction_dim(elems, truth_hint.dim());
    const auto ops = operators_from_elements(elems, dim);

    ReconstructionConfig rcfg;
    rcfg.dim = dim;
    rcfg.tol = cfg.recon.tol;
    rcfg.max_iter = cfg.recon.max_iter;
    rcfg.dilution = cfg.recon.dilution;
    ReconstructionDiagnostics diag;
    const FockOperator rho = reconstruct(ops, rcfg, &diag);

    const FockState truth = build_truth_state(cfg.truth, dim);
    ReconOutcome res;
    res.fidelity = fidelity(rho, truth);
    res.iterations = diag.iterations;
    res.converged = diag.converged;

    GridSpec gs;
    gs.x_min = -cfg.wigner.half_range;
    gs.x_max = cfg.wigner.half_range;
    gs.y_min = -cfg.wigner.half_range;
    gs.y_max = cfg.wigner.half_range;
    gs.nx = gs.ny = cfg.wigner.points;
    const WignerGrid wg = wigner(rho, gs);
    res.min_wigner = wg.min_value();

    if (!write_outputs) return res;

    char buf[64];
    {
        std::ofstream re(paths.rho_re()), im(paths.rho_im());
        header_comment(re, cfg, "density matrix (real part)");
        header_comment(im, cfg, "density matrix (imag part)");
        for (int i = 0; i < dim; ++i) {
            for (int j = 0; j < dim; ++j) {
                std::snprintf(buf, sizeof(buf), "%.12g%c", rho(i, j).real(), j + 1 < dim ? '\t' : '\n');
                re << buf;
                std::snprintf(buf, sizeof(buf), "%.12g%c", rho(i, j).imag(), j + 1 < dim ? '\t' : '\n');
                im << buf;
            }
        }
    }
    {
        std::ofstream os(paths.wig());
        header_comment(os, cfg, "wigner grid");
        os << "# row 1: x coordinates; row 2: y coordinates; then W(y_i, x_j) rows\n";
        for (std::size_t i = 0; i < wg.xs.size(); ++i)
            os << wg.xs[i] << (i + 1 < wg.xs.size() ? '\t' : '\n');
        for (std::size_t i = 0; i < wg.ys.size(); ++i)
            os << wg.ys[i] << (i + 1 < wg.ys.size() ? '\t' : '\n');
        for (int iy = 0; iy < wg.values.rows(); ++iy)
            for (int ix = 0; ix < wg.values.cols(); ++ix) {
                std::snprintf(buf, sizeof(buf), "%.9g%c", wg.values(iy, ix),
                              ix + 1 < wg.values.cols() ? '\t' : '\n');
                os << buf;
            }
    }
    {
        std::ofstream os(paths.iters());
        header_comment(os, cfg, "maxlik iterations");
        os << "# columns: iteration log_likelihood trace_distance\n";
        for (std::size_t i = 0; i < diag.trace_distance.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%zu %.12g %.6g\n", i + 1,
                          diag.log_likelihood[i + 1], diag.trace_distance[i]);
            os << buf;
        }
    }
    return res;
}

int cmd_reconstruct(const ExperimentConfig& cfg, const Paths& paths)
{
    PovmFileMeta meta;
    const auto elems = read_povm_elements(paths.povm().string(), &meta);
    if (!meta.config_hash.empty() && meta.config_hash != cfg.config_hash)
        throw ContractError("povm file was produced with config hash " + meta.config_hash +
                            ", current config hash is " + cfg.config_hash);
    const ReconOutcome res = run_reconstruction(cfg, paths, elems, true);

    std::ofstream os(paths.fid());
    header_comment(os, cfg, "fidelity report");
    os << "# columns: repetition fidelity iterations converged\n";
    os << "0 " << res.fidelity << " " << res.iterations << " " << (res.converged ? 1 : 0) << "\n";
    os << "mean " << res.fidelity << "\nstd 0\n";

    write_manifest(paths, cfg, "reconstruct",
                   json{{"fidelity", res.fidelity},
                        {"iterations", res.iterations},
                        {"converged", res.converged},
                        {"min_wigner", res.min_wigner}});
    std::cout << "reconstruction fidelity " << res.fidelity << " (" << res.iterations
              << " iterations, min Wigner " << res.min_wigner << ")\n";
    return 0;
}

// ---------------------------------------------------------------- pipeline

int cmd_pipeline(const ExperimentConfig& cfg, const Paths& paths)
{
    const int reps = std::max(1, cfg.recon.repetitions);
    std::vector<ReconOutcome> outcomes;
    const FockState truth = build_truth_state(cfg.truth);

    for (int rep = 0; rep < reps; ++rep) {
        const std::uint64_t seed = cfg.run.base_seed + 1000003ull * rep;
        std::vector<GaussianPovmElement> elems;
        if (cfg.run.sampler == "povm") {
            auto sampled = sample_povm_elements(truth, cfg.params, cfg.schedule, cfg.run.n_trials,
                                                cfg.run.n_phases, seed);
            elems = std::move(sampled.elements);
        } else {
            if (is_infinite(cfg.schedule.T))
                throw ConfigError("sde pipeline requires finite T");
            GrowthPolicy policy;
            policy.initial_dim = truth.dim();
            policy.max_dim = cfg.run.sim_max_dim;
            const auto records = simulate_ensemble(truth, cfg.params, phase_schedules(cfg),
                                                   resolve_dt(cfg), cfg.run.n_trials, seed, policy);
            if (rep == 0) write_records(paths.records().string(), records, cfg.config_hash);
            elems.reserve(records.size());
            for (const auto& r : records) elems.push_back(povm_element(r));
        }
        write_povm_elements((reps == 1 ? paths.povm() : paths.povm_rep(rep)).string(), elems,
                            {cfg.config_hash, PAMTOMO_VERSION});
        if (reps > 1 && rep == 0)
            write_povm_elements(paths.povm().string(), elems, {cfg.config_hash, PAMTOMO_VERSION});
        outcomes.push_back(run_reconstruction(cfg, paths, elems, rep == 0));
        std::cout << "repetition " << rep << ": fidelity " << outcomes.back().fidelity << " ("
                  << outcomes.back().iterations << " iterations)\n";
    }

    double mean = 0.0;
    for (const auto& o : outcomes) mean += o.fidelity;
    mean /= outcomes.size();
    double var = 0.0;
    for (const auto& o : outcomes) var += (o.fidelity - mean) * (o.fidelity - mean);
    const double sd = outcomes.size() > 1 ? std::sqrt(var / (outcomes.size() - 1)) : 0.0;

    std::ofstream os(paths.fid());
    header_comment(os, cfg, "fidelity report");
    os << "# columns: repetition fidelity iterations converged\n";
    for (std::size_t i = 0; i < outcomes.size(); ++i)
        os << i << " " << outcomes[i].fidelity << " " << outcomes[i].iterations << " "
           << (outcomes[i].converged ? 1 : 0) << "\n";
    os << "mean " << mean << "\nstd " << sd << "\n";

    write_manifest(paths, cfg, "pipeline",
                   json{{"repetitions", reps},
                        {"fidelity_mean", mean},
                        {"fidelity_std", sd},
                        {"sampler", cfg.run.sampler},
                        {"min_wigner_rep0", outcomes.front().min_wigner}});
    std::cout << "pipeline fidelity " << mean << " +- " << sd << " over " << reps
              << " repetition(s)\n";
    return 0;
}

// ---------------------------------------------------------------- validate

struct Moments {
    double mx, my, vx, vy;
    int n;
};

Moments moments(const std::vector<GaussianPovmElement>& elems)
{
    Moments m{0, 0, 0, 0, static_cast<int>(elems.size())};
    for (const auto& e : elems) {
        m.mx += e.x_est;
        m.my += e.y_est;
    }
    m.mx /= m.n;
    m.my /= m.n;
    for (const auto& e : elems) {
        m.vx += (e.x_est - m.mx) * (e.x_est - m.mx);
        m.vy += (e.y_est - m.my) * (e.y_est - m.my);
    }
    m.vx /= (m.n - 1);
    m.vy /= (m.n - 1);
    return m;
}

int cmd_validate(const ExperimentConfig& cfg, const Paths& paths)
{
    if (is_infinite(cfg.schedule.T)) throw ConfigError("validate requires finite T");
    const FockState truth = build_truth_state(cfg.truth);
    const int n = cfg.run.n_trials;

    // all trials at phase 0 so both generators target identical statistics
    std::vector<ProtocolSchedule> sched(1, cfg.schedule);
    sched[0].squeeze_phase = 0.0;

    GrowthPolicy policy;
    policy.initial_dim = truth.dim();
    policy.max_dim = cfg.run.sim_max_dim;
    const auto records = simulate_ensemble(truth, cfg.params, sched, resolve_dt(cfg), n,
                                           cfg.run.base_seed, policy);
    std::vector<GaussianPovmElement> sde_elems;
    sde_elems.reserve(records.size());
    for (const auto& r : records) sde_elems.push_back(povm_element(r));

    const auto sampled =
        sample_povm_elements(truth, cfg.params, sched[0], n, 1, cfg.run.base_seed + 77);

    const Moments a = moments(sde_elems);
    const Moments b = moments(sampled.elements);

    bool ok = true;
    auto check_mean = [&](const char* name, double ma, double va, double mb, double vb) {
        const double se = std::sqrt(va / a.n + vb / b.n);
        const double diff = std::abs(ma - mb);
        const bool pass = diff <= 3.0 * se;
        ok = ok && pass;
        std::printf("%-28s sde=%+.4f povm=%+.4f |diff|=%.4f 3se=%.4f  %s\n", name, ma, mb, diff,
                    3.0 * se, pass ? "PASS" : "FAIL");
    };
    auto check_var = [&](const char* name, double va, double vb) {
        const double se = std::sqrt(2.0 * va * va / a.n + 2.0 * vb * vb / b.n);
        const double diff = std::abs(va - vb);
        const bool pass = diff <= 3.0 * se;
        ok = ok && pass;
        std::printf("%-28s sde=%.4f povm=%.4f |diff|=%.4f 3se=%.4f  %s\n", name, va, vb, diff,
                    3.0 * se, pass ? "PASS" : "FAIL");
    };
    std::printf("cross-validation: %d sde trials vs %d povm-sampler trials\n", a.n, b.n);
    check_mean("mean x_est", a.mx, a.vx, b.mx, b.vx);
    check_mean("mean y_est", a.my, a.vy, b.my, b.vy);
    check_var("var x_est", a.vx, b.vx);
    check_var("var y_est", a.vy, b.vy);

    write_manifest(paths, cfg, "validate",
                   json{{"n_trials", n},
                        {"pass", ok},
                        {"sde", {{"mx", a.mx}, {"my", a.my}, {"vx", a.vx}, {"vy", a.vy}}},
                        {"povm", {{"mx", b.mx}, {"my", b.my}, {"vx", b.vx}, {"vy", b.vy}}}});
    std::cout << (ok ? "validate: PASS\n" : "validate: FAIL\n");
    return ok ? 0 : 3;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"parametrically amplified optomechanical tomography toolkit"};
    app.set_version_flag("--version", PAMTOMO_VERSION);
    app.require_subcommand(1);

    std::string config_path, out_override;
    bool emit_gnuplot = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "experiment config (JSON)")->required();
        sub->add_option("--out", out_override, "override run.out_dir");
    };

    CLI::App* c_analytic = app.add_subcommand("analytic", "closed-form sweep tables");
    add_common(c_analytic);
    c_analytic->add_flag("--emit-gnuplot", emit_gnuplot, "write a gnuplot script next to the table");
    CLI::App* c_sim = app.add_subcommand("simulate", "generate trajectory records");
    add_common(c_sim);
    CLI::App* c_filter = app.add_subcommand("filter", "records -> POVM elements");
    add_common(c_filter);
    CLI::App* c_recon = app.add_subcommand("reconstruct", "POVM elements -> density matrix");
    add_common(c_recon);
    CLI::App* c_pipe = app.add_subcommand("pipeline", "full experiment end to end");
    add_common(c_pipe);
    CLI::App* c_val = app.add_subcommand("validate", "cross-check sde records vs povm sampler");
    add_common(c_val);

    CLI11_PARSE(app, argc, argv);

    try {
        const ExperimentConfig cfg = load_config(config_path);
        print_warnings(cfg);
        const Paths paths = make_paths(cfg, out_override);
        if (c_analytic->parsed()) return cmd_analytic(cfg, paths, emit_gnuplot);
        if (c_sim->parsed()) return cmd_simulate(cfg, paths);
        if (c_filter->parsed()) return cmd_filter(cfg, paths);
        if (c_recon->parsed()) return cmd_reconstruct(cfg, paths);
        if (c_pipe->parsed()) return cmd_pipeline(cfg, paths);
        if (c_val->parsed()) return cmd_validate(cfg, paths);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const ContractError& e) {
        std::cerr << "artifact mismatch: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const TruncationError& e) {
        std::cerr << "truncation error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
