#include "pamtomo/config.hpp"

#include "pamtomo/analytic.hpp"
#include "pamtomo/sim.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

namespace pamtomo {

using json = nlohmann::json;

namespace {

double json_time(const json& j, const char* key, double fallback)
{
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (v.is_string()) {
        const std::string s = v.get<std::string>();
        if (s == "inf" || s == "infinite") return infinite_time;
        throw ConfigError(std::string("bad time value for ") + key + ": " + s);
    }
    return v.get<double>();
}

std::uint64_t fnv1a_str(const std::string& s)
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string hex64(std::uint64_t v)
{
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

} // namespace

ExperimentConfig load_config(const std::string& path)
{
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config: " + path);
    json j;
    try {
        is >> j;
    } catch (const std::exception& e) {
        throw ConfigError("config parse error in " + path + ": " + e.what());
    }

    ExperimentConfig cfg;
    try {
        const json& p = j.at("params");
        cfg.params.gamma = p.at("gamma");
        cfg.params.n_th = p.value("n_th", 0.0);
        cfg.params.eta = p.value("eta", 1.0);
        cfg.params.chi = p.value("chi", 0.0);
        cfg.params.theta = p.value("theta", 0.0);
        cfg.params.regime = regime_from_name(p.value("regime", std::string("zero")));
        if (p.contains("cavity")) {
            CavityParams c;
            const json& pc = p["cavity"];
            c.g = pc.at("g");
            c.kappa = pc.at("kappa");
            c.omega_m = pc.value("omega_m", 0.0);
            c.delta = pc.value("delta", 0.0);
            cfg.params.cavity = c;
            cfg.params.mu = p.contains("mu") ? p.at("mu").get<double>()
                                             : 4.0 * c.g * c.g / c.kappa;
        } else {
            cfg.params.mu = p.value("mu", 0.0);
        }
        cfg.params.validate();

        const json s = j.value("schedule", json::object());
        cfg.tau_raw = json_time(s, "tau", 0.0);
        cfg.t_raw = json_time(s, "T", infinite_time);
        cfg.schedule.maintain_squeezing = s.value("maintain_squeezing", true);
        const std::string unit = s.value("time_unit", std::string("absolute"));
        if (unit == "characteristic") cfg.characteristic_units = true;
        else if (unit != "absolute")
            throw ConfigError("schedule.time_unit must be 'absolute' or 'characteristic'");
        double scale = 1.0;
        if (cfg.characteristic_units) scale = characteristic_time(cfg.params);
        cfg.schedule.tau = is_infinite(cfg.tau_raw) ? infinite_time : cfg.tau_raw * scale;
        cfg.schedule.T = is_infinite(cfg.t_raw) ? infinite_time : cfg.t_raw * scale;
        cfg.schedule.validate();

        const json t = j.value("truth", json::object());
        cfg.truth.kind = t.value("kind", std::string("coherent"));
        if (t.contains("alpha")) {
            const auto& a = t["alpha"];
            if (a.is_array())
                cfg.truth.alpha = cx(a.at(0).get<double>(), a.size() > 1 ? a.at(1).get<double>() : 0.0);
            else cfg.truth.alpha = cx(a.get<double>(), 0.0);
        }
        cfg.truth.fock_n = t.value("n", 0);
        if (cfg.truth.kind != "coherent" && cfg.truth.kind != "cat" && cfg.truth.kind != "fock")
            throw ConfigError("truth.kind must be coherent, cat or fock");

        const json r = j.value("run", json::object());
        cfg.run.n_trials = r.value("n_trials", 1000);
        cfg.run.n_phases = r.value("n_phases", 50);
        if (r.contains("dt") && !r["dt"].is_string()) cfg.run.dt = r["dt"].get<double>();
        cfg.run.base_seed = r.value("base_seed", 1ull);
        cfg.run.sampler = r.value("sampler", std::string("povm"));
        cfg.run.out_dir = r.value("out_dir", std::string("out"));
        cfg.run.sim_max_dim = r.value("sim_max_dim", 4096);
        if (cfg.run.sampler != "povm" && cfg.run.sampler != "sde")
            throw ConfigError("run.sampler must be 'povm' or 'sde'");
        if (cfg.run.n_phases < 1) throw ConfigError("run.n_phases must be >= 1");
        if (cfg.run.n_trials < 1) throw ConfigError("run.n_trials must be >= 1");

        const json rc = j.value("reconstruction", json::object());
        if (rc.contains("dim") && !rc["dim"].is_string()) cfg.recon.dim = rc["dim"].get<int>();
        cfg.recon.tol = rc.value("tol", 1e-6);
        cfg.recon.max_iter = rc.value("max_iter", 2000);
        cfg.recon.dilution = rc.value("dilution", 1.0);
        cfg.recon.repetitions = rc.value("repetitions", 1);

        if (j.contains("sweep")) {
            cfg.has_sweep = true;
            const json& sw = j["sweep"];
            cfg.sweep.axis = sw.value("axis", std::string("chi"));
            cfg.sweep.from = sw.at("from");
            cfg.sweep.to = sw.at("to");
            cfg.sweep.points = sw.value("points", 50);
            cfg.sweep.log_scale = sw.value("log", true);
            if (cfg.sweep.axis != "chi" && cfg.sweep.axis != "mu")
                throw ConfigError("sweep.axis must be 'chi' or 'mu'");
            if (cfg.sweep.points < 2) throw ConfigError("sweep.points must be >= 2");
            if (!(cfg.sweep.from > 0.0) && cfg.sweep.log_scale)
                throw ConfigError("log sweep requires from > 0");
        }

        const json w = j.value("wigner", json::object());
        cfg.wigner.half_range = w.value("half_range", 6.0);
        cfg.wigner.points = w.value("points", 161);
    } catch (const json::exception& e) {
        throw ConfigError("config error in " + path + ": " + e.what());
    }

    // hash over the physics-relevant sections only
    json hashed{{"params", j.at("params")},
                {"schedule", j.value("schedule", json::object())},
                {"truth", j.value("truth", json::object())}};
    hashed["run"] = json{{"n_trials", cfg.run.n_trials},
                         {"n_phases", cfg.run.n_phases},
                         {"base_seed", cfg.run.base_seed},
                         {"sampler", cfg.run.sampler},
                         {"dt", cfg.run.dt}};
    cfg.config_hash = hex64(fnv1a_str(hashed.dump()));
    return cfg;
}

FockState build_truth_state(const TruthSpec& t, int dim)
{
    if (dim <= 0) dim = recommended_dim(t.alpha);
    if (t.kind == "coherent") return coherent_state(t.alpha, dim);
    if (t.kind == "cat") return cat_state(t.alpha, dim);
    if (t.kind == "fock") return fock_basis_state(t.fock_n, std::max(dim, t.fock_n + 8));
    throw ConfigError("unknown truth kind: " + t.kind);
}

double resolve_dt(const ExperimentConfig& cfg)
{
    if (cfg.run.dt > 0.0) return cfg.run.dt;
    return default_dt(cfg.params);
}

} // namespace pamtomo
