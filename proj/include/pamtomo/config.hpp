#pragma once

#include "pamtomo/model.hpp"
#include "pamtomo/states.hpp"

#include <cstdint>
#include <string>

namespace pamtomo {

struct TruthSpec {
    std::string kind = "coherent"; // coherent | cat | fock
    cx alpha{0.0, 0.0};
    int fock_n = 0;
};

struct RunSpec {
    int n_trials = 1000;
    int n_phases = 50;
    double dt = 0.0; // 0: auto rule
    std::uint64_t base_seed = 1;
    std::string sampler = "povm"; // povm | sde
    std::string out_dir = "out";
    int sim_max_dim = 4096;
};

struct ReconSpec {
    int dim = 0; // 0: auto from the data
    double tol = 1e-6;
    int max_iter = 2000;
    double dilution = 1.0;
    int repetitions = 1;
};

struct SweepSpec {
    std::string axis = "chi"; // chi | mu
    double from = 0.1;
    double to = 10.0;
    int points = 50;
    bool log_scale = true;
};

struct WignerSpec {
    double half_range = 6.0;
    int points = 161;
};

struct ExperimentConfig {
    SystemParams params;
    ProtocolSchedule schedule;          // resolved to absolute times
    bool characteristic_units = false;  // whether tau/T were given in units of 2/Gamma_-
    double tau_raw = 0.0, t_raw = 0.0;  // schedule as written in the config
    TruthSpec truth;
    RunSpec run;
    ReconSpec recon;
    SweepSpec sweep;
    bool has_sweep = false;
    WignerSpec wigner;
    std::string config_hash; // over the physics-relevant sections
};

ExperimentConfig load_config(const std::string& path);

FockState build_truth_state(const TruthSpec& t, int dim = 0);

// dt resolution: explicit value, or the rate-based default rule
double resolve_dt(const ExperimentConfig& cfg);

} // namespace pamtomo
