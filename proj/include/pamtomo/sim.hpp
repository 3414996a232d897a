#pragma once

#include "pamtomo/kernels.hpp"
#include "pamtomo/model.hpp"
#include "pamtomo/states.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace pamtomo {

struct GrowthPolicy {
    int initial_dim = 0; // 0: derived from the initial state
    int growth_block = 16;
    int max_dim = 4096;
    double growth_threshold = 1e-10; // top-5-level mass that triggers growth
};

struct MeasurementRecord {
    double dt = 0.0;
    std::uint64_t seed = 0;
    std::vector<double> dq_x, dq_y;
    SystemParams params;
    ProtocolSchedule schedule;
    // integration diagnostics
    double max_tail_mass = 0.0;
    int final_dim = 0;
};

// One unraveled noise channel c = u*a + v*adag.
struct SdeChannel {
    kernels::cx u{0.0, 0.0};
    kernels::cx v{0.0, 0.0};
    int record = -1; // 0: dQ_X, 1: dQ_Y, -1: fictitious
};

// Drift and diffusion operator set of the stochastic Schroedinger equation,
// in banded-coefficient form.  Rebuilt when the basis grows (the coefficients
// themselves are truncation independent; the apply tables are not).
struct SdeGenerator {
    std::vector<SdeChannel> channels;
    kernels::QuadCoef drift; // -iH - (1/2) sum c†c - (1/2) sum c^2
    int dim = 0;
};

SdeGenerator build_generator(const SystemParams& p, Regime regime, int dim,
                             bool squeezing_on = true, bool measurement_on = true);

double default_dt(const SystemParams& p);

std::uint64_t trial_seed(std::uint64_t base_seed, int trial_index);

// Integrates the protocol for one trial: a squeeze-only phase of length tau
// (no record) followed by a measurement phase of length T.  The initial state
// is given in the lab frame; the integration runs in the trial frame set by
// schedule.squeeze_phase.  Throws TruncationError when the basis would exceed
// the policy cap.
MeasurementRecord simulate_trajectory(const FockState& initial_lab, const SystemParams& p,
                                      const ProtocolSchedule& s, double dt, std::uint64_t seed,
                                      const GrowthPolicy& policy = {});

// Deterministic parallel ensemble: trial k uses trial_seed(base_seed, k) and
// schedules[k % schedules.size()].  Results are emitted in trial order
// independent of execution order; per-trial failures are rethrown with the
// trial index.  n_workers = 0 reads PAMTOMO_WORKERS or the hardware count.
std::vector<MeasurementRecord> simulate_ensemble(const FockState& initial_lab,
                                                 const SystemParams& p,
                                                 const std::vector<ProtocolSchedule>& schedules,
                                                 double dt, int n_trials,
                                                 std::uint64_t base_seed,
                                                 const GrowthPolicy& policy = {},
                                                 int n_workers = 0);

// Integrates only the squeeze phase (no measurement) and returns the
// conditioned state; diagnostic hook for moment checks against the
// closed-form mean/variance evolution.
FockState evolve_squeeze_phase(const FockState& initial, const SystemParams& p, double tau,
                               double dt, std::uint64_t seed, const GrowthPolicy& policy = {});

// Versioned binary container for a set of records.
void write_records(const std::string& path, const std::vector<MeasurementRecord>& records,
                   const std::string& config_hash);
std::vector<MeasurementRecord> read_records(const std::string& path,
                                            std::string* config_hash = nullptr);

} // namespace pamtomo
