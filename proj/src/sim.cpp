#include "pamtomo/sim.hpp"

#include "pamtomo/version.hpp"

#include <json.hpp>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

namespace pamtomo {

using kernels::cx;
using json = nlohmann::json;

namespace {

void add_channel_twin(std::vector<SdeChannel>& out, cx u, cx v)
{
    // heterodyne unraveling of D[c]: homodyne channels c/sqrt(2), -i c/sqrt(2)
    const double inv = 1.0 / std::sqrt(2.0);
    out.push_back({u * inv, v * inv, -1});
    out.push_back({u * cx(0.0, -inv), v * cx(0.0, -inv), -1});
}

} // namespace

SdeGenerator build_generator(const SystemParams& p, Regime regime, int dim,
                             bool squeezing_on, bool measurement_on)
{
    if (dim < 2) throw ConfigError("build_generator: dim must be >= 2");
    SdeGenerator g;
    g.dim = dim;

    const double smon = std::sqrt(p.eta * p.mu / 2.0);
    const double sun = std::sqrt((1.0 - p.eta) * p.mu / 2.0);
    if (measurement_on && p.mu > 0.0) {
        if (regime == Regime::ZeroDetuned) {
            // monitored X and Y quadrature channels, strength sqrt(eta mu)
            g.channels.push_back({cx(smon, 0), cx(smon, 0), 0});
            g.channels.push_back({cx(0, -smon), cx(0, smon), 1});
            if (p.eta < 1.0) {
                g.channels.push_back({cx(sun, 0), cx(sun, 0), -1});
                g.channels.push_back({cx(0, -sun), cx(0, sun), -1});
            }
        } else {
            // monitored amplification channel a-dagger split into quadrature records
            g.channels.push_back({cx(0, 0), cx(smon, 0), 0});
            g.channels.push_back({cx(0, 0), cx(0, smon), 1});
            if (p.eta < 1.0) {
                g.channels.push_back({cx(0, 0), cx(sun, 0), -1});
                g.channels.push_back({cx(0, 0), cx(0, sun), -1});
            }
        }
    }
    // thermal bath, fictitiously monitored to keep the state pure
    if (p.gamma > 0.0)
        add_channel_twin(g.channels, cx(std::sqrt(p.gamma * (p.n_th + 1.0)), 0), cx(0, 0));
    if (p.gamma * p.n_th > 0.0)
        add_channel_twin(g.channels, cx(0, 0), cx(std::sqrt(p.gamma * p.n_th), 0));

    kernels::QuadCoef d;
    if (squeezing_on && p.chi != 0.0) {
        // -iH for H = (i chi / 4)(a^2 - adag^2), trial frame
        d.a_aa += p.chi / 4.0;
        d.a_cc -= p.chi / 4.0;
    }
    for (const SdeChannel& ch : g.channels) {
        const cx u = ch.u, v = ch.v;
        // -(1/2) c†c
        d.a_n -= 0.5 * (std::norm(u) + std::norm(v));
        d.a_1 -= 0.5 * std::norm(v);
        d.a_aa -= 0.5 * std::conj(v) * u;
        d.a_cc -= 0.5 * std::conj(u) * v;
        // -(1/2) c^2 (Milstein counter-term)
        d.a_aa -= 0.5 * u * u;
        d.a_cc -= 0.5 * v * v;
        d.a_n -= u * v;
        d.a_1 -= 0.5 * u * v;
    }
    g.drift = d;
    return g;
}

double default_dt(const SystemParams& p)
{
    double dt = 1e-3 / (p.gamma * (p.n_th + 1.0));
    if (p.mu > 0.0) dt = std::min(dt, 1e-3 / p.mu);
    if (p.chi > 0.0) dt = std::min(dt, 1e-3 / p.chi);
    return dt;
}

std::uint64_t trial_seed(std::uint64_t base_seed, int trial_index)
{
    // splitmix64 over the (base, index) pair
    std::uint64_t z = base_seed + 0x9e3779b97f4a7c15ull * (std::uint64_t(trial_index) + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

namespace {

struct SqrtTables {
    std::vector<double> wlo, whi, wup, wdn;

    void resize(int n)
    {
        wlo.resize(n);
        whi.resize(n);
        wup.resize(n);
        wdn.resize(n);
        for (int i = 0; i < n; ++i) {
            wlo[i] = std::sqrt(double(i + 1));
            whi[i] = std::sqrt(double(i));
            wup[i] = std::sqrt(double(i + 1)) * std::sqrt(double(i + 2));
            wdn[i] = i >= 2 ? std::sqrt(double(i)) * std::sqrt(double(i - 1)) : 0.0;
        }
    }
};

struct Integrator {
    std::vector<cx> psi, t1, t2, out;
    SqrtTables tab;
    std::mt19937_64 rng;
    std::normal_distribution<double> normal{0.0, 1.0};
    double log_norm = 0.0;
    double max_tail = 0.0;
    GrowthPolicy policy;
    double time_reached = 0.0;

    int dim() const { return static_cast<int>(psi.size()); }

    void set_dim(int n)
    {
        psi.resize(n, cx(0, 0));
        t1.resize(n);
        t2.resize(n);
        out.resize(n);
        tab.resize(n);
    }

    double tail5() const
    {
        double acc = 0.0;
        for (int i = std::max(0, dim() - 5); i < dim(); ++i) acc += std::norm(psi[i]);
        return acc;
    }

    void grow_if_needed()
    {
        double t = tail5();
        max_tail = std::max(max_tail, t);
        while (t > policy.growth_threshold) {
            const int next = dim() + policy.growth_block;
            if (next > policy.max_dim) {
                std::ostringstream os;
                os << "Fock basis cap exceeded: dim=" << dim() << " cap=" << policy.max_dim
                   << " tail=" << t << " at t=" << time_reached;
                throw TruncationError(os.str());
            }
            set_dim(next);
            t = tail5();
        }
    }

    void steps(const SdeGenerator& gen, double dt, long n_steps, std::vector<double>* dqx,
               std::vector<double>* dqy)
    {
        const double sq_dt = std::sqrt(dt);
        const auto nch = gen.channels.size();
        for (long step = 0; step < n_steps; ++step) {
            const std::size_t n = psi.size();
            const cx ea = kernels::expect_lower(psi.data(), tab.wlo.data(), n);
            cx big_u(0, 0), big_v(0, 0);
            for (std::size_t k = 0; k < nch; ++k) {
                const SdeChannel& ch = gen.channels[k];
                const double m =
                    2.0 * (ch.u * ea + ch.v * std::conj(ea)).real();
                const double dq = m * dt + sq_dt * normal(rng);
                if (ch.record == 0 && dqx) dqx->push_back(dq);
                else if (ch.record == 1 && dqy) dqy->push_back(dq);
                big_u += dq * ch.u;
                big_v += dq * ch.v;
            }
            kernels::ladder_apply(big_u, big_v, psi.data(), tab.wlo.data(), tab.whi.data(),
                                  t1.data(), n);
            kernels::ladder_apply(big_u, big_v, t1.data(), tab.wlo.data(), tab.whi.data(),
                                  t2.data(), n);
            kernels::drift_combine(gen.drift, dt, psi.data(), t1.data(), t2.data(),
                                   tab.wup.data(), tab.wdn.data(), out.data(), n);
            const double nn = kernels::nrm2sq(out.data(), n);
            if (!(nn > 0.0) || !std::isfinite(nn))
                throw NumericalError("state norm lost during integration (reduce dt)");
            kernels::scal(1.0 / std::sqrt(nn), out.data(), n);
            log_norm += 0.5 * std::log(nn);
            psi.swap(out);
            time_reached += dt;
            grow_if_needed();
        }
    }
};

} // namespace

MeasurementRecord simulate_trajectory(const FockState& initial_lab, const SystemParams& p,
                                      const ProtocolSchedule& s, double dt, std::uint64_t seed,
                                      const GrowthPolicy& policy)
{
    p.validate();
    s.validate();
    if (is_infinite(s.T)) throw ConfigError("simulation requires a finite measurement duration");
    if (!(dt > 0.0)) throw ConfigError("dt must be > 0");
    if (p.mu * dt > 0.05)
        throw ConfigError("dt too coarse: mu*dt must be << 1");

    Integrator it;
    it.policy = policy;
    it.rng.seed(seed);
    int dim0 = policy.initial_dim > 0 ? policy.initial_dim : initial_lab.dim();
    dim0 = std::max({dim0, initial_lab.dim(), 20});
    it.set_dim(dim0);
    // rotate into the trial frame set by the squeeze phase
    const double frame = s.squeeze_phase / 2.0;
    for (int n = 0; n < initial_lab.dim(); ++n)
        it.psi[n] = initial_lab.amp[n] * std::polar(1.0, -frame * n);
    const double nrm = kernels::nrm2sq(it.psi.data(), it.psi.size());
    kernels::scal(1.0 / std::sqrt(nrm), it.psi.data(), it.psi.size());
    it.grow_if_needed();

    MeasurementRecord rec;
    rec.dt = dt;
    rec.seed = seed;
    rec.params = p;
    rec.schedule = s;

    const long n_sq = std::lround(s.tau / dt);
    const long n_meas = std::lround(s.T / dt);
    rec.dq_x.reserve(n_meas);
    rec.dq_y.reserve(n_meas);

    if (n_sq > 0) {
        SdeGenerator g_sq = build_generator(p, p.regime, it.dim(), true, false);
        it.steps(g_sq, dt, n_sq, nullptr, nullptr);
    }
    SdeGenerator g_meas = build_generator(p, p.regime, it.dim(), s.maintain_squeezing, true);
    it.steps(g_meas, dt, n_meas, &rec.dq_x, &rec.dq_y);

    rec.max_tail_mass = it.max_tail;
    rec.final_dim = it.dim();
    return rec;
}

FockState evolve_squeeze_phase(const FockState& initial, const SystemParams& p, double tau,
                               double dt, std::uint64_t seed, const GrowthPolicy& policy)
{
    p.validate();
    if (!(dt > 0.0) || !(tau >= 0.0)) throw ConfigError("bad tau/dt");
    Integrator it;
    it.policy = policy;
    it.rng.seed(seed);
    const int dim0 = std::max({policy.initial_dim, initial.dim(), 20});
    it.set_dim(dim0);
    for (int n = 0; n < initial.dim(); ++n) it.psi[n] = initial.amp[n];
    it.grow_if_needed();
    const long n_sq = std::lround(tau / dt);
    if (n_sq > 0) {
        SdeGenerator g_sq = build_generator(p, p.regime, it.dim(), true, false);
        it.steps(g_sq, dt, n_sq, nullptr, nullptr);
    }
    FockState out;
    out.amp = Eigen::Map<const Eigen::VectorXcd>(it.psi.data(), it.dim());
    out.log_norm = it.log_norm;
    return out;
}

std::vector<MeasurementRecord> simulate_ensemble(const FockState& initial_lab,
                                                 const SystemParams& p,
                                                 const std::vector<ProtocolSchedule>& schedules,
                                                 double dt, int n_trials,
                                                 std::uint64_t base_seed,
                                                 const GrowthPolicy& policy, int n_workers)
{
    if (n_trials < 1) throw ConfigError("n_trials must be >= 1");
    if (schedules.empty()) throw ConfigError("schedule list must not be empty");

    if (n_workers <= 0) {
        if (const char* env = std::getenv("PAMTOMO_WORKERS")) n_workers = std::atoi(env);
        if (n_workers <= 0) n_workers = static_cast<int>(std::thread::hardware_concurrency());
        if (n_workers <= 0) n_workers = 1;
    }
    n_workers = std::min(n_workers, n_trials);

    std::vector<MeasurementRecord> out(n_trials);
    std::atomic<int> next{0};
    std::atomic<int> failed_trial{-1};
    std::exception_ptr error;
    std::mutex error_mtx;

    auto worker = [&]() {
        for (;;) {
            const int k = next.fetch_add(1);
            if (k >= n_trials || failed_trial.load() >= 0) return;
            try {
                out[k] = simulate_trajectory(initial_lab, p, schedules[k % schedules.size()],
                                             dt, trial_seed(base_seed, k), policy);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mtx);
                int expect = -1;
                if (failed_trial.compare_exchange_strong(expect, k)) error = std::current_exception();
                return;
            }
        }
    };

    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_workers);
        for (int i = 0; i < n_workers; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    if (failed_trial.load() >= 0) {
        try {
            std::rethrow_exception(error);
        } catch (const TruncationError& e) {
            throw TruncationError("trial " + std::to_string(failed_trial.load()) + ": " + e.what());
        } catch (const std::exception& e) {
            throw NumericalError("trial " + std::to_string(failed_trial.load()) + ": " + e.what());
        }
    }
    return out;
}

namespace {

constexpr char record_magic[8] = {'P', 'A', 'M', 'T', 'R', 'E', 'C', '1'};

json params_to_json(const SystemParams& p)
{
    json j{{"gamma", p.gamma}, {"n_th", p.n_th}, {"mu", p.mu},      {"eta", p.eta},
           {"chi", p.chi},     {"theta", p.theta}, {"regime", regime_name(p.regime)}};
    return j;
}

SystemParams params_from_json(const json& j)
{
    SystemParams p;
    p.gamma = j.at("gamma");
    p.n_th = j.at("n_th");
    p.mu = j.at("mu");
    p.eta = j.at("eta");
    p.chi = j.at("chi");
    p.theta = j.at("theta");
    p.regime = regime_from_name(j.at("regime"));
    return p;
}

template <typename T> void put(std::ostream& os, const T& v)
{
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T> T get(std::istream& is)
{
    T v;
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
}

} // namespace

void write_records(const std::string& path, const std::vector<MeasurementRecord>& records,
                   const std::string& config_hash)
{
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ConfigError("cannot open for writing: " + path);
    os.write(record_magic, sizeof(record_magic));
    json header{{"version", 1},
                {"tool_version", PAMTOMO_VERSION},
                {"config_hash", config_hash},
                {"n_records", records.size()}};
    if (!records.empty()) header["params"] = params_to_json(records.front().params);
    const std::string hs = header.dump();
    put<std::uint32_t>(os, static_cast<std::uint32_t>(hs.size()));
    os.write(hs.data(), hs.size());
    for (const MeasurementRecord& r : records) {
        put<std::uint64_t>(os, r.seed);
        put<double>(os, r.dt);
        put<double>(os, r.schedule.tau);
        put<double>(os, r.schedule.T);
        put<std::uint8_t>(os, r.schedule.maintain_squeezing ? 1 : 0);
        put<double>(os, r.schedule.squeeze_phase);
        put<double>(os, r.max_tail_mass);
        put<std::int32_t>(os, r.final_dim);
        put<std::uint64_t>(os, r.dq_x.size());
        os.write(reinterpret_cast<const char*>(r.dq_x.data()),
                 static_cast<std::streamsize>(r.dq_x.size() * sizeof(double)));
        os.write(reinterpret_cast<const char*>(r.dq_y.data()),
                 static_cast<std::streamsize>(r.dq_y.size() * sizeof(double)));
    }
    if (!os) throw ConfigError("write failed: " + path);
}

std::vector<MeasurementRecord> read_records(const std::string& path, std::string* config_hash)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("cannot open: " + path);
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, record_magic, 8) != 0)
        throw ConfigError("not a pamtomo record file: " + path);
    const auto hlen = get<std::uint32_t>(is);
    std::string hs(hlen, '\0');
    is.read(hs.data(), hlen);
    const json header = json::parse(hs);
    if (header.at("version") != 1) throw ConfigError("unsupported record file version");
    if (config_hash) *config_hash = header.value("config_hash", "");
    const auto n_records = header.at("n_records").get<std::size_t>();
    SystemParams p;
    if (header.contains("params")) p = params_from_json(header["params"]);

    std::vector<MeasurementRecord> out(n_records);
    for (MeasurementRecord& r : out) {
        r.params = p;
        r.seed = get<std::uint64_t>(is);
        r.dt = get<double>(is);
        r.schedule.tau = get<double>(is);
        r.schedule.T = get<double>(is);
        r.schedule.maintain_squeezing = get<std::uint8_t>(is) != 0;
        r.schedule.squeeze_phase = get<double>(is);
        r.max_tail_mass = get<double>(is);
        r.final_dim = get<std::int32_t>(is);
        const auto n = get<std::uint64_t>(is);
        r.dq_x.resize(n);
        r.dq_y.resize(n);
        is.read(reinterpret_cast<char*>(r.dq_x.data()),
                static_cast<std::streamsize>(n * sizeof(double)));
        is.read(reinterpret_cast<char*>(r.dq_y.data()),
                static_cast<std::streamsize>(n * sizeof(double)));
        if (!is) throw ConfigError("truncated record file: " + path);
    }
    return out;
}

} // namespace pamtomo
