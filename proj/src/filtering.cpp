#include "pamtomo/filtering.hpp"

#include "pamtomo/version.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace pamtomo {

namespace {

// geometric evaluation of sum_i h(i dt) dq[i] without per-step exp
double kernel_sum(const FilterKernel& k, const std::vector<double>& dq, double dt)
{
    const double ratio = std::exp(-k.decay_rate * dt / 2.0);
    double h = k.prefactor * k.preimage_factor;
    double acc = 0.0;
    for (const double q : dq) {
        acc += h * q;
        h *= ratio;
    }
    return acc;
}

} // namespace

std::pair<double, double> estimate_quadratures(const MeasurementRecord& r,
                                               const FilterKernel& kx, const FilterKernel& ky)
{
    const FilterKernel expect_y = filter_kernel_y(r.params, r.schedule);
    if (kx.params_hash != expect_y.params_hash || ky.params_hash != expect_y.params_hash)
        throw ContractError("filter kernel does not match the record's parameters");
    if (r.dq_x.size() != r.dq_y.size())
        throw ContractError("record with unequal quadrature lengths");
    return {kernel_sum(kx, r.dq_x, r.dt), kernel_sum(ky, r.dq_y, r.dt)};
}

GaussianPovmElement povm_element(const MeasurementRecord& r)
{
    const FilterKernel kx = filter_kernel_x(r.params, r.schedule);
    const FilterKernel ky = filter_kernel_y(r.params, r.schedule);
    const auto [x_est, y_est] = estimate_quadratures(r, kx, ky);
    const EstimateStats st = estimate_stats(r.params, r.schedule);

    GaussianPovmElement e;
    e.x_est = x_est;
    e.y_est = y_est;
    e.sigma2_x = st.sigma2_x;
    e.sigma2_y = st.sigma2_y;
    e.rho_c = st.rho_c;
    e.frame_angle = r.schedule.squeeze_phase / 2.0;
    e.trial_seed = r.seed;
    return e;
}

void write_povm_elements(const std::string& path, const std::vector<GaussianPovmElement>& elems,
                         const PovmFileMeta& meta)
{
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot open for writing: " + path);
    os << "# pamtomo povm elements v1\n";
    os << "# tool_version=" << (meta.tool_version.empty() ? PAMTOMO_VERSION : meta.tool_version)
       << "\n";
    os << "# config_hash=" << meta.config_hash << "\n";
    os << "# columns: x_est y_est sigma2_x sigma2_y rho_c frame_angle trial_seed\n";
    char buf[256];
    for (const GaussianPovmElement& e : elems) {
        std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g %.17g %.17g %.17g %llu\n", e.x_est,
                      e.y_est, e.sigma2_x, e.sigma2_y, e.rho_c, e.frame_angle,
                      static_cast<unsigned long long>(e.trial_seed));
        os << buf;
    }
    if (!os) throw ConfigError("write failed: " + path);
}

std::vector<GaussianPovmElement> read_povm_elements(const std::string& path, PovmFileMeta* meta)
{
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open: " + path);
    std::vector<GaussianPovmElement> out;
    std::string line;
    bool first = true;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (first && line.find("pamtomo povm elements") == std::string::npos)
                throw ConfigError("not a pamtomo povm file: " + path);
            first = false;
            if (meta) {
                const auto grab = [&](const char* key) -> std::string {
                    const auto pos = line.find(key);
                    if (pos == std::string::npos) return {};
                    return line.substr(pos + std::strlen(key));
                };
                if (auto v = grab("tool_version="); !v.empty()) meta->tool_version = v;
                if (auto v = grab("config_hash="); !v.empty()) meta->config_hash = v;
            }
            continue;
        }
        first = false;
        GaussianPovmElement e;
        unsigned long long seed = 0;
        std::istringstream ss(line);
        if (!(ss >> e.x_est >> e.y_est >> e.sigma2_x >> e.sigma2_y >> e.rho_c >> e.frame_angle >>
              seed))
            throw ConfigError("malformed povm element line: " + line);
        e.trial_seed = seed;
        out.push_back(e);
    }
    return out;
}

} // namespace pamtomo
