#pragma once

#include "pamtomo/analytic.hpp"
#include "pamtomo/povm.hpp"
#include "pamtomo/sim.hpp"

#include <string>
#include <utility>
#include <vector>

namespace pamtomo {

// Left-point Ito sums of the filter kernels against the record increments.
// Throws ContractError when a kernel was built for different parameters than
// the record carries.
std::pair<double, double> estimate_quadratures(const MeasurementRecord& r,
                                               const FilterKernel& kx, const FilterKernel& ky);

// Filters the record and packages the estimates with the analytic variances
// for the record's protocol, in the trial frame (frame_angle = theta_k / 2).
GaussianPovmElement povm_element(const MeasurementRecord& r);

struct PovmFileMeta {
    std::string config_hash;
    std::string tool_version;
};

void write_povm_elements(const std::string& path, const std::vector<GaussianPovmElement>& elems,
                         const PovmFileMeta& meta);
std::vector<GaussianPovmElement> read_povm_elements(const std::string& path,
                                                    PovmFileMeta* meta = nullptr);

} // namespace pamtomo
