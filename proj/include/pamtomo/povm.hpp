#pragma once

#include <cstdint>

namespace pamtomo {

// Parameters of one trial's effective measurement operator: a bivariate
// Gaussian in the estimate plane, expressed in the trial's squeeze frame
// (frame x-axis at `frame_angle` in the lab).
struct GaussianPovmElement {
    double x_est = 0.0;
    double y_est = 0.0;
    double sigma2_x = 1.0;
    double sigma2_y = 1.0;
    double rho_c = 0.0;
    double frame_angle = 0.0;
    std::uint64_t trial_seed = 0;
};

} // namespace pamtomo
