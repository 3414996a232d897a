#pragma once

#include "pamtomo/povm.hpp"
#include "pamtomo/states.hpp"

#include <vector>

namespace pamtomo {

struct ReconstructionConfig {
    int dim = 0;            // 0: caller resolves via reconstruction_dim
    double tol = 1e-6;      // trace-distance stopping threshold
    int max_iter = 2000;
    double dilution = 1.0;  // mixing weight, halved automatically on likelihood decrease
};

struct ReconstructionDiagnostics {
    std::vector<double> log_likelihood;
    std::vector<double> trace_distance;
    int iterations = 0;
    bool converged = false;
    int underflow_events = 0;
    double final_dilution = 1.0;
};

// Iterative maximum-likelihood fixed point
//   rho <- N[(1-d) rho + d N[R rho R]],   R = (1/M) sum_i W_i / Tr[W_i rho],
// starting from the maximally mixed state.
FockOperator reconstruct(const std::vector<FockOperator>& povm_ops,
                         const ReconstructionConfig& cfg,
                         ReconstructionDiagnostics* diag = nullptr);

// sum_i log Tr[W_i rho], rho-independent normalization constants omitted.
double log_likelihood(const FockOperator& rho, const std::vector<FockOperator>& povm_ops);

double trace_distance(const FockOperator& a, const FockOperator& b);

// Builds lab-frame operators from trial-frame elements: each element's
// operator is rotated by its frame angle before the iteration.
std::vector<FockOperator> operators_from_elements(const std::vector<GaussianPovmElement>& elems,
                                                  int dim);

// Truncation chosen from the data: the squeeze-cap rule plus the estimate
// support; floor_dim accommodates the caller's truth-state hint.
int reconstruction_dim(const std::vector<GaussianPovmElement>& elems, int floor_dim = 16);

} // namespace pamtomo
