#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ragcn/model.hpp"

namespace ragcn {

// Central-finite-difference verification of tape gradients. Masks are
// captured once at the nominal parameters and held fixed while probing, the
// same constant-mask treatment the training loss uses.
struct GradCheckConfig {
    int num_params = 20;
    std::uint64_t seed = 1;
    double step = 1e-5;
    double tolerance = 1e-3;
    int streams = 2;
    int batch = 3;
};

struct GradCheckEntry {
    std::string name;
    std::size_t index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    double rel_error = 0.0;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> entries;
    double max_rel_error = 0.0;
    bool passed = false;
};

double relative_error(double a, double b);

// Checks d(loss)/d(theta) for `num_params` parameters sampled round-robin
// across parameter kinds (spatial weights, edge importance, temporal
// kernels, norm scales/shifts, heads).
GradCheckReport gradcheck_model(RaGcnModel& model, const Tensor& x_prime, std::span<const int> labels,
                                const GradCheckConfig& config);

// The stock micro instance: V=5 chain graph, T=8, M=1, 4 layers, 2 classes.
GradCheckReport gradcheck_micro_model(const GradCheckConfig& config);

// The micro model/batch used by gradcheck_micro_model, exposed for tests.
RaGcnModel make_micro_model(int streams, std::uint64_t seed, int num_classes = 2, int joints = 5,
                            int layer_count = 4);
Tensor make_micro_batch(const RaGcnModel& model, int batch, int frames, std::uint64_t seed,
                        std::vector<int>* labels_out);

}  // namespace ragcn
