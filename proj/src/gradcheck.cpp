#include "ragcn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "ragcn/errors.hpp"
#include "ragcn/preprocess.hpp"

namespace ragcn {

double relative_error(double a, double b) {
    const double denom = std::max({std::abs(a), std::abs(b), 1e-6});
    return std::abs(a - b) / denom;
}

RaGcnModel make_micro_model(int streams, std::uint64_t seed, int num_classes, int joints,
                            int layer_count) {
    StgcnConfig config;
    config.num_joints = joints;
    config.num_classes = num_classes;
    config.max_distance = 1;
    config.temporal_window = 3;
    config.dropout_rate = 0.0;
    config.layers.clear();
    int ch = config.input_channels;
    for (int l = 0; l < layer_count; ++l) {
        config.layers.push_back({ch, 8, 1});
        ch = 8;
    }
    SkeletonGraph graph = SkeletonGraph::chain(joints);
    Rng rng(seed);
    return RaGcnModel(std::move(config), std::move(graph), streams, rng);
}

Tensor make_micro_batch(const RaGcnModel& model, int batch, int frames, std::uint64_t seed,
                        std::vector<int>* labels_out) {
    Rng rng = Rng(seed).derive("batch");
    std::vector<SkeletonSequence> samples;
    for (int i = 0; i < batch; ++i) {
        const int v = model.config().num_joints;
        std::vector<double> values(static_cast<std::size_t>(3) * frames * v, 0.0);
        // keep values away from zero so ReLU kinks do not sit on the probe
        for (auto& x : values) x = rng.normal() + (rng.bernoulli(0.5) ? 0.4 : -0.4);
        SkeletonSequence s;
        s.data = Tensor::from_data({3, frames, v, 1}, std::move(values));
        s.valid_frames = frames;
        s.label = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(model.config().num_classes)));
        s.sample_id = "grad_" + std::to_string(i);
        samples.push_back(std::move(s));
        if (labels_out) labels_out->push_back(samples.back().label);
    }
    return assemble_batch(samples, model.graph().center_joint);
}

namespace {

// parameter kind for round-robin sampling, from the visit name
std::string kind_of(const std::string& name) {
    if (name.find("spatial.w") != std::string::npos) return "spatial_weight";
    if (name.find("edge_importance") != std::string::npos) return "edge_importance";
    if (name.find("temporal.weight") != std::string::npos) return "temporal_kernel";
    if (name.find("gamma") != std::string::npos || name.find("beta") != std::string::npos) return "norm";
    if (name.find("fusion") != std::string::npos) return "fusion_head";
    if (name.find("head") != std::string::npos) return "head";
    return "bias";
}

}  // namespace

GradCheckReport gradcheck_model(RaGcnModel& model, const Tensor& x_prime, std::span<const int> labels,
                                const GradCheckConfig& config) {
    Rng rng = Rng(config.seed).derive("pick");
    Rng fwd_rng(0);  // dropout is inactive; forward must be deterministic

    // capture the masks at the nominal point; they are constants of the loss
    Tape::active().clear();
    ForwardResult nominal = model.forward(x_prime, labels, /*training=*/true, fwd_rng);
    std::vector<StreamMask> masks;
    for (const auto& trace : nominal.streams) masks.push_back(trace.mask);

    auto loss_value = [&]() {
        NoGradGuard guard;
        ForwardResult r = model.forward_masked(x_prime, masks, /*training=*/true, fwd_rng);
        return ops::cross_entropy(r.logits, labels).item();
    };

    // analytic gradients from one backward pass under the same fixed masks
    Tape::active().clear();
    std::vector<std::pair<std::string, Tensor>> params;
    model.visit_parameters([&](const std::string& name, Tensor& t) {
        t.zero_grad();
        params.emplace_back(name, t);
    });
    ForwardResult tracked = model.forward_masked(x_prime, masks, /*training=*/true, fwd_rng);
    backward(ops::cross_entropy(tracked.logits, labels));
    Tape::active().clear();

    std::map<std::string, std::vector<std::size_t>> by_kind;
    for (std::size_t i = 0; i < params.size(); ++i) by_kind[kind_of(params[i].first)].push_back(i);

    GradCheckReport report;
    std::vector<std::string> kinds;
    for (const auto& [kind, indices] : by_kind) kinds.push_back(kind);
    for (int picked = 0; picked < config.num_params; ++picked) {
        const auto& kind = kinds[static_cast<std::size_t>(picked) % kinds.size()];
        const auto& candidates = by_kind[kind];
        const auto param_idx = candidates[rng.uniform_int(candidates.size())];
        auto& [name, tensor] = params[param_idx];
        const auto element = static_cast<std::size_t>(rng.uniform_int(tensor.values().size()));

        const double analytic = tensor.grad()[element];
        const double saved = tensor.values()[element];
        tensor.mutable_values()[element] = saved + config.step;
        const double plus = loss_value();
        tensor.mutable_values()[element] = saved - config.step;
        const double minus = loss_value();
        tensor.mutable_values()[element] = saved;
        const double numeric = (plus - minus) / (2.0 * config.step);

        GradCheckEntry entry;
        entry.name = name;
        entry.index = element;
        entry.analytic = analytic;
        entry.numeric = numeric;
        entry.rel_error = relative_error(analytic, numeric);
        report.max_rel_error = std::max(report.max_rel_error, entry.rel_error);
        report.entries.push_back(std::move(entry));
    }
    report.passed = report.max_rel_error < config.tolerance;
    return report;
}

GradCheckReport gradcheck_micro_model(const GradCheckConfig& config) {
    RaGcnModel model = make_micro_model(config.streams, config.seed);
    std::vector<int> labels;
    const Tensor x = make_micro_batch(model, config.batch, /*frames=*/8, config.seed, &labels);
    return gradcheck_model(model, x, labels, config);
}

}  // namespace ragcn
