#include "ragcn/occlusion.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

#include "ragcn/errors.hpp"

namespace ragcn {

OcclusionSpec OcclusionSpec::none() { return OcclusionSpec{}; }

OcclusionSpec OcclusionSpec::spatial(int part, std::uint64_t seed) {
    OcclusionSpec s;
    s.kind = Kind::spatial;
    s.part = part;
    s.seed = seed;
    return s;
}

OcclusionSpec OcclusionSpec::temporal(int block_length, std::uint64_t seed) {
    OcclusionSpec s;
    s.kind = Kind::temporal;
    s.block_length = block_length;
    s.seed = seed;
    return s;
}

std::string OcclusionSpec::describe(const SkeletonGraph& graph) const {
    switch (kind) {
        case Kind::none: return "none";
        case Kind::spatial: {
            std::string name = "part" + std::to_string(part);
            if (part >= 1 && part <= static_cast<int>(graph.parts.size()))
                name += "(" + graph.parts[static_cast<std::size_t>(part - 1)].first + ")";
            return name;
        }
        case Kind::temporal: return "frames" + std::to_string(block_length);
    }
    return "?";
}

SkeletonSequence occlude_joints(const SkeletonSequence& sample, std::span<const int> joints) {
    sample.check();
    const int v = sample.joints();
    for (int j : joints)
        if (j < 0 || j >= v)
            throw ConfigError("occlude_joints: joint " + std::to_string(j) + " out of range [0," +
                              std::to_string(v) + ")");
    SkeletonSequence out = sample;
    out.data = sample.data.detach();  // private copy; Tensor storage is shared
    auto& values = out.data.mutable_values();
    const int c = sample.channels(), t = sample.frames(), m = sample.bodies();
    for (int ch = 0; ch < c; ++ch)
        for (int ti = 0; ti < t; ++ti)
            for (int j : joints) {
                const std::size_t off = (((static_cast<std::size_t>(ch) * t + ti) * v) + j) * m;
                for (int b = 0; b < m; ++b) values[off + static_cast<std::size_t>(b)] = 0.0;
            }
    return out;
}

SkeletonSequence occlude_spatial(const SkeletonSequence& sample, int part, const SkeletonGraph& graph) {
    if (part < 1 || part > 5)
        throw ConfigError("occlude_spatial: part must be in 1..5, got " + std::to_string(part));
    const auto& joints = graph.part_joints(part);  // throws for undefined parts
    return occlude_joints(sample, joints);
}

SkeletonSequence occlude_temporal(const SkeletonSequence& sample, int block_length, Rng& rng,
                                  TemporalWindow* window_out) {
    sample.check();
    if (block_length < 0) throw ConfigError("occlude_temporal: negative block length");
    if (block_length > 100)
        throw ConfigError("occlude_temporal: block length " + std::to_string(block_length) +
                          " exceeds the 100-frame occlusion window");
    if (window_out) *window_out = TemporalWindow{0, 0};
    if (block_length == 0) return sample;
    // the block falls inside the first 100 frames, capped by the frames the
    // sample actually has
    const int limit = std::min({100, sample.valid_frames > 0 ? sample.valid_frames : sample.frames(),
                                sample.frames()});
    if (block_length > limit)
        throw ConfigError("occlude_temporal: block length " + std::to_string(block_length) +
                          " exceeds the " + std::to_string(limit) + " usable frames of sample '" +
                          sample.sample_id + "'");
    const int start = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(limit - block_length) + 1));
    if (window_out) *window_out = TemporalWindow{start, block_length};

    SkeletonSequence out = sample;
    out.data = sample.data.detach();
    auto& values = out.data.mutable_values();
    const int c = sample.channels(), t = sample.frames(), v = sample.joints(), m = sample.bodies();
    const std::size_t frame = static_cast<std::size_t>(v) * m;
    for (int ch = 0; ch < c; ++ch)
        for (int ti = start; ti < start + block_length; ++ti) {
            double* row = &values[(static_cast<std::size_t>(ch) * t + ti) * frame];
            std::fill(row, row + frame, 0.0);
        }
    return out;
}

Dataset occlude_dataset(const Dataset& dataset, const OcclusionSpec& spec, const SkeletonGraph& graph,
                        std::vector<TemporalWindow>* windows_out) {
    dataset.validate();
    if (windows_out) windows_out->clear();
    Dataset out;
    out.header = dataset.header;
    const Rng root(spec.seed);
    for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
        const auto& sample = dataset.samples[i];
        TemporalWindow window{0, 0};
        switch (spec.kind) {
            case OcclusionSpec::Kind::none:
                out.samples.push_back(sample);
                break;
            case OcclusionSpec::Kind::spatial:
                out.samples.push_back(occlude_spatial(sample, spec.part, graph));
                break;
            case OcclusionSpec::Kind::temporal: {
                Rng rng = root.derive(i);
                out.samples.push_back(occlude_temporal(sample, spec.block_length, rng, &window));
                break;
            }
        }
        if (windows_out) windows_out->push_back(window);
    }
    return out;
}

std::string OcclusionResultTable::to_text(char delimiter) const {
    std::ostringstream os;
    os << "model";
    for (const auto& s : spec_names) os << delimiter << s;
    os << '\n';
    for (std::size_t m = 0; m < model_names.size(); ++m) {
        os << model_names[m];
        for (double a : accuracy[m]) os << delimiter << std::fixed << std::setprecision(4) << a;
        os << '\n';
    }
    if (!difference.empty()) {
        os << "difference";
        for (double d : difference) os << delimiter << std::fixed << std::setprecision(4) << d;
        os << '\n';
    }
    return os.str();
}

OcclusionResultTable run_occlusion_suite(std::span<RaGcnModel*> models,
                                         std::span<const std::string> model_names, const Dataset& dataset,
                                         const SkeletonGraph& graph, std::span<const OcclusionSpec> specs) {
    if (models.empty()) throw UsageError("run_occlusion_suite: no models given");
    if (models.size() != model_names.size())
        throw UsageError("run_occlusion_suite: model/name count mismatch");
    OcclusionResultTable table;
    for (const auto& spec : specs) table.spec_names.push_back(spec.describe(graph));
    table.model_names.assign(model_names.begin(), model_names.end());
    table.accuracy.resize(models.size());
    for (const auto& spec : specs) {
        const Dataset occluded = occlude_dataset(dataset, spec, graph);
        for (std::size_t m = 0; m < models.size(); ++m)
            table.accuracy[m].push_back(evaluate(*models[m], occluded).accuracy);
    }
    if (models.size() >= 2) {
        for (std::size_t s = 0; s < specs.size(); ++s)
            table.difference.push_back(table.accuracy.back()[s] - table.accuracy.front()[s]);
    }
    return table;
}

}  // namespace ragcn
