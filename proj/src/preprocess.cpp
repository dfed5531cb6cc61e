#include "ragcn/preprocess.hpp"

#include <array>

#include "ragcn/errors.hpp"

namespace ragcn {

void SkeletonSequence::check() const {
    if (!data.defined() || data.ndim() != 4)
        throw DimensionError("skeleton sample must be [C,T,V,M], got " +
                             (data.defined() ? shape_str(data.shape()) : std::string("undefined")));
    if (data.dim(0) != 3)
        throw DimensionError("skeleton sample must have 3 coordinate channels, got " +
                             std::to_string(data.dim(0)));
    if (valid_frames < 0 || valid_frames > data.dim(1))
        throw InputError("sample '" + sample_id + "': valid_frames " + std::to_string(valid_frames) +
                         " outside [0," + std::to_string(data.dim(1)) + "]");
}

Tensor motion_features(const SkeletonSequence& sample) {
    sample.check();
    const int c = sample.channels(), t = sample.frames(), v = sample.joints(), m = sample.bodies();
    const auto& x = sample.data.values();
    std::vector<double> out(x.size(), 0.0);
    const std::size_t frame = static_cast<std::size_t>(v) * m;
    for (int ch = 0; ch < c; ++ch) {
        const std::size_t ch_off = static_cast<std::size_t>(ch) * t * frame;
        for (int ti = 0; ti + 1 < t; ++ti) {
            const double* cur = &x[ch_off + static_cast<std::size_t>(ti) * frame];
            const double* next = cur + frame;
            double* dst = &out[ch_off + static_cast<std::size_t>(ti) * frame];
            for (std::size_t j = 0; j < frame; ++j) dst[j] = next[j] - cur[j];
        }
    }
    return Tensor::from_data(sample.data.shape(), std::move(out));
}

Tensor relative_coordinates(const SkeletonSequence& sample, int center_joint) {
    sample.check();
    const int c = sample.channels(), t = sample.frames(), v = sample.joints(), m = sample.bodies();
    if (center_joint < 0 || center_joint >= v)
        throw ConfigError("center joint " + std::to_string(center_joint) + " out of range [0," +
                          std::to_string(v) + ")");
    const auto& x = sample.data.values();
    std::vector<double> out(x.size());
    for (int ch = 0; ch < c; ++ch)
        for (int ti = 0; ti < t; ++ti) {
            const std::size_t base = (static_cast<std::size_t>(ch) * t + ti) * v * m;
            for (int b = 0; b < m; ++b) {
                const double center = x[base + static_cast<std::size_t>(center_joint) * m + b];
                for (int j = 0; j < v; ++j) {
                    const std::size_t idx = base + static_cast<std::size_t>(j) * m + b;
                    out[idx] = x[idx] - center;
                }
            }
        }
    return Tensor::from_data(sample.data.shape(), std::move(out));
}

Tensor assemble(const SkeletonSequence& sample, int center_joint) {
    const std::array<Tensor, 3> channels{sample.data, motion_features(sample),
                                         relative_coordinates(sample, center_joint)};
    return ops::concat(channels, /*axis=*/0);
}

Tensor assemble_batch(std::span<const SkeletonSequence> samples, int center_joint) {
    if (samples.empty()) throw InputError("assemble_batch: empty batch");
    const auto& ref = samples[0].data.shape();
    std::vector<double> out;
    Shape batch_shape{static_cast<int>(samples.size()), 3 * ref[0], ref[1], ref[2], ref[3]};
    out.reserve(static_cast<std::size_t>(shape_numel(batch_shape)));
    for (const auto& s : samples) {
        if (s.data.shape() != ref)
            throw DimensionError("assemble_batch: sample '" + s.sample_id + "' has shape " +
                                 shape_str(s.data.shape()) + ", expected " + shape_str(ref));
        const Tensor a = assemble(s, center_joint);
        const auto& v = a.values();
        out.insert(out.end(), v.begin(), v.end());
    }
    return Tensor::from_data(std::move(batch_shape), std::move(out));
}

}  // namespace ragcn
