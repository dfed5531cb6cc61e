#include "ragcn/activation.hpp"

#include <algorithm>
#include <cmath>

#include "ragcn/errors.hpp"

namespace ragcn {

StreamMask StreamMask::all_ones(int rows, int frames, int joints) {
    StreamMask m;
    m.stream_index = 1;
    m.values = Tensor::ones({rows, frames, joints});
    return m;
}

ActivationMap compute_cam(const Tensor& feature_map, const Tensor& class_weights,
                          std::span<const int> labels, int stream_index) {
    if (!feature_map.defined() || feature_map.ndim() != 4)
        throw DimensionError("compute_cam expects [R,C,T,V] feature map, got " +
                             (feature_map.defined() ? shape_str(feature_map.shape()) : std::string("undefined")));
    if (!class_weights.defined() || class_weights.ndim() != 2)
        throw DimensionError("compute_cam expects [K,C] class weights");
    const int r = feature_map.dim(0), c = feature_map.dim(1), t = feature_map.dim(2), v = feature_map.dim(3);
    const int k = class_weights.dim(0);
    if (class_weights.dim(1) != c)
        throw DimensionError("compute_cam: weights " + shape_str(class_weights.shape()) +
                             " do not cover " + std::to_string(c) + " channels");
    if (static_cast<int>(labels.size()) != r)
        throw InputError("compute_cam: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(r) + " rows");
    for (int label : labels)
        if (label < 0 || label >= k)
            throw InputError("compute_cam: label " + std::to_string(label) + " out of range [0," +
                             std::to_string(k) + ")");

    const auto& f = feature_map.values();
    const auto& w = class_weights.values();
    const std::size_t plane = static_cast<std::size_t>(t) * v;
    std::vector<double> out(static_cast<std::size_t>(r) * plane, 0.0);
    for (int row = 0; row < r; ++row) {
        const double* wc = &w[static_cast<std::size_t>(labels[static_cast<std::size_t>(row)]) * c];
        double* dst = &out[static_cast<std::size_t>(row) * plane];
        for (int ch = 0; ch < c; ++ch) {
            const double wk = wc[ch];
            if (wk == 0.0) continue;
            const double* src = &f[(static_cast<std::size_t>(row) * c + ch) * plane];
            for (std::size_t j = 0; j < plane; ++j) dst[j] += wk * src[j];
        }
    }
    ActivationMap map;
    map.values = Tensor::from_data({r, t, v}, std::move(out));
    map.stream_index = stream_index;
    map.class_used.assign(labels.begin(), labels.end());
    return map;
}

Tensor upsample_map(const ActivationMap& map, int target_frames) {
    if (!map.values.defined() || map.values.ndim() != 3)
        throw DimensionError("upsample_map expects [R,T',V] activation map");
    const int r = map.values.dim(0), t = map.values.dim(1), v = map.values.dim(2);
    if (target_frames < t || target_frames % t != 0)
        throw ConfigError("upsample_map: cannot repeat " + std::to_string(t) + " frames into " +
                          std::to_string(target_frames));
    const int factor = target_frames / t;
    const auto& src = map.values.values();
    std::vector<double> out(static_cast<std::size_t>(r) * target_frames * v);
    for (int row = 0; row < r; ++row)
        for (int ti = 0; ti < target_frames; ++ti) {
            const double* s = &src[(static_cast<std::size_t>(row) * t + ti / factor) * v];
            double* d = &out[(static_cast<std::size_t>(row) * target_frames + ti) * v];
            std::copy(s, s + v, d);
        }
    return Tensor::from_data({r, target_frames, v}, std::move(out));
}

StreamMask next_mask(std::span<const StreamMask> previous, const ActivationMap& cam) {
    if (previous.empty())
        throw UsageError("next_mask: at least the first (all-ones) mask must precede a new stream");
    if (!cam.values.defined() || cam.values.ndim() != 3)
        throw DimensionError("next_mask expects a [R,T',V] activation map");
    const int r = cam.values.dim(0), tp = cam.values.dim(1), v = cam.values.dim(2);
    const auto& mask_shape = previous[0].values.shape();
    for (const auto& p : previous)
        if (p.values.shape() != mask_shape)
            throw DimensionError("next_mask: preceding masks disagree on shape");
    if (mask_shape[0] != r || mask_shape[2] != v)
        throw DimensionError("next_mask: activation map " + shape_str(cam.values.shape()) +
                             " incompatible with masks " + shape_str(mask_shape));
    const int t = mask_shape[1];

    // 1 - softmax over the map's own (t,i) cells, one distribution per row
    const std::size_t plane = static_cast<std::size_t>(tp) * v;
    const auto& values = cam.values.values();
    std::vector<double> suppress(values.size());
    for (int row = 0; row < r; ++row) {
        const std::size_t off = static_cast<std::size_t>(row) * plane;
        double mx = values[off];
        for (std::size_t j = 1; j < plane; ++j) mx = std::max(mx, values[off + j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < plane; ++j) sum += std::exp(values[off + j] - mx);
        const double inv = 1.0 / sum;
        for (std::size_t j = 0; j < plane; ++j) {
            double s = 1.0 - std::exp(values[off + j] - mx) * inv;
            if (s < 0.0) s = 0.0;  // guard against rounding just below zero
            suppress[off + j] = s;
        }
    }

    // repeat up to the masks' temporal resolution, then accumulate
    ActivationMap carrier;
    carrier.values = Tensor::from_data({r, tp, v}, std::move(suppress));
    carrier.stream_index = cam.stream_index;
    const Tensor up = upsample_map(carrier, t);

    std::vector<double> out = up.values();
    for (const auto& p : previous) {
        const auto& pv = p.values.values();
        for (std::size_t i = 0; i < out.size(); ++i) out[i] *= pv[i];
    }
    StreamMask mask;
    mask.values = Tensor::from_data({r, t, v}, std::move(out));
    mask.stream_index = previous.back().stream_index + 1;
    return mask;
}

Tensor mask_input(const Tensor& x_prime, const StreamMask& mask) {
    if (!x_prime.defined() || x_prime.ndim() != 5)
        throw DimensionError("mask_input expects [N,C,T,V,M] input, got " +
                             (x_prime.defined() ? shape_str(x_prime.shape()) : std::string("undefined")));
    if (!mask.values.defined() || mask.values.ndim() != 3)
        throw DimensionError("mask_input expects a [N*M,T,V] mask");
    const int n = x_prime.dim(0), c = x_prime.dim(1), t = x_prime.dim(2), v = x_prime.dim(3),
              m = x_prime.dim(4);
    if (mask.values.dim(0) != n * m || mask.values.dim(1) != t || mask.values.dim(2) != v)
        throw DimensionError("mask_input: mask " + shape_str(mask.values.shape()) +
                             " incompatible with input " + shape_str(x_prime.shape()));
    const auto& x = x_prime.values();
    const auto& g = mask.values.values();
    std::vector<double> out(x.size());
    std::size_t idx = 0;
    for (int in = 0; in < n; ++in)
        for (int ch = 0; ch < c; ++ch)
            for (int ti = 0; ti < t; ++ti)
                for (int j = 0; j < v; ++j) {
                    const std::size_t gbase = (static_cast<std::size_t>(in) * m) * t * v +
                                              static_cast<std::size_t>(ti) * v + j;
                    for (int b = 0; b < m; ++b, ++idx)
                        out[idx] = x[idx] * g[gbase + static_cast<std::size_t>(b) * t * v];
                }
    return Tensor::from_data(x_prime.shape(), std::move(out));
}

std::vector<std::vector<std::pair<int, int>>> activated_joints(const ActivationMap& map,
                                                               double threshold_quantile) {
    if (threshold_quantile <= 0.0 || threshold_quantile >= 1.0)
        throw ConfigError("activated_joints: quantile must lie in (0,1)");
    const int r = map.values.dim(0), t = map.values.dim(1), v = map.values.dim(2);
    const std::size_t plane = static_cast<std::size_t>(t) * v;
    const auto& cam = map.values.values();
    std::vector<std::vector<std::pair<int, int>>> out(static_cast<std::size_t>(r));
    std::vector<double> sorted(plane);
    for (int row = 0; row < r; ++row) {
        const double* src = &cam[static_cast<std::size_t>(row) * plane];
        std::copy(src, src + plane, sorted.begin());
        const auto pos = static_cast<std::size_t>(threshold_quantile * static_cast<double>(plane - 1));
        std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(pos), sorted.end());
        const double threshold = sorted[pos];
        for (int ti = 0; ti < t; ++ti)
            for (int j = 0; j < v; ++j)
                if (src[static_cast<std::size_t>(ti) * v + j] > threshold)
                    out[static_cast<std::size_t>(row)].emplace_back(ti, j);
    }
    return out;
}

}  // namespace ragcn
