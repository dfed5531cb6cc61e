#pragma once

#include <span>
#include <utility>
#include <vector>

#include "ragcn/tensor.hpp"

namespace ragcn {

// Class activation map over (frame, joint) for one stream. The leading axis
// is the folded batch (sample x body); values are detached constants.
struct ActivationMap {
    Tensor values;  // [R, T', V], untracked
    int stream_index = 0;
    std::vector<int> class_used;  // per folded row
};

// Multiplicative gate on stream inputs, at input temporal resolution.
// Stream 1's mask is all-ones; later masks accumulate (1 - softmax(CAM))
// factors and stay within [0,1].
struct StreamMask {
    Tensor values;  // [R, T, V], untracked
    int stream_index = 1;

    static StreamMask all_ones(int rows, int frames, int joints);
};

// M_c(t,i) = sum_k w[c,k] * f_k(t,i) with c the row's selected class.
// feature_map: [R,C,T',V]; class_weights: [K,C]; labels: one class per row.
ActivationMap compute_cam(const Tensor& feature_map, const Tensor& class_weights,
                          std::span<const int> labels, int stream_index);

// Nearest-neighbor repetition along the temporal axis up to target_frames;
// target must be an exact multiple of the map's frame count.
Tensor upsample_map(const ActivationMap& map, int target_frames);

// mask_s = (prod of previous masks) o (1 - softmax(cam)). The softmax is
// normalized jointly over the map's own (t,i) locations per row, since
// its coordinates are the feature map's; the suppression factor is then
// upsampled to the masks' temporal resolution. Normalizing after
// upsampling would split a dominant location's mass across its repeats
// and cap the suppression at 1/stride_product instead of letting the
// hottest location's mask approach zero.
StreamMask next_mask(std::span<const StreamMask> previous, const ActivationMap& cam);

// x' o mask, broadcasting the mask over channels; mask rows follow the
// folded (sample, body) order. x_prime: [N,C,T,V,M], mask: [N*M,T,V].
Tensor mask_input(const Tensor& x_prime, const StreamMask& mask);

// Locations whose CAM value strictly exceeds the row's quantile (ties
// excluded). Returned per row as (frame, joint) pairs.
std::vector<std::vector<std::pair<int, int>>> activated_joints(const ActivationMap& map,
                                                               double threshold_quantile);

}  // namespace ragcn
