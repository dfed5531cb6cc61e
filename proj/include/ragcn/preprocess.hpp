#pragma once

#include <span>
#include <string>

#include "ragcn/tensor.hpp"

namespace ragcn {

// One raw skeleton sample: C=3 coordinates over [3,T,V,M]. Frames beyond
// valid_frames are zero padding.
struct SkeletonSequence {
    Tensor data;  // [3,T,V,M], untracked
    int valid_frames = 0;
    int label = -1;
    std::string sample_id;

    int channels() const { return data.dim(0); }
    int frames() const { return data.dim(1); }
    int joints() const { return data.dim(2); }
    int bodies() const { return data.dim(3); }

    void check() const;  // shape and valid_frames sanity
};

// Frame-to-frame difference x_t[t] = x[t+1] - x[t]; the last frame is 0.
Tensor motion_features(const SkeletonSequence& sample);

// x_r[:,t,i,m] = x[:,t,i,m] - x[:,t,center,m] (per body).
Tensor relative_coordinates(const SkeletonSequence& sample, int center_joint);

// Channel concatenation (x, x_t, x_r) -> [9,T,V,M].
Tensor assemble(const SkeletonSequence& sample, int center_joint);

// Stacks assembled samples into [N,9,T,V,M]. All samples must share T, V, M.
Tensor assemble_batch(std::span<const SkeletonSequence> samples, int center_joint);

}  // namespace ragcn
