#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ragcn/graph.hpp"
#include "ragcn/tensor.hpp"

namespace ragcn {

struct StgcnLayerPlan {
    int in_channels = 0;
    int out_channels = 0;
    int stride = 1;
};

struct StgcnConfig {
    int input_channels = 9;
    int num_joints = 0;
    int num_classes = 0;
    int max_distance = 2;     // D_max
    int temporal_window = 5;  // L
    double dropout_rate = 0.5;
    bool input_norm = true;
    std::vector<StgcnLayerPlan> layers;

    // The ten-layer stack with channel plan base*{1,1,1,1,2,2,2,4,4,4} and
    // temporal stride 2 at the two widening layers. base_channels=64 gives
    // the published 9-64-...-128-...-256 plan; smaller bases keep the same
    // structure at desk scale.
    static StgcnConfig standard(int num_joints, int num_classes, int d_max = 2, int window = 5,
                                int base_channels = 64);

    int final_channels() const;
    int stride_product() const;
    int output_frames(int input_frames) const;  // chained ceil(T/stride)
    void validate() const;
    std::uint64_t digest() const;
};

// Distance-partitioned spatial aggregation:
// sum_d W_d x (A_hat_d o M_d) + bias, where W_d is a 1x1 channel map, o is
// elementwise, and the product contracts the joint axis. weights and
// edge_importance must cover d = 0..max_distance.
Tensor spatial_graph_conv(const Tensor& x, const NormalizedAdjacencySet& adj,
                          std::span<const Tensor> weights, std::span<const Tensor> edge_importance,
                          const Tensor& bias);

// One residual ST-GCN layer:
//   spatial conv -> BN -> ReLU -> dropout -> temporal conv (stride) -> BN,
// plus an identity or strided-1x1-projection residual, then a final ReLU.
class StgcnLayer {
public:
    StgcnLayer(const StgcnConfig& config, const StgcnLayerPlan& plan, Rng& rng);

    // Mutates batch-norm running statistics when training.
    Tensor forward(const Tensor& x, const NormalizedAdjacencySet& adj, bool training, Rng& rng);

    void visit_parameters(const std::string& prefix,
                          const std::function<void(const std::string&, Tensor&)>& fn);
    void visit_buffers(const std::string& prefix,
                       const std::function<void(const std::string&, std::vector<double>&)>& fn);

    std::vector<Tensor> spatial_weights;   // per d: [Co,Ci,1,1]
    Tensor spatial_bias;                   // [Co]
    std::vector<Tensor> edge_importance;   // per d: [V,V], all-ones init
    BatchNormState bn_spatial;
    Tensor temporal_weight;                // [Co,Co,L,1]
    Tensor temporal_bias;                  // [Co]
    BatchNormState bn_temporal;
    bool has_projection = false;
    Tensor proj_weight;                    // [Co,Ci,1,1]
    Tensor proj_bias;                      // [Co]
    BatchNormState bn_proj;
    int stride = 1;
    double dropout_rate = 0.0;
};

struct StreamFeatures {
    Tensor pooled;       // [N, C_final]
    Tensor feature_map;  // [N*M, C_final, T', V] (pre-pooling, for activation maps)
};

// Baseline ST-GCN: input normalization, the layer stack, global average
// pooling with body-axis mean, and a linear classifier head.
class StgcnNetwork {
public:
    StgcnNetwork(StgcnConfig config, const SkeletonGraph& graph, Rng& rng);

    // x: [N, C, T, V, M]; bodies are folded into the batch internally.
    // Mutates batch-norm running statistics when training.
    StreamFeatures forward_features(const Tensor& x, bool training, Rng& rng);
    Tensor classify(const Tensor& x, bool training, Rng& rng);  // logits [N, K]

    const StgcnConfig& config() const { return config_; }
    const NormalizedAdjacencySet& adjacency() const { return adjacency_; }

    void visit_parameters(const std::function<void(const std::string&, Tensor&)>& fn);
    void visit_buffers(const std::function<void(const std::string&, std::vector<double>&)>& fn);

    BatchNormState input_bn;
    std::vector<StgcnLayer> layers;
    Tensor head_weight;  // [K, C_final] per-class channel weights
    Tensor head_bias;    // [K]

private:
    StgcnConfig config_;
    NormalizedAdjacencySet adjacency_;
};

}  // namespace ragcn
