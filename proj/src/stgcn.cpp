#include "ragcn/stgcn.hpp"

#include <sstream>

#include "ragcn/errors.hpp"

namespace ragcn {

StgcnConfig StgcnConfig::standard(int num_joints, int num_classes, int d_max, int window,
                                  int base_channels) {
    StgcnConfig c;
    c.num_joints = num_joints;
    c.num_classes = num_classes;
    c.max_distance = d_max;
    c.temporal_window = window;
    const int b = base_channels;
    c.layers = {
        {c.input_channels, b, 1}, {b, b, 1},         {b, b, 1},         {b, b, 1},
        {b, 2 * b, 2},            {2 * b, 2 * b, 1}, {2 * b, 2 * b, 1}, {2 * b, 4 * b, 2},
        {4 * b, 4 * b, 1},        {4 * b, 4 * b, 1},
    };
    c.validate();
    return c;
}

int StgcnConfig::final_channels() const {
    if (layers.empty()) throw ConfigError("stgcn config has no layers");
    return layers.back().out_channels;
}

int StgcnConfig::stride_product() const {
    int p = 1;
    for (const auto& l : layers) p *= l.stride;
    return p;
}

int StgcnConfig::output_frames(int input_frames) const {
    int t = input_frames;
    for (const auto& l : layers) t = (t + l.stride - 1) / l.stride;
    return t;
}

void StgcnConfig::validate() const {
    if (num_joints <= 0) throw ConfigError("stgcn config: joint count must be positive");
    if (num_classes <= 0) throw ConfigError("stgcn config: class count must be positive");
    if (max_distance < 0) throw ConfigError("stgcn config: max distance must be >= 0");
    if (temporal_window <= 0 || temporal_window % 2 == 0)
        throw ConfigError("stgcn config: temporal window must be odd and positive, got " +
                          std::to_string(temporal_window));
    if (dropout_rate < 0.0 || dropout_rate >= 1.0)
        throw ConfigError("stgcn config: dropout rate must be in [0,1)");
    if (layers.empty()) throw ConfigError("stgcn config has no layers");
    if (layers.front().in_channels != input_channels)
        throw ConfigError("stgcn config: first layer expects " +
                          std::to_string(layers.front().in_channels) + " channels, input provides " +
                          std::to_string(input_channels));
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& l = layers[i];
        if (l.in_channels <= 0 || l.out_channels <= 0)
            throw ConfigError("stgcn config: layer " + std::to_string(i) + " has non-positive channels");
        if (l.stride != 1 && l.stride != 2)
            throw ConfigError("stgcn config: layer " + std::to_string(i) + " stride must be 1 or 2");
        if (i > 0 && layers[i - 1].out_channels != l.in_channels)
            throw ConfigError("stgcn config: channel mismatch between layers " + std::to_string(i - 1) +
                              " and " + std::to_string(i));
    }
}

std::uint64_t StgcnConfig::digest() const {
    std::ostringstream os;
    os << input_channels << '|' << num_joints << '|' << num_classes << '|' << max_distance << '|'
       << temporal_window << '|' << input_norm;
    for (const auto& l : layers) os << '|' << l.in_channels << ',' << l.out_channels << ',' << l.stride;
    return fnv1a64(os.str());
}

Tensor spatial_graph_conv(const Tensor& x, const NormalizedAdjacencySet& adj,
                          std::span<const Tensor> weights, std::span<const Tensor> edge_importance,
                          const Tensor& bias) {
    const std::size_t partitions = adj.a_hat.size();
    if (weights.size() != partitions)
        throw ConfigError("spatial_graph_conv: " + std::to_string(weights.size()) + " weights for " +
                          std::to_string(partitions) + " adjacency partitions");
    if (edge_importance.size() != partitions)
        throw ConfigError("spatial_graph_conv: " + std::to_string(edge_importance.size()) +
                          " edge-importance matrices for " + std::to_string(partitions) + " partitions");
    Tensor acc;
    for (std::size_t d = 0; d < partitions; ++d) {
        const Tensor mapped = ops::temporal_conv(x, weights[d], Tensor(), /*stride=*/1);
        const Tensor term = ops::masked_contract(mapped, adj.a_hat[d], edge_importance[d]);
        acc = d == 0 ? term : ops::add(acc, term);
    }
    if (bias.defined()) acc = ops::add_channel_bias(acc, bias);
    return acc;
}

StgcnLayer::StgcnLayer(const StgcnConfig& config, const StgcnLayerPlan& plan, Rng& rng)
    : stride(plan.stride), dropout_rate(config.dropout_rate) {
    const int ci = plan.in_channels, co = plan.out_channels, v = config.num_joints;
    const int l = config.temporal_window;
    for (int d = 0; d <= config.max_distance; ++d) {
        spatial_weights.push_back(Tensor::he_uniform({co, ci, 1, 1}, ci, rng));
        edge_importance.push_back(Tensor::ones({v, v}, /*requires_grad=*/true));
    }
    spatial_bias = Tensor::zeros({co}, /*requires_grad=*/true);
    bn_spatial = BatchNormState::make(co);
    temporal_weight = Tensor::he_uniform({co, co, l, 1}, co * l, rng);
    temporal_bias = Tensor::zeros({co}, /*requires_grad=*/true);
    bn_temporal = BatchNormState::make(co);
    has_projection = (ci != co) || (plan.stride != 1);
    if (has_projection) {
        proj_weight = Tensor::he_uniform({co, ci, 1, 1}, ci, rng);
        proj_bias = Tensor::zeros({co}, /*requires_grad=*/true);
        bn_proj = BatchNormState::make(co);
    }
}

Tensor StgcnLayer::forward(const Tensor& x, const NormalizedAdjacencySet& adj, bool training, Rng& rng) {
    Tensor h = spatial_graph_conv(x, adj, spatial_weights, edge_importance, spatial_bias);
    h = ops::batch_norm(h, bn_spatial, training);
    h = ops::relu(h);
    h = ops::dropout(h, dropout_rate, training, rng);
    h = ops::temporal_conv(h, temporal_weight, temporal_bias, stride);
    h = ops::batch_norm(h, bn_temporal, training);
    Tensor res;
    if (has_projection) {
        res = ops::temporal_conv(x, proj_weight, proj_bias, stride);
        res = ops::batch_norm(res, bn_proj, training);
    } else {
        res = x;
    }
    return ops::relu(ops::add(h, res));
}

void StgcnLayer::visit_parameters(const std::string& prefix,
                                  const std::function<void(const std::string&, Tensor&)>& fn) {
    for (std::size_t d = 0; d < spatial_weights.size(); ++d)
        fn(prefix + ".spatial.w" + std::to_string(d), spatial_weights[d]);
    fn(prefix + ".spatial.bias", spatial_bias);
    for (std::size_t d = 0; d < edge_importance.size(); ++d)
        fn(prefix + ".edge_importance." + std::to_string(d), edge_importance[d]);
    fn(prefix + ".bn_spatial.gamma", bn_spatial.gamma);
    fn(prefix + ".bn_spatial.beta", bn_spatial.beta);
    fn(prefix + ".temporal.weight", temporal_weight);
    fn(prefix + ".temporal.bias", temporal_bias);
    fn(prefix + ".bn_temporal.gamma", bn_temporal.gamma);
    fn(prefix + ".bn_temporal.beta", bn_temporal.beta);
    if (has_projection) {
        fn(prefix + ".proj.weight", proj_weight);
        fn(prefix + ".proj.bias", proj_bias);
        fn(prefix + ".bn_proj.gamma", bn_proj.gamma);
        fn(prefix + ".bn_proj.beta", bn_proj.beta);
    }
}

void StgcnLayer::visit_buffers(const std::string& prefix,
                               const std::function<void(const std::string&, std::vector<double>&)>& fn) {
    fn(prefix + ".bn_spatial.running_mean", bn_spatial.running_mean);
    fn(prefix + ".bn_spatial.running_var", bn_spatial.running_var);
    fn(prefix + ".bn_temporal.running_mean", bn_temporal.running_mean);
    fn(prefix + ".bn_temporal.running_var", bn_temporal.running_var);
    if (has_projection) {
        fn(prefix + ".bn_proj.running_mean", bn_proj.running_mean);
        fn(prefix + ".bn_proj.running_var", bn_proj.running_var);
    }
}

StgcnNetwork::StgcnNetwork(StgcnConfig config, const SkeletonGraph& graph, Rng& rng)
    : config_(std::move(config)) {
    config_.validate();
    if (graph.num_joints != config_.num_joints)
        throw ConfigError("stgcn: graph has " + std::to_string(graph.num_joints) + " joints, config expects " +
                          std::to_string(config_.num_joints));
    adjacency_ = NormalizedAdjacencySet::build(graph, config_.max_distance);
    input_bn = BatchNormState::make(config_.input_channels);
    for (const auto& plan : config_.layers) layers.emplace_back(config_, plan, rng);
    const int cf = config_.final_channels();
    head_weight = Tensor::he_uniform({config_.num_classes, cf}, cf, rng);
    head_bias = Tensor::zeros({config_.num_classes}, /*requires_grad=*/true);
}

StreamFeatures StgcnNetwork::forward_features(const Tensor& x, bool training, Rng& rng) {
    if (x.ndim() != 5)
        throw DimensionError("stgcn forward expects [N,C,T,V,M] input, got " + shape_str(x.shape()));
    const int n = x.dim(0), c = x.dim(1), t = x.dim(2), v = x.dim(3), m = x.dim(4);
    if (c != config_.input_channels || v != config_.num_joints)
        throw DimensionError("stgcn forward: input " + shape_str(x.shape()) + " does not match config (C=" +
                             std::to_string(config_.input_channels) + ", V=" +
                             std::to_string(config_.num_joints) + ")");
    // fold bodies into the batch: [N,C,T,V,M] -> [N*M,C,T,V]
    Tensor h = ops::permute(x, {0, 4, 1, 2, 3});
    h = ops::reshape(h, {n * m, c, t, v});
    if (config_.input_norm) h = ops::batch_norm(h, input_bn, training);
    for (auto& layer : layers) h = layer.forward(h, adjacency_, training, rng);
    StreamFeatures out;
    out.feature_map = h;
    Tensor pooled = ops::global_avg_pool(h);                       // [N*M, Cf]
    pooled = ops::reshape(pooled, {n, m, config_.final_channels()});
    out.pooled = ops::mean_axis(pooled, 1);                        // [N, Cf]
    return out;
}

Tensor StgcnNetwork::classify(const Tensor& x, bool training, Rng& rng) {
    return ops::linear(forward_features(x, training, rng).pooled, head_weight, head_bias);
}

void StgcnNetwork::visit_parameters(const std::function<void(const std::string&, Tensor&)>& fn) {
    fn("input_bn.gamma", input_bn.gamma);
    fn("input_bn.beta", input_bn.beta);
    for (std::size_t i = 0; i < layers.size(); ++i)
        layers[i].visit_parameters("layers." + std::to_string(i), fn);
    fn("head.weight", head_weight);
    fn("head.bias", head_bias);
}

void StgcnNetwork::visit_buffers(const std::function<void(const std::string&, std::vector<double>&)>& fn) {
    fn("input_bn.running_mean", input_bn.running_mean);
    fn("input_bn.running_var", input_bn.running_var);
    for (std::size_t i = 0; i < layers.size(); ++i)
        layers[i].visit_buffers("layers." + std::to_string(i), fn);
}

}  // namespace ragcn
