#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ragcn/activation.hpp"
#include "ragcn/data_io.hpp"
#include "ragcn/graph.hpp"
#include "ragcn/stgcn.hpp"

namespace ragcn {

// SGD with momentum, L2 weight decay and step decay of the learning rate.
class SgdOptimizer {
public:
    SgdOptimizer(std::vector<Tensor> parameters, double learning_rate, double momentum,
                 double weight_decay);

    void step();
    void zero_grad();
    void set_learning_rate(double lr) { learning_rate_ = lr; }
    double learning_rate() const { return learning_rate_; }

private:
    struct Entry {
        Tensor parameter;
        std::vector<double> velocity;
    };
    std::vector<Entry> entries_;
    double learning_rate_;
    double momentum_;
    double weight_decay_;
};

struct StreamTrace {
    StreamMask mask;    // gate applied to this stream's input
    ActivationMap cam;  // map produced by this stream
    Tensor pooled;      // [N, C_final]
    Tensor feature_map; // [N*M, C_final, T', V]
};

struct ForwardResult {
    Tensor logits;         // [N, K]
    Tensor probabilities;  // [N, K]
    std::vector<StreamTrace> streams;
};

// S parallel ST-GCN streams with accumulated activation masks, concatenated
// pooled features and one linear fusion head. S = 1 degenerates exactly to
// the baseline network.
class RaGcnModel {
public:
    RaGcnModel(StgcnConfig config, SkeletonGraph graph, int stream_count, Rng& rng);

    // Clones baseline parameters into every stream and tiles the baseline
    // classifier (scaled by 1/S) into the fusion head.
    static RaGcnModel init_streams(const StgcnConfig& config, const SkeletonGraph& graph,
                                   const Checkpoint& baseline, int stream_count);

    // Masks are rebuilt stream by stream from activation maps: true labels
    // when `labels` is given (training), otherwise each stream's class is
    // predicted by the preceding stream. Mutates BN running stats when
    // training.
    ForwardResult forward(const Tensor& x_prime, std::span<const int> labels, bool training, Rng& rng);

    // Runs all streams under the given fixed masks (one per stream); used
    // by the gradient checker, which treats masks as constants exactly like
    // the training path does.
    ForwardResult forward_masked(const Tensor& x_prime, std::span<const StreamMask> masks, bool training,
                                 Rng& rng);

    Tensor fusion_block_weights(int stream) const;  // [K, C_final] detached copy

    // Per-class channel weights used as a stream's activation-map lens:
    // S times its fusion block, i.e. the single-stream classifier the fused
    // logits imply. Equals the cloned baseline head right after
    // init_streams and tracks the fusion head during fine-tuning.
    Tensor stream_class_weights(int stream) const;

    int stream_count() const { return static_cast<int>(streams.size()); }
    const StgcnConfig& config() const { return config_; }
    const SkeletonGraph& graph() const { return graph_; }

    void visit_parameters(const std::function<void(const std::string&, Tensor&)>& fn);
    void visit_buffers(const std::function<void(const std::string&, std::vector<double>&)>& fn);
    std::vector<Tensor> parameters();

    std::vector<StgcnNetwork> streams;
    Tensor fusion_weight;  // [K, S * C_final]
    Tensor fusion_bias;    // [K]

private:
    StgcnConfig config_;
    SkeletonGraph graph_;
};

struct TrainConfig {
    int epochs = 50;
    int batch_size = 8;
    double learning_rate = 0.05;
    double momentum = 0.9;
    double weight_decay = 1e-4;
    std::vector<int> lr_step_epochs;  // 1-based epochs at which lr decays
    double lr_decay = 0.1;
    std::uint64_t seed = 0;
    std::string checkpoint_dir;  // when set, a checkpoint per epoch
    std::ostream* log = nullptr; // receives "epoch,split,loss,accuracy" lines
};

struct EvalResult {
    double loss = 0.0;
    double accuracy = 0.0;
    std::vector<int> predictions;
};

struct TrainHistory {
    std::vector<double> train_loss, train_accuracy, eval_loss, eval_accuracy;
    int best_epoch = 0;        // 1-based
    double best_accuracy = 0.0;
};

// Checkpoint glue. Baseline snapshots use stream_count == 0.
Checkpoint snapshot(StgcnNetwork& network, std::uint64_t graph_digest, int epoch);
Checkpoint snapshot(RaGcnModel& model, int epoch);
void restore(StgcnNetwork& network, const Checkpoint& checkpoint, std::uint64_t graph_digest);
void restore(RaGcnModel& model, const Checkpoint& checkpoint);

// Trains a single unmasked network with cross-entropy SGD and returns it at
// its best evaluation accuracy (evaluation falls back to the training split
// when no eval set is given).
struct PretrainResult {
    StgcnNetwork network;
    TrainHistory history;
    Checkpoint best;
};
PretrainResult pretrain_baseline(const Dataset& train, const Dataset* eval, const SkeletonGraph& graph,
                                 const StgcnConfig& config, const TrainConfig& train_config);

// Joint fine-tuning of all streams and the fusion head; masks are rebuilt
// from true-label activation maps every batch.
TrainHistory finetune(RaGcnModel& model, const Dataset& train, const Dataset* eval,
                      const TrainConfig& train_config);

EvalResult evaluate(RaGcnModel& model, const Dataset& dataset, int batch_size = 16);
EvalResult evaluate(StgcnNetwork& network, const Dataset& dataset, const SkeletonGraph& graph,
                    int batch_size = 16);

}  // namespace ragcn
