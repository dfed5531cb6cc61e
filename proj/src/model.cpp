#include "ragcn/model.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "ragcn/errors.hpp"
#include "ragcn/preprocess.hpp"

namespace ragcn {

SgdOptimizer::SgdOptimizer(std::vector<Tensor> parameters, double learning_rate, double momentum,
                           double weight_decay)
    : learning_rate_(learning_rate), momentum_(momentum), weight_decay_(weight_decay) {
    for (auto& p : parameters) {
        if (!p.requires_grad()) throw UsageError("optimizer given a tensor without requires_grad");
        Entry e;
        e.velocity.assign(p.values().size(), 0.0);
        e.parameter = std::move(p);
        entries_.push_back(std::move(e));
    }
}

void SgdOptimizer::step() {
    for (auto& e : entries_) {
        auto& theta = e.parameter.mutable_values();
        const auto& g = e.parameter.grad();
        for (std::size_t i = 0; i < theta.size(); ++i) {
            const double grad = g[i] + weight_decay_ * theta[i];
            e.velocity[i] = momentum_ * e.velocity[i] + grad;
            theta[i] -= learning_rate_ * e.velocity[i];
        }
    }
}

void SgdOptimizer::zero_grad() {
    for (auto& e : entries_) e.parameter.zero_grad();
}

RaGcnModel::RaGcnModel(StgcnConfig config, SkeletonGraph graph, int stream_count, Rng& rng)
    : config_(std::move(config)), graph_(std::move(graph)) {
    config_.validate();
    graph_.validate();
    if (stream_count < 1 || stream_count > 3)
        throw ConfigError("stream count must be 1, 2 or 3, got " + std::to_string(stream_count));
    for (int s = 0; s < stream_count; ++s) streams.emplace_back(config_, graph_, rng);
    const int k = config_.num_classes;
    const int cf = config_.final_channels();
    fusion_weight = Tensor::he_uniform({k, stream_count * cf}, stream_count * cf, rng);
    fusion_bias = Tensor::zeros({k}, /*requires_grad=*/true);
}

RaGcnModel RaGcnModel::init_streams(const StgcnConfig& config, const SkeletonGraph& graph,
                                    const Checkpoint& baseline, int stream_count) {
    if (baseline.stream_count != 0)
        throw ConfigError("init_streams expects a baseline checkpoint, got one with " +
                          std::to_string(baseline.stream_count) + " streams");
    if (baseline.graph_digest != graph.digest())
        throw ConfigError("init_streams: checkpoint graph digest mismatch");
    if (baseline.config_digest != config.digest())
        throw ConfigError("init_streams: checkpoint config digest mismatch");

    Rng rng(0);
    RaGcnModel model(config, graph, stream_count, rng);
    auto copy_param = [&](const std::string& name, Tensor& t) {
        const auto& rec = baseline.find(name);
        if (rec.shape != t.shape())
            throw ConfigError("init_streams: record '" + name + "' has shape " + shape_str(rec.shape) +
                              ", model expects " + shape_str(t.shape()));
        auto& v = t.mutable_values();
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(rec.data[i]);
    };
    auto copy_buffer = [&](const std::string& name, std::vector<double>& b) {
        const auto& rec = baseline.find(name);
        if (rec.data.size() != b.size())
            throw ConfigError("init_streams: buffer '" + name + "' size mismatch");
        for (std::size_t i = 0; i < b.size(); ++i) b[i] = static_cast<double>(rec.data[i]);
    };
    for (auto& stream : model.streams) {
        stream.visit_parameters(copy_param);
        stream.visit_buffers(copy_buffer);
    }
    // tile the baseline classifier across the S feature blocks, scaled so
    // the initial fused logits approximate the baseline's
    const int k = config.num_classes;
    const int cf = config.final_channels();
    const auto& head = baseline.find("head.weight");
    if (head.shape != Shape{k, cf})
        throw ConfigError("init_streams: baseline head has shape " + shape_str(head.shape));
    const double inv_s = 1.0 / static_cast<double>(stream_count);
    auto& fw = model.fusion_weight.mutable_values();
    for (int row = 0; row < k; ++row)
        for (int s = 0; s < stream_count; ++s)
            for (int c = 0; c < cf; ++c)
                fw[(static_cast<std::size_t>(row) * stream_count + s) * cf + c] =
                    static_cast<double>(head.data[static_cast<std::size_t>(row) * cf + c]) * inv_s;
    const auto& head_bias = baseline.find("head.bias");
    auto& fb = model.fusion_bias.mutable_values();
    for (int row = 0; row < k; ++row) fb[static_cast<std::size_t>(row)] = static_cast<double>(head_bias.data[row]);
    return model;
}

Tensor RaGcnModel::fusion_block_weights(int stream) const {
    const int k = config_.num_classes;
    const int cf = config_.final_channels();
    const int s_total = stream_count();
    if (stream < 0 || stream >= s_total) throw UsageError("fusion_block_weights: stream out of range");
    const auto& fw = fusion_weight.values();
    std::vector<double> block(static_cast<std::size_t>(k) * cf);
    for (int row = 0; row < k; ++row)
        for (int c = 0; c < cf; ++c)
            block[static_cast<std::size_t>(row) * cf + c] =
                fw[(static_cast<std::size_t>(row) * s_total + stream) * cf + c];
    return Tensor::from_data({k, cf}, std::move(block));
}

Tensor RaGcnModel::stream_class_weights(int stream) const {
    Tensor block = fusion_block_weights(stream);
    const double s = static_cast<double>(stream_count());
    for (auto& v : block.mutable_values()) v *= s;
    return block;
}

namespace {

std::vector<int> fold_labels(std::span<const int> labels, int bodies) {
    std::vector<int> folded;
    folded.reserve(labels.size() * static_cast<std::size_t>(bodies));
    for (int label : labels)
        for (int b = 0; b < bodies; ++b) folded.push_back(label);
    return folded;
}

// argmax over a stream's partial logits pooled . W_s^T
std::vector<int> predicted_classes(const Tensor& pooled, const Tensor& block_weights) {
    const int n = pooled.dim(0), cf = pooled.dim(1), k = block_weights.dim(0);
    const auto& p = pooled.values();
    const auto& w = block_weights.values();
    std::vector<int> out(static_cast<std::size_t>(n), 0);
    for (int i = 0; i < n; ++i) {
        double best = -1e300;
        int arg = 0;
        for (int c = 0; c < k; ++c) {
            double acc = 0.0;
            for (int f = 0; f < cf; ++f)
                acc += p[static_cast<std::size_t>(i) * cf + f] * w[static_cast<std::size_t>(c) * cf + f];
            if (acc > best) {
                best = acc;
                arg = c;
            }
        }
        out[static_cast<std::size_t>(i)] = arg;
    }
    return out;
}

}  // namespace

ForwardResult RaGcnModel::forward(const Tensor& x_prime, std::span<const int> labels, bool training,
                                  Rng& rng) {
    if (!x_prime.defined() || x_prime.ndim() != 5)
        throw DimensionError("model forward expects [N,C,T,V,M] input");
    const int n = x_prime.dim(0), t = x_prime.dim(2), v = x_prime.dim(3), m = x_prime.dim(4);
    if (!labels.empty() && static_cast<int>(labels.size()) != n)
        throw InputError("model forward: " + std::to_string(labels.size()) + " labels for batch of " +
                         std::to_string(n));
    const int s_total = stream_count();

    std::vector<StreamMask> masks;
    masks.push_back(StreamMask::all_ones(n * m, t, v));
    ForwardResult result;
    std::vector<Tensor> pooled_list;
    for (int s = 0; s < s_total; ++s) {
        const Tensor x_s = mask_input(x_prime, masks[static_cast<std::size_t>(s)]);
        StreamFeatures feats = streams[static_cast<std::size_t>(s)].forward_features(x_s, training, rng);

        std::vector<int> cam_classes;
        if (!labels.empty()) {
            cam_classes = fold_labels(labels, m);
        } else {
            const auto per_sample =
                predicted_classes(feats.pooled.detach(), stream_class_weights(s));
            cam_classes = fold_labels(per_sample, m);
        }
        ActivationMap cam =
            compute_cam(feats.feature_map.detach(), stream_class_weights(s), cam_classes, s + 1);

        if (s + 1 < s_total)
            masks.push_back(next_mask(std::span<const StreamMask>(masks.data(), masks.size()), cam));

        StreamTrace trace;
        trace.mask = masks[static_cast<std::size_t>(s)];
        trace.cam = std::move(cam);
        trace.pooled = feats.pooled;
        trace.feature_map = feats.feature_map;
        result.streams.push_back(std::move(trace));
        pooled_list.push_back(result.streams.back().pooled);
    }
    const Tensor fused = ops::concat(pooled_list, /*axis=*/1);
    result.logits = ops::linear(fused, fusion_weight, fusion_bias);
    result.probabilities = ops::softmax(result.logits, /*axis=*/1);
    return result;
}

ForwardResult RaGcnModel::forward_masked(const Tensor& x_prime, std::span<const StreamMask> masks,
                                         bool training, Rng& rng) {
    if (static_cast<int>(masks.size()) != stream_count())
        throw UsageError("forward_masked: " + std::to_string(masks.size()) + " masks for " +
                         std::to_string(stream_count()) + " streams");
    ForwardResult result;
    std::vector<Tensor> pooled_list;
    for (int s = 0; s < stream_count(); ++s) {
        const Tensor x_s = mask_input(x_prime, masks[static_cast<std::size_t>(s)]);
        StreamFeatures feats = streams[static_cast<std::size_t>(s)].forward_features(x_s, training, rng);
        StreamTrace trace;
        trace.mask = masks[static_cast<std::size_t>(s)];
        trace.pooled = feats.pooled;
        trace.feature_map = feats.feature_map;
        result.streams.push_back(std::move(trace));
        pooled_list.push_back(result.streams.back().pooled);
    }
    const Tensor fused = ops::concat(pooled_list, /*axis=*/1);
    result.logits = ops::linear(fused, fusion_weight, fusion_bias);
    result.probabilities = ops::softmax(result.logits, /*axis=*/1);
    return result;
}

void RaGcnModel::visit_parameters(const std::function<void(const std::string&, Tensor&)>& fn) {
    for (std::size_t s = 0; s < streams.size(); ++s) {
        const std::string prefix = "streams." + std::to_string(s) + ".";
        streams[s].visit_parameters([&](const std::string& name, Tensor& t) { fn(prefix + name, t); });
    }
    fn("fusion.weight", fusion_weight);
    fn("fusion.bias", fusion_bias);
}

void RaGcnModel::visit_buffers(const std::function<void(const std::string&, std::vector<double>&)>& fn) {
    for (std::size_t s = 0; s < streams.size(); ++s) {
        const std::string prefix = "streams." + std::to_string(s) + ".";
        streams[s].visit_buffers([&](const std::string& name, std::vector<double>& b) { fn(prefix + name, b); });
    }
}

std::vector<Tensor> RaGcnModel::parameters() {
    std::vector<Tensor> out;
    visit_parameters([&](const std::string&, Tensor& t) { out.push_back(t); });
    return out;
}

namespace {

CheckpointRecord to_record(const std::string& name, const Shape& shape, const std::vector<double>& values) {
    CheckpointRecord rec;
    rec.name = name;
    rec.shape = shape;
    rec.data.reserve(values.size());
    for (double v : values) rec.data.push_back(static_cast<float>(v));
    return rec;
}

void load_record_into(const CheckpointRecord& rec, Tensor& t) {
    if (rec.shape != t.shape())
        throw ConfigError("checkpoint record '" + rec.name + "' has shape " + shape_str(rec.shape) +
                          ", model expects " + shape_str(t.shape()));
    auto& v = t.mutable_values();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(rec.data[i]);
}

}  // namespace

Checkpoint snapshot(StgcnNetwork& network, std::uint64_t graph_digest, int epoch) {
    Checkpoint c;
    c.graph_digest = graph_digest;
    c.config_digest = network.config().digest();
    c.stream_count = 0;
    c.epoch = static_cast<std::uint32_t>(epoch);
    network.visit_parameters(
        [&](const std::string& name, Tensor& t) { c.records.push_back(to_record(name, t.shape(), t.values())); });
    network.visit_buffers([&](const std::string& name, std::vector<double>& b) {
        c.records.push_back(to_record(name, {static_cast<int>(b.size())}, b));
    });
    return c;
}

Checkpoint snapshot(RaGcnModel& model, int epoch) {
    Checkpoint c;
    c.graph_digest = model.graph().digest();
    c.config_digest = model.config().digest();
    c.stream_count = static_cast<std::uint32_t>(model.stream_count());
    c.epoch = static_cast<std::uint32_t>(epoch);
    model.visit_parameters(
        [&](const std::string& name, Tensor& t) { c.records.push_back(to_record(name, t.shape(), t.values())); });
    model.visit_buffers([&](const std::string& name, std::vector<double>& b) {
        c.records.push_back(to_record(name, {static_cast<int>(b.size())}, b));
    });
    return c;
}

void restore(StgcnNetwork& network, const Checkpoint& checkpoint, std::uint64_t graph_digest) {
    if (checkpoint.stream_count != 0)
        throw ConfigError("expected a baseline checkpoint, got one with " +
                          std::to_string(checkpoint.stream_count) + " streams");
    if (checkpoint.graph_digest != graph_digest) throw ConfigError("checkpoint graph digest mismatch");
    if (checkpoint.config_digest != network.config().digest())
        throw ConfigError("checkpoint config digest mismatch");
    network.visit_parameters(
        [&](const std::string& name, Tensor& t) { load_record_into(checkpoint.find(name), t); });
    network.visit_buffers([&](const std::string& name, std::vector<double>& b) {
        const auto& rec = checkpoint.find(name);
        if (rec.data.size() != b.size()) throw ConfigError("checkpoint buffer '" + name + "' size mismatch");
        for (std::size_t i = 0; i < b.size(); ++i) b[i] = static_cast<double>(rec.data[i]);
    });
}

void restore(RaGcnModel& model, const Checkpoint& checkpoint) {
    if (checkpoint.stream_count != static_cast<std::uint32_t>(model.stream_count()))
        throw ConfigError("checkpoint has " + std::to_string(checkpoint.stream_count) +
                          " streams, model has " + std::to_string(model.stream_count()));
    if (checkpoint.graph_digest != model.graph().digest())
        throw ConfigError("checkpoint graph digest mismatch");
    if (checkpoint.config_digest != model.config().digest())
        throw ConfigError("checkpoint config digest mismatch");
    model.visit_parameters(
        [&](const std::string& name, Tensor& t) { load_record_into(checkpoint.find(name), t); });
    model.visit_buffers([&](const std::string& name, std::vector<double>& b) {
        const auto& rec = checkpoint.find(name);
        if (rec.data.size() != b.size()) throw ConfigError("checkpoint buffer '" + name + "' size mismatch");
        for (std::size_t i = 0; i < b.size(); ++i) b[i] = static_cast<double>(rec.data[i]);
    });
}

namespace {

std::vector<int> shuffled_indices(int n, Rng& rng) {
    std::vector<int> idx(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
    for (int i = n - 1; i > 0; --i) {
        const auto j = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(i) + 1));
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
    return idx;
}

void log_line(std::ostream* log, int epoch, const char* split, double loss, double accuracy) {
    if (!log) return;
    std::ostringstream os;
    os << epoch << ',' << split << ',' << std::fixed << std::setprecision(6) << loss << ','
       << std::setprecision(4) << accuracy;
    *log << os.str() << '\n';
}

std::vector<SkeletonSequence> gather(const Dataset& dataset, std::span<const int> indices, int from,
                                     int count) {
    std::vector<SkeletonSequence> batch;
    batch.reserve(static_cast<std::size_t>(count));
    for (int i = from; i < from + count; ++i)
        batch.push_back(dataset.samples[static_cast<std::size_t>(indices[static_cast<std::size_t>(i)])]);
    return batch;
}

double maybe_decay_lr(SgdOptimizer& opt, const TrainConfig& cfg, int epoch) {
    for (int step : cfg.lr_step_epochs)
        if (step == epoch) opt.set_learning_rate(opt.learning_rate() * cfg.lr_decay);
    return opt.learning_rate();
}

}  // namespace

EvalResult evaluate(RaGcnModel& model, const Dataset& dataset, int batch_size) {
    if (dataset.samples.empty()) throw UsageError("evaluate: empty dataset");
    NoGradGuard guard;
    Rng rng(0);
    EvalResult out;
    double loss_sum = 0.0;
    int correct = 0;
    const int n = dataset.size();
    for (int at = 0; at < n; at += batch_size) {
        const int count = std::min(batch_size, n - at);
        std::vector<SkeletonSequence> batch(dataset.samples.begin() + at,
                                            dataset.samples.begin() + at + count);
        std::vector<int> labels;
        for (const auto& s : batch) labels.push_back(s.label);
        const Tensor xb = assemble_batch(batch, model.graph().center_joint);
        ForwardResult r = model.forward(xb, {}, /*training=*/false, rng);
        loss_sum += ops::cross_entropy(r.logits, labels).item() * count;
        const auto& probs = r.probabilities.values();
        const int k = r.probabilities.dim(1);
        for (int i = 0; i < count; ++i) {
            int arg = 0;
            for (int c = 1; c < k; ++c)
                if (probs[static_cast<std::size_t>(i) * k + c] > probs[static_cast<std::size_t>(i) * k + arg])
                    arg = c;
            out.predictions.push_back(arg);
            if (arg == labels[static_cast<std::size_t>(i)]) ++correct;
        }
    }
    out.loss = loss_sum / n;
    out.accuracy = static_cast<double>(correct) / n;
    return out;
}

EvalResult evaluate(StgcnNetwork& network, const Dataset& dataset, const SkeletonGraph& graph,
                    int batch_size) {
    if (dataset.samples.empty()) throw UsageError("evaluate: empty dataset");
    NoGradGuard guard;
    Rng rng(0);
    EvalResult out;
    double loss_sum = 0.0;
    int correct = 0;
    const int n = dataset.size();
    for (int at = 0; at < n; at += batch_size) {
        const int count = std::min(batch_size, n - at);
        std::vector<SkeletonSequence> batch(dataset.samples.begin() + at,
                                            dataset.samples.begin() + at + count);
        std::vector<int> labels;
        for (const auto& s : batch) labels.push_back(s.label);
        const Tensor xb = assemble_batch(batch, graph.center_joint);
        const Tensor logits = network.classify(xb, /*training=*/false, rng);
        loss_sum += ops::cross_entropy(logits, labels).item() * count;
        const auto& z = logits.values();
        const int k = logits.dim(1);
        for (int i = 0; i < count; ++i) {
            int arg = 0;
            for (int c = 1; c < k; ++c)
                if (z[static_cast<std::size_t>(i) * k + c] > z[static_cast<std::size_t>(i) * k + arg]) arg = c;
            out.predictions.push_back(arg);
            if (arg == labels[static_cast<std::size_t>(i)]) ++correct;
        }
    }
    out.loss = loss_sum / n;
    out.accuracy = static_cast<double>(correct) / n;
    return out;
}

PretrainResult pretrain_baseline(const Dataset& train, const Dataset* eval_set, const SkeletonGraph& graph,
                                 const StgcnConfig& config, const TrainConfig& train_config) {
    if (train.samples.empty()) throw UsageError("pretrain: empty dataset");
    train.validate();
    if (train.header.joints != graph.num_joints)
        throw ConfigError("pretrain: dataset has " + std::to_string(train.header.joints) +
                          " joints, graph has " + std::to_string(graph.num_joints));

    Rng init_rng = Rng(train_config.seed).derive("init");
    StgcnNetwork network(config, graph, init_rng);
    std::vector<Tensor> params;
    network.visit_parameters([&](const std::string&, Tensor& t) { params.push_back(t); });
    SgdOptimizer opt(std::move(params), train_config.learning_rate, train_config.momentum,
                     train_config.weight_decay);
    Rng train_rng = Rng(train_config.seed).derive("train");

    PretrainResult result{std::move(network), {}, {}};
    result.best = snapshot(result.network, graph.digest(), 0);
    double best_accuracy = -1.0;

    for (int epoch = 1; epoch <= train_config.epochs; ++epoch) {
        maybe_decay_lr(opt, train_config, epoch);
        const auto order = shuffled_indices(train.size(), train_rng);
        for (int at = 0; at < train.size(); at += train_config.batch_size) {
            const int count = std::min(train_config.batch_size, train.size() - at);
            const auto batch = gather(train, order, at, count);
            std::vector<int> labels;
            for (const auto& s : batch) labels.push_back(s.label);
            const Tensor xb = assemble_batch(batch, graph.center_joint);
            Tape::active().clear();
            opt.zero_grad();
            const Tensor logits = result.network.classify(xb, /*training=*/true, train_rng);
            const Tensor loss = ops::cross_entropy(logits, labels);
            backward(loss);
            opt.step();
            Tape::active().clear();
        }
        const EvalResult train_stats = evaluate(result.network, train, graph);
        log_line(train_config.log, epoch, "train", train_stats.loss, train_stats.accuracy);
        const EvalResult eval_stats = eval_set ? evaluate(result.network, *eval_set, graph) : train_stats;
        log_line(train_config.log, epoch, "eval", eval_stats.loss, eval_stats.accuracy);
        result.history.train_loss.push_back(train_stats.loss);
        result.history.train_accuracy.push_back(train_stats.accuracy);
        result.history.eval_loss.push_back(eval_stats.loss);
        result.history.eval_accuracy.push_back(eval_stats.accuracy);
        if (eval_stats.accuracy >= best_accuracy) {
            best_accuracy = eval_stats.accuracy;
            result.best = snapshot(result.network, graph.digest(), epoch);
            result.history.best_epoch = epoch;
            result.history.best_accuracy = eval_stats.accuracy;
        }
        if (!train_config.checkpoint_dir.empty())
            snapshot(result.network, graph.digest(), epoch)
                .save(train_config.checkpoint_dir + "/pretrain_epoch_" + std::to_string(epoch) + ".ckpt");
    }
    restore(result.network, result.best, graph.digest());
    return result;
}

TrainHistory finetune(RaGcnModel& model, const Dataset& train, const Dataset* eval_set,
                      const TrainConfig& train_config) {
    if (train.samples.empty()) throw UsageError("finetune: empty dataset");
    train.validate();
    TrainHistory history;
    if (train_config.epochs == 0) return history;

    SgdOptimizer opt(model.parameters(), train_config.learning_rate, train_config.momentum,
                     train_config.weight_decay);
    Rng train_rng = Rng(train_config.seed).derive("finetune");
    Checkpoint best = snapshot(model, 0);
    double best_accuracy = -1.0;

    for (int epoch = 1; epoch <= train_config.epochs; ++epoch) {
        maybe_decay_lr(opt, train_config, epoch);
        const auto order = shuffled_indices(train.size(), train_rng);
        for (int at = 0; at < train.size(); at += train_config.batch_size) {
            const int count = std::min(train_config.batch_size, train.size() - at);
            const auto batch = gather(train, order, at, count);
            std::vector<int> labels;
            for (const auto& s : batch) labels.push_back(s.label);
            const Tensor xb = assemble_batch(batch, model.graph().center_joint);
            Tape::active().clear();
            opt.zero_grad();
            ForwardResult r = model.forward(xb, labels, /*training=*/true, train_rng);
            const Tensor loss = ops::cross_entropy(r.logits, labels);
            backward(loss);
            opt.step();
            Tape::active().clear();
        }
        const EvalResult train_stats = evaluate(model, train);
        log_line(train_config.log, epoch, "train", train_stats.loss, train_stats.accuracy);
        const EvalResult eval_stats = eval_set ? evaluate(model, *eval_set) : train_stats;
        log_line(train_config.log, epoch, "eval", eval_stats.loss, eval_stats.accuracy);
        history.train_loss.push_back(train_stats.loss);
        history.train_accuracy.push_back(train_stats.accuracy);
        history.eval_loss.push_back(eval_stats.loss);
        history.eval_accuracy.push_back(eval_stats.accuracy);
        if (eval_stats.accuracy >= best_accuracy) {
            best_accuracy = eval_stats.accuracy;
            best = snapshot(model, epoch);
            history.best_epoch = epoch;
            history.best_accuracy = eval_stats.accuracy;
        }
        if (!train_config.checkpoint_dir.empty())
            snapshot(model, epoch).save(train_config.checkpoint_dir + "/finetune_epoch_" +
                                        std::to_string(epoch) + ".ckpt");
    }
    restore(model, best);
    return history;
}

}  // namespace ragcn
