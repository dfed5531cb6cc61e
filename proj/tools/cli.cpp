#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ragcn/data_io.hpp"
#include "ragcn/errors.hpp"
#include "ragcn/gradcheck.hpp"
#include "ragcn/graph.hpp"
#include "ragcn/model.hpp"
#include "ragcn/occlusion.hpp"

namespace ragcn::cli {

namespace {

constexpr const char* kToolVersion = "ragcn 1.0.0";

namespace fs = std::filesystem;
using nlohmann::json;

std::string hex64(std::uint64_t value) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << value;
    return os.str();
}

std::uint64_t file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file for hashing: " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return fnv1a64(bytes);
}

// Reproducibility record written next to every command's outputs.
class Manifest {
public:
    Manifest(std::string command, std::uint64_t seed) {
        doc_["tool"] = kToolVersion;
        doc_["command"] = std::move(command);
        doc_["seed"] = seed;
        doc_["config"] = json::object();
        doc_["inputs"] = json::object();
        doc_["outputs"] = json::object();
    }

    template <typename T>
    void config(const std::string& key, const T& value) {
        doc_["config"][key] = value;
    }

    void input(const std::string& path) { doc_["inputs"][path] = hex64(file_digest(path)); }
    void output(const std::string& path) { doc_["outputs"][path] = hex64(file_digest(path)); }
    json& raw() { return doc_; }

    void write(const std::string& path) {
        doc_["config_digest"] = hex64(fnv1a64(doc_["config"].dump()));
        std::ofstream out(path);
        if (!out) throw IoError("cannot write manifest: " + path);
        out << doc_.dump(2) << '\n';
    }

private:
    json doc_;
};

SkeletonGraph resolve_graph(const std::string& spec, int joints) {
    if (spec.empty() || spec == "auto")
        return joints == 25 ? SkeletonGraph::ntu25() : SkeletonGraph::chain(joints);
    if (spec == "ntu25") return SkeletonGraph::ntu25();
    if (spec.rfind("chain:", 0) == 0) return SkeletonGraph::chain(std::stoi(spec.substr(6)));
    return SkeletonGraph::load(spec);
}

void ensure_out_dir(const std::string& dir) {
    if (dir.empty()) return;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());
}

struct NetworkFlags {
    std::string graph = "auto";
    int d_max = 2;
    int window = 5;
    int base_channels = 64;
    double dropout = 0.5;
    bool no_input_norm = false;

    void attach(CLI::App* cmd) {
        cmd->add_option("--graph", graph, "Graph: file path, 'ntu25', 'chain:<V>' or 'auto'");
        cmd->add_option("--dmax", d_max, "Maximum graph distance D_max")->check(CLI::Range(0, 10));
        cmd->add_option("--window", window, "Temporal window size L (odd)");
        cmd->add_option("--base-channels", base_channels, "Width of the first layer block");
        cmd->add_option("--dropout", dropout, "Dropout rate between spatial and temporal conv");
        cmd->add_flag("--no-input-norm", no_input_norm, "Disable the input batch-norm layer");
    }

    StgcnConfig make_config(int joints, int classes) const {
        StgcnConfig c = StgcnConfig::standard(joints, classes, d_max, window, base_channels);
        c.dropout_rate = dropout;
        c.input_norm = !no_input_norm;
        c.validate();
        return c;
    }

    void record(Manifest& m) const {
        m.config("graph", graph);
        m.config("dmax", d_max);
        m.config("window", window);
        m.config("base_channels", base_channels);
        m.config("dropout", dropout);
        m.config("input_norm", !no_input_norm);
    }
};

struct TrainFlags {
    int epochs = 50;
    int batch = 8;
    double lr = 0.05;
    double momentum = 0.9;
    double weight_decay = 1e-4;
    std::vector<int> lr_steps;
    double lr_decay = 0.1;

    void attach(CLI::App* cmd) {
        cmd->add_option("--epochs", epochs, "Training epochs")->check(CLI::NonNegativeNumber);
        cmd->add_option("--batch", batch, "Minibatch size")->check(CLI::PositiveNumber);
        cmd->add_option("--lr", lr, "Learning rate");
        cmd->add_option("--momentum", momentum, "SGD momentum");
        cmd->add_option("--weight-decay", weight_decay, "L2 weight decay");
        cmd->add_option("--lr-steps", lr_steps, "Epochs at which the learning rate decays");
        cmd->add_option("--lr-decay", lr_decay, "Learning-rate decay factor");
    }

    TrainConfig make_config(std::uint64_t seed, const std::string& out_dir) const {
        TrainConfig c;
        c.epochs = epochs;
        c.batch_size = batch;
        c.learning_rate = lr;
        c.momentum = momentum;
        c.weight_decay = weight_decay;
        c.lr_step_epochs = lr_steps;
        c.lr_decay = lr_decay;
        c.seed = seed;
        c.checkpoint_dir = out_dir;
        c.log = &std::cout;
        return c;
    }

    void record(Manifest& m) const {
        m.config("epochs", epochs);
        m.config("batch", batch);
        m.config("lr", lr);
        m.config("momentum", momentum);
        m.config("weight_decay", weight_decay);
        m.config("lr_steps", lr_steps);
        m.config("lr_decay", lr_decay);
    }
};

// Loads either a baseline or a multi-stream checkpoint into a runnable
// model; a baseline becomes the exactly-equivalent single-stream model.
RaGcnModel load_model(const std::string& checkpoint_path, const SkeletonGraph& graph,
                      const StgcnConfig& config) {
    const Checkpoint ckpt = Checkpoint::load(checkpoint_path);
    if (ckpt.stream_count == 0) return RaGcnModel::init_streams(config, graph, ckpt, 1);
    Rng rng(0);
    RaGcnModel model(config, graph, static_cast<int>(ckpt.stream_count), rng);
    restore(model, ckpt);
    return model;
}

int cmd_synth(const std::string& out_path, const std::string& graph_out, int classes, int per_class,
              int joints, int frames, int bodies, double noise, double echo, int signal_joints,
              std::uint64_t seed) {
    SyntheticActionSpec spec;
    spec.num_classes = classes;
    spec.samples_per_class = per_class;
    spec.joints = joints;
    spec.frames = frames;
    spec.bodies = bodies;
    spec.noise_level = noise;
    spec.echo_amplitude = echo;
    spec.signal_joints_per_class = signal_joints;
    const Dataset dataset = generate_synthetic(spec, seed);
    write_dataset(dataset, out_path);

    Manifest manifest("synth", seed);
    manifest.config("classes", classes);
    manifest.config("per_class", per_class);
    manifest.config("joints", joints);
    manifest.config("frames", frames);
    manifest.config("bodies", bodies);
    manifest.config("noise", noise);
    manifest.config("echo", echo);
    manifest.config("signal_joints", signal_joints);
    manifest.output(out_path);
    if (!graph_out.empty()) {
        resolve_graph("auto", joints).save(graph_out);
        manifest.output(graph_out);
    }
    manifest.write(out_path + ".manifest.json");
    std::cout << "wrote " << dataset.size() << " samples to " << out_path << '\n';
    return 0;
}

int cmd_pretrain(const std::string& dataset_path, const std::string& eval_path, const NetworkFlags& net,
                 const TrainFlags& train_flags, std::uint64_t seed, const std::string& out_dir) {
    ensure_out_dir(out_dir);
    const Dataset train_set = read_dataset(dataset_path);
    std::optional<Dataset> eval_set;
    if (!eval_path.empty()) eval_set = read_dataset(eval_path);

    const SkeletonGraph graph = resolve_graph(net.graph, train_set.header.joints);
    const StgcnConfig config = net.make_config(train_set.header.joints, train_set.header.num_classes);
    const TrainConfig train_config = train_flags.make_config(seed, out_dir);

    PretrainResult result =
        pretrain_baseline(train_set, eval_set ? &*eval_set : nullptr, graph, config, train_config);
    const std::string ckpt_path =
        out_dir.empty() ? "baseline.ckpt" : out_dir + "/baseline.ckpt";
    result.best.save(ckpt_path);
    std::cout << "best,eval," << std::fixed << std::setprecision(4) << result.history.best_accuracy
              << ",epoch=" << result.history.best_epoch << '\n';

    Manifest manifest("pretrain", seed);
    net.record(manifest);
    train_flags.record(manifest);
    manifest.input(dataset_path);
    if (!eval_path.empty()) manifest.input(eval_path);
    manifest.output(ckpt_path);
    manifest.raw()["best_epoch"] = result.history.best_epoch;
    manifest.raw()["best_eval_accuracy"] = result.history.best_accuracy;
    manifest.write(out_dir.empty() ? "pretrain.manifest.json" : out_dir + "/manifest.json");
    return 0;
}

int cmd_finetune(const std::string& baseline_path, int streams, const std::string& dataset_path,
                 const std::string& eval_path, const NetworkFlags& net, const TrainFlags& train_flags,
                 std::uint64_t seed, const std::string& out_dir) {
    ensure_out_dir(out_dir);
    const Dataset train_set = read_dataset(dataset_path);
    std::optional<Dataset> eval_set;
    if (!eval_path.empty()) eval_set = read_dataset(eval_path);

    const SkeletonGraph graph = resolve_graph(net.graph, train_set.header.joints);
    const StgcnConfig config = net.make_config(train_set.header.joints, train_set.header.num_classes);
    const Checkpoint baseline = Checkpoint::load(baseline_path);
    RaGcnModel model = RaGcnModel::init_streams(config, graph, baseline, streams);

    const TrainConfig train_config = train_flags.make_config(seed, out_dir);
    const TrainHistory history = finetune(model, train_set, eval_set ? &*eval_set : nullptr, train_config);

    const std::string ckpt_path =
        out_dir.empty() ? "ragcn.ckpt" : out_dir + "/ragcn.ckpt";
    snapshot(model, history.best_epoch).save(ckpt_path);
    std::cout << "best,eval," << std::fixed << std::setprecision(4) << history.best_accuracy
              << ",epoch=" << history.best_epoch << '\n';

    Manifest manifest("finetune", seed);
    manifest.config("streams", streams);
    net.record(manifest);
    train_flags.record(manifest);
    manifest.input(baseline_path);
    manifest.input(dataset_path);
    if (!eval_path.empty()) manifest.input(eval_path);
    manifest.output(ckpt_path);
    manifest.raw()["best_epoch"] = history.best_epoch;
    manifest.raw()["best_eval_accuracy"] = history.best_accuracy;
    manifest.write(out_dir.empty() ? "finetune.manifest.json" : out_dir + "/manifest.json");
    return 0;
}

int cmd_eval(const std::vector<std::string>& checkpoint_paths, const std::string& dataset_path,
             const NetworkFlags& net, const std::vector<int>& occlude_parts,
             const std::vector<int>& occlude_frames, std::uint64_t seed, const std::string& out_dir) {
    ensure_out_dir(out_dir);
    Dataset dataset = read_dataset(dataset_path);
    const SkeletonGraph graph = resolve_graph(net.graph, dataset.header.joints);
    const StgcnConfig config = net.make_config(dataset.header.joints, dataset.header.num_classes);

    Manifest manifest("eval", seed);
    net.record(manifest);
    manifest.config("occlude_part", occlude_parts);
    manifest.config("occlude_frames", occlude_frames);
    for (const auto& path : checkpoint_paths) manifest.input(path);
    manifest.input(dataset_path);

    const bool suite = checkpoint_paths.size() > 1 || occlude_parts.size() + occlude_frames.size() > 1;
    if (!suite) {
        RaGcnModel model = load_model(checkpoint_paths.front(), graph, config);
        OcclusionSpec spec = OcclusionSpec::none();
        if (!occlude_parts.empty() && !occlude_frames.empty())
            throw UsageError("choose either --occlude-part or --occlude-frames, not both");
        if (!occlude_parts.empty()) spec = OcclusionSpec::spatial(occlude_parts.front(), seed);
        if (!occlude_frames.empty()) spec = OcclusionSpec::temporal(occlude_frames.front(), seed);
        if (spec.kind != OcclusionSpec::Kind::none) dataset = occlude_dataset(dataset, spec, graph);

        const EvalResult result = evaluate(model, dataset);
        std::cout << "occlusion," << spec.describe(graph) << '\n';
        std::cout << "loss," << std::fixed << std::setprecision(6) << result.loss << '\n';
        std::cout << "accuracy," << std::fixed << std::setprecision(4) << result.accuracy << '\n';
        manifest.raw()["accuracy"] = result.accuracy;
        manifest.raw()["loss"] = result.loss;
        if (!out_dir.empty()) manifest.write(out_dir + "/manifest.json");
        return 0;
    }

    // multiple checkpoints or specs: the occlusion result table, one row
    // per model, one column per spec, plus the last-vs-first difference row
    std::vector<RaGcnModel> models;
    std::vector<std::string> names;
    for (const auto& path : checkpoint_paths) {
        models.push_back(load_model(path, graph, config));
        const auto slash = path.find_last_of('/');
        names.push_back(slash == std::string::npos ? path : path.substr(slash + 1));
    }
    std::vector<OcclusionSpec> specs{OcclusionSpec::none()};
    for (int part : occlude_parts) specs.push_back(OcclusionSpec::spatial(part, seed));
    for (int frames : occlude_frames) specs.push_back(OcclusionSpec::temporal(frames, seed));

    std::vector<RaGcnModel*> model_ptrs;
    for (auto& m : models) model_ptrs.push_back(&m);
    const OcclusionResultTable table = run_occlusion_suite(model_ptrs, names, dataset, graph, specs);
    std::cout << table.to_text();
    manifest.raw()["table"] = table.to_text();
    if (!out_dir.empty()) {
        std::ofstream results(out_dir + "/results.csv");
        results << table.to_text();
        manifest.write(out_dir + "/manifest.json");
    }
    return 0;
}

int cmd_occlude(const std::string& dataset_path, int part, int frames, std::uint64_t seed,
                const std::string& graph_spec, const std::string& out_path) {
    const Dataset dataset = read_dataset(dataset_path);
    const SkeletonGraph graph = resolve_graph(graph_spec, dataset.header.joints);
    OcclusionSpec spec = OcclusionSpec::none();
    if (part > 0 && frames > 0) throw UsageError("choose either --part or --frames, not both");
    if (part > 0) spec = OcclusionSpec::spatial(part, seed);
    if (frames > 0) spec = OcclusionSpec::temporal(frames, seed);

    std::vector<TemporalWindow> windows;
    const Dataset occluded = occlude_dataset(dataset, spec, graph, &windows);
    write_dataset(occluded, out_path);

    Manifest manifest("occlude", seed);
    manifest.config("part", part);
    manifest.config("frames", frames);
    manifest.config("graph", graph_spec);
    manifest.input(dataset_path);
    manifest.output(out_path);
    manifest.raw()["spec"] = spec.describe(graph);
    if (spec.kind == OcclusionSpec::Kind::spatial) {
        manifest.raw()["joints"] = graph.part_joints(part);
    } else if (spec.kind == OcclusionSpec::Kind::temporal) {
        json applied = json::array();
        for (std::size_t i = 0; i < windows.size(); ++i)
            applied.push_back({{"sample", occluded.samples[i].sample_id},
                               {"start", windows[i].start},
                               {"length", windows[i].length}});
        manifest.raw()["windows"] = applied;
    }
    manifest.write(out_path + ".manifest.json");
    std::cout << "wrote " << occluded.size() << " occluded samples to " << out_path << '\n';
    return 0;
}

int cmd_cam_dump(const std::string& checkpoint_path, const std::string& dataset_path,
                 const NetworkFlags& net, double quantile, std::uint64_t seed,
                 const std::string& out_dir) {
    ensure_out_dir(out_dir);
    const Dataset dataset = read_dataset(dataset_path);
    const SkeletonGraph graph = resolve_graph(net.graph, dataset.header.joints);
    const StgcnConfig config = net.make_config(dataset.header.joints, dataset.header.num_classes);
    RaGcnModel model = load_model(checkpoint_path, graph, config);

    NoGradGuard guard;
    Rng rng(0);
    Manifest manifest("cam-dump", seed);
    net.record(manifest);
    manifest.config("quantile", quantile);
    manifest.input(checkpoint_path);
    manifest.input(dataset_path);

    for (const auto& sample : dataset.samples) {
        const Tensor xb = assemble_batch(std::span<const SkeletonSequence>(&sample, 1), graph.center_joint);
        ForwardResult r = model.forward(xb, {}, /*training=*/false, rng);
        const int t_in = sample.frames();
        const std::string path = out_dir + "/" + sample.sample_id + ".cam.txt";
        std::ofstream out(path);
        if (!out) throw IoError("cannot write " + path);
        out << "# sample " << sample.sample_id << " label " << sample.label << '\n';
        out << "stream,t,joint,cam,mask\n";
        for (int s = 0; s < model.stream_count(); ++s) {
            const auto& trace = r.streams[static_cast<std::size_t>(s)];
            const Tensor cam_full = upsample_map(trace.cam, t_in);
            const auto& cam = cam_full.values();   // rows are bodies here (N=1)
            const auto& mask = trace.mask.values.values();
            const int v = sample.joints();
            // body 0 only; additional bodies follow the same layout
            for (int ti = 0; ti < t_in; ++ti)
                for (int j = 0; j < v; ++j)
                    out << (s + 1) << ',' << ti << ',' << j << ',' << std::setprecision(10)
                        << cam[static_cast<std::size_t>(ti) * v + j] << ','
                        << mask[static_cast<std::size_t>(ti) * v + j] << '\n';
        }
        const auto activated = activated_joints(r.streams.back().cam, quantile);
        out << "# activated locations (stream " << model.stream_count() << ", quantile " << quantile
            << "): " << activated[0].size() << '\n';
    }
    manifest.write(out_dir + "/manifest.json");
    std::cout << "wrote " << dataset.size() << " activation dumps to " << out_dir << '\n';
    return 0;
}

int cmd_gradcheck(int params, std::uint64_t seed, int streams, double tolerance) {
    GradCheckConfig config;
    config.num_params = params;
    config.seed = seed;
    config.streams = streams;
    config.tolerance = tolerance;
    const GradCheckReport report = gradcheck_micro_model(config);
    std::cout << "name,index,analytic,numeric,rel_error\n";
    for (const auto& e : report.entries)
        std::cout << e.name << ',' << e.index << ',' << std::setprecision(10) << e.analytic << ','
                  << e.numeric << ',' << e.rel_error << '\n';
    std::cout << "max_rel_error," << std::setprecision(10) << report.max_rel_error << '\n';
    std::cout << "result," << (report.passed ? "pass" : "fail") << '\n';
    return report.passed ? 0 : 1;
}

}  // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"Richly activated graph convolutional network for skeleton-based action recognition"};
    app.set_version_flag("--version", kToolVersion);
    app.require_subcommand(1);
    app.set_config("--config", "", "Structured config file; command-line flags win");
    app.allow_config_extras(false);

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a planted-signal synthetic dataset");
    std::string synth_out = "synthetic.ds";
    std::string synth_graph_out;
    int synth_classes = 4, synth_per_class = 5, synth_joints = 25, synth_frames = 20, synth_bodies = 1;
    int synth_signal_joints = 3;
    double synth_noise = 0.05, synth_echo = 0.2;
    std::uint64_t synth_seed = 0;
    synth->add_option("--out", synth_out, "Output dataset path");
    synth->add_option("--graph-out", synth_graph_out, "Also write a matching graph definition");
    synth->add_option("--classes", synth_classes, "Number of classes")->check(CLI::PositiveNumber);
    synth->add_option("--per-class", synth_per_class, "Samples per class")->check(CLI::PositiveNumber);
    synth->add_option("--joints", synth_joints, "Joints per skeleton")->check(CLI::PositiveNumber);
    synth->add_option("--frames", synth_frames, "Frames per sequence")->check(CLI::PositiveNumber);
    synth->add_option("--bodies", synth_bodies, "Bodies per sample")->check(CLI::PositiveNumber);
    synth->add_option("--noise", synth_noise, "Gaussian noise level");
    synth->add_option("--echo", synth_echo, "Echo amplitude on non-signal joints");
    synth->add_option("--signal-joints", synth_signal_joints, "Signal joints per class");
    synth->add_option("--seed", synth_seed, "Generator seed");

    // pretrain
    auto* pretrain = app.add_subcommand("pretrain", "Train the baseline network");
    std::string pre_dataset, pre_eval, pre_out;
    std::uint64_t pre_seed = 0;
    NetworkFlags pre_net;
    TrainFlags pre_train;
    pretrain->add_option("--dataset", pre_dataset, "Training dataset")->required();
    pretrain->add_option("--eval", pre_eval, "Evaluation dataset");
    pretrain->add_option("--seed", pre_seed, "Training seed");
    pretrain->add_option("--out", pre_out, "Output directory");
    pre_net.attach(pretrain);
    pre_train.attach(pretrain);

    // finetune
    auto* fine = app.add_subcommand("finetune", "Fine-tune a multi-stream model from a baseline");
    std::string fine_baseline, fine_dataset, fine_eval, fine_out;
    int fine_streams = 2;
    std::uint64_t fine_seed = 0;
    NetworkFlags fine_net;
    TrainFlags fine_train;
    fine->add_option("--baseline", fine_baseline, "Baseline checkpoint")->required();
    fine->add_option("--streams", fine_streams, "Stream count")->check(CLI::Range(1, 3));
    fine->add_option("--dataset", fine_dataset, "Training dataset")->required();
    fine->add_option("--eval", fine_eval, "Evaluation dataset");
    fine->add_option("--seed", fine_seed, "Training seed");
    fine->add_option("--out", fine_out, "Output directory");
    fine_net.attach(fine);
    fine_train.attach(fine);

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate checkpoints, optionally under occlusion");
    std::vector<std::string> eval_ckpts;
    std::string eval_dataset, eval_out;
    std::vector<int> eval_parts, eval_frames;
    std::uint64_t eval_seed = 0;
    NetworkFlags eval_net;
    eval_cmd->add_option("--checkpoint", eval_ckpts, "Checkpoint(s) to evaluate; several give a result table")
        ->required();
    eval_cmd->add_option("--dataset", eval_dataset, "Evaluation dataset")->required();
    eval_cmd->add_option("--occlude-part", eval_parts, "Spatial occlusion part(s) (1..5)")
        ->check(CLI::Range(1, 5));
    eval_cmd->add_option("--occlude-frames", eval_frames, "Temporal occlusion block length(s)");
    eval_cmd->add_option("--seed", eval_seed, "Occlusion seed");
    eval_cmd->add_option("--out", eval_out, "Output directory for results and manifest");
    eval_net.attach(eval_cmd);

    // occlude
    auto* occ = app.add_subcommand("occlude", "Write an occluded copy of a dataset");
    std::string occ_dataset, occ_out = "occluded.ds", occ_graph = "auto";
    int occ_part = 0, occ_frames = 0;
    std::uint64_t occ_seed = 0;
    occ->add_option("--dataset", occ_dataset, "Input dataset")->required();
    occ->add_option("--out", occ_out, "Output dataset path");
    occ->add_option("--graph", occ_graph, "Graph definition for part lookups");
    occ->add_option("--occlude-part,--part", occ_part, "Spatial part (1..5)")->check(CLI::Range(0, 5));
    occ->add_option("--occlude-frames,--frames", occ_frames, "Temporal block length");
    occ->add_option("--seed", occ_seed, "Occlusion seed");

    // cam-dump
    auto* cam = app.add_subcommand("cam-dump", "Dump per-sample activation maps and masks");
    std::string cam_ckpt, cam_dataset, cam_out = "cam_dump";
    double cam_quantile = 0.9;
    std::uint64_t cam_seed = 0;
    NetworkFlags cam_net;
    cam->add_option("--checkpoint", cam_ckpt, "Checkpoint")->required();
    cam->add_option("--dataset", cam_dataset, "Dataset")->required();
    cam->add_option("--out", cam_out, "Output directory");
    cam->add_option("--quantile", cam_quantile, "Activation threshold quantile");
    cam->add_option("--seed", cam_seed, "Seed (recorded in the manifest)");
    cam_net.attach(cam);

    // gradcheck
    auto* grad = app.add_subcommand("gradcheck", "Finite-difference gradient verification");
    int grad_params = 20, grad_streams = 2;
    std::uint64_t grad_seed = 1;
    double grad_tolerance = 1e-3;
    grad->add_option("--params", grad_params, "Parameters to probe")->check(CLI::PositiveNumber);
    grad->add_option("--seed", grad_seed, "Sampling seed");
    grad->add_option("--streams", grad_streams, "Streams in the micro model")->check(CLI::Range(1, 3));
    grad->add_option("--tolerance", grad_tolerance, "Maximum relative error");

    std::vector<std::string> argv_order(args.rbegin(), args.rend());
    try {
        app.parse(argv_order);
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::CallForVersion&) {
        std::cout << kToolVersion << '\n';
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: usage: " << e.what() << '\n';
        return 2;
    }

    try {
        if (synth->parsed())
            return cmd_synth(synth_out, synth_graph_out, synth_classes, synth_per_class, synth_joints,
                             synth_frames, synth_bodies, synth_noise, synth_echo, synth_signal_joints,
                             synth_seed);
        if (pretrain->parsed())
            return cmd_pretrain(pre_dataset, pre_eval, pre_net, pre_train, pre_seed, pre_out);
        if (fine->parsed())
            return cmd_finetune(fine_baseline, fine_streams, fine_dataset, fine_eval, fine_net, fine_train,
                                fine_seed, fine_out);
        if (eval_cmd->parsed())
            return cmd_eval(eval_ckpts, eval_dataset, eval_net, eval_parts, eval_frames, eval_seed, eval_out);
        if (occ->parsed()) return cmd_occlude(occ_dataset, occ_part, occ_frames, occ_seed, occ_graph, occ_out);
        if (cam->parsed())
            return cmd_cam_dump(cam_ckpt, cam_dataset, cam_net, cam_quantile, cam_seed, cam_out);
        if (grad->parsed()) return cmd_gradcheck(grad_params, grad_seed, grad_streams, grad_tolerance);
        std::cerr << "error: usage: no subcommand given\n";
        return 2;
    } catch (const UsageError& e) {
        std::cerr << "error: usage: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.category() << ": " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace ragcn::cli
