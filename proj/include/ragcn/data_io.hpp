#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ragcn/preprocess.hpp"
#include "ragcn/tensor.hpp"

namespace ragcn {

struct DatasetHeader {
    int channels = 3;
    int frames = 0;
    int joints = 0;
    int bodies = 1;
    int num_classes = 0;
    std::vector<std::string> class_names;
};

struct Dataset {
    DatasetHeader header;
    std::vector<SkeletonSequence> samples;

    void validate() const;
    int size() const { return static_cast<int>(samples.size()); }
};

// Binary dataset container (magic RGSD, little-endian, f32 payloads).
// Byte layout documented in docs/formats.md.
std::vector<std::uint8_t> dataset_to_bytes(const Dataset& dataset);
Dataset dataset_from_bytes(std::span<const std::uint8_t> bytes, const std::string& source_name);
void write_dataset(const Dataset& dataset, const std::string& path);
Dataset read_dataset(const std::string& path);

// Named parameter snapshot (magic RGCK). stream_count == 0 marks a baseline
// (single network) checkpoint; >= 1 marks a multi-stream model.
struct CheckpointRecord {
    std::string name;
    Shape shape;
    std::vector<float> data;
};

struct Checkpoint {
    std::uint32_t version = 1;
    std::uint64_t graph_digest = 0;
    std::uint64_t config_digest = 0;
    std::uint32_t stream_count = 0;
    std::uint32_t epoch = 0;
    std::vector<CheckpointRecord> records;

    std::vector<std::uint8_t> to_bytes() const;
    static Checkpoint from_bytes(std::span<const std::uint8_t> bytes, const std::string& source_name);
    void save(const std::string& path) const;
    static Checkpoint load(const std::string& path);

    const CheckpointRecord& find(const std::string& name) const;
    bool has(const std::string& name) const;
};

// Planted-signal synthetic actions: each class animates its own signal
// joint set with a class-specific sinusoid; every other joint carries an
// attenuated echo of the same motion, so class evidence survives occlusion
// of the signal joints.
struct SyntheticClassSpec {
    std::vector<int> signal_joints;
    int pattern_id = 0;
    double amplitude = 1.0;
};

struct SyntheticActionSpec {
    int num_classes = 4;
    int samples_per_class = 5;
    int joints = 25;
    int frames = 20;
    int bodies = 1;
    double noise_level = 0.05;
    double echo_amplitude = 0.2;  // relative to the class amplitude
    int signal_joints_per_class = 3;
    std::vector<SyntheticClassSpec> classes;  // derived from the fields above when empty

    std::vector<SyntheticClassSpec> resolve_classes() const;  // validates distinctness
};

Dataset generate_synthetic(const SyntheticActionSpec& spec, std::uint64_t seed);

// Reader for the public Kinect v2 .skeleton text format: per frame a body
// count, per body a tracking-info line, a joint count and one line of
// twelve fields per joint (x y z first). Keeps the max_bodies bodies with
// the largest coordinate variance, pads or truncates to max_frames.
SkeletonSequence read_ntu_skeleton(const std::string& path, int max_frames = 300, int max_bodies = 2);
SkeletonSequence parse_ntu_skeleton(std::istream& in, const std::string& source_name, int max_frames = 300,
                                    int max_bodies = 2);

}  // namespace ragcn
