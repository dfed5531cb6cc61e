#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ragcn/data_io.hpp"
#include "ragcn/graph.hpp"
#include "ragcn/model.hpp"
#include "ragcn/preprocess.hpp"
#include "ragcn/rng.hpp"

namespace ragcn {

// Evaluation-time corruption: zero a named body part at every frame, or a
// random block of frames within the first 100.
struct OcclusionSpec {
    enum class Kind { none, spatial, temporal };
    Kind kind = Kind::none;
    int part = 0;          // 1..5, spatial only
    int block_length = 0;  // frames, temporal only
    std::uint64_t seed = 0;

    static OcclusionSpec none();
    static OcclusionSpec spatial(int part, std::uint64_t seed = 0);
    static OcclusionSpec temporal(int block_length, std::uint64_t seed);
    std::string describe(const SkeletonGraph& graph) const;
};

// Zeroes the listed joints at every frame and body. Idempotent.
SkeletonSequence occlude_joints(const SkeletonSequence& sample, std::span<const int> joints);

SkeletonSequence occlude_spatial(const SkeletonSequence& sample, int part, const SkeletonGraph& graph);

struct TemporalWindow {
    int start = 0;
    int length = 0;
};

// Zeroes a block of frames starting uniformly at random within the first
// min(100, valid_frames) frames.
SkeletonSequence occlude_temporal(const SkeletonSequence& sample, int block_length, Rng& rng,
                                  TemporalWindow* window_out = nullptr);

// Applies one occlusion to every sample; per-sample random streams derive
// from OcclusionSpec::seed, so results are reproducible. Windows are
// reported when requested (one per sample; zero-length for non-temporal
// kinds).
Dataset occlude_dataset(const Dataset& dataset, const OcclusionSpec& spec, const SkeletonGraph& graph,
                        std::vector<TemporalWindow>* windows_out = nullptr);

// Accuracy of each model under each spec, plus the difference row between
// the last and the first model (multi-stream gain over the baseline).
struct OcclusionResultTable {
    std::vector<std::string> spec_names;
    std::vector<std::string> model_names;
    std::vector<std::vector<double>> accuracy;  // [model][spec]
    std::vector<double> difference;             // last model minus first, per spec

    std::string to_text(char delimiter = ',') const;
};

OcclusionResultTable run_occlusion_suite(std::span<RaGcnModel*> models,
                                         std::span<const std::string> model_names, const Dataset& dataset,
                                         const SkeletonGraph& graph, std::span<const OcclusionSpec> specs);

}  // namespace ragcn
