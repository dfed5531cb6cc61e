#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "ragcn/tensor.hpp"

namespace ragcn {

// Skeleton joint connectivity plus the metadata the pipeline needs: the
// center joint for relative coordinates and named body parts for occlusion.
struct SkeletonGraph {
    int num_joints = 0;
    int center_joint = 0;
    double alpha = 1e-4;
    std::vector<std::pair<int, int>> edges;          // undirected, 0-based
    std::vector<std::string> joint_names;            // optional; size V when present
    std::vector<std::pair<std::string, std::vector<int>>> parts;

    // Built-in 25-joint Kinect v2 skeleton with the standard five parts
    // (left arm, right arm, two hands, two legs, trunk).
    static SkeletonGraph ntu25();
    // Path graph 0-1-...-(V-1) with five contiguous parts; used for
    // synthetic skeletons of arbitrary size.
    static SkeletonGraph chain(int num_joints);

    static SkeletonGraph parse(std::istream& in, const std::string& source_name);
    static SkeletonGraph load(const std::string& path);
    std::string to_text() const;
    void save(const std::string& path) const;

    void validate() const;

    // All-pairs hop distance by breadth-first search. Throws ConfigError
    // naming the unreachable joints when the graph is disconnected.
    std::vector<std::vector<int>> hop_distance() const;

    // 1-based part lookup (part 1 is parts[0]).
    const std::vector<int>& part_joints(int part_index) const;

    std::uint64_t digest() const;
};

// Dense normalized adjacency per hop distance d = 0..max_distance:
// A_hat_d = Lambda_d^{-1/2} A_d Lambda_d^{-1/2} with
// Lambda_d^{ii} = sum_k A_d^{ik} + alpha. A_0 is the identity partition.
struct NormalizedAdjacencySet {
    int num_joints = 0;
    int max_distance = 0;
    double alpha = 0.0;
    std::vector<Tensor> a_hat;  // untracked [V,V] tensors

    static NormalizedAdjacencySet build(const SkeletonGraph& graph, int max_distance);
};

std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t seed = 0xcbf29ce484222325ull);
std::uint64_t fnv1a64(const std::string& text, std::uint64_t seed = 0xcbf29ce484222325ull);

}  // namespace ragcn
