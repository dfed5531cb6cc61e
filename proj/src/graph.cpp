#include "ragcn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <set>
#include <sstream>

#include "ragcn/errors.hpp"

namespace ragcn {

std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t seed) {
    std::uint64_t h = seed;
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

std::uint64_t fnv1a64(const std::string& text, std::uint64_t seed) {
    return fnv1a64(text.data(), text.size(), seed);
}

SkeletonGraph SkeletonGraph::ntu25() {
    SkeletonGraph g;
    g.num_joints = 25;
    g.center_joint = 1;  // middle of the spine
    g.edges = {
        {0, 1},   {1, 20},  {2, 20},  {3, 2},   {4, 20},  {5, 4},   {6, 5},   {7, 6},
        {8, 20},  {9, 8},   {10, 9},  {11, 10}, {12, 0},  {13, 12}, {14, 13}, {15, 14},
        {16, 0},  {17, 16}, {18, 17}, {19, 18}, {21, 7},  {22, 7},  {23, 11}, {24, 11},
    };
    g.joint_names = {
        "spine_base",     "spine_mid",      "neck",          "head",           "left_shoulder",
        "left_elbow",     "left_wrist",     "left_hand",     "right_shoulder", "right_elbow",
        "right_wrist",    "right_hand",     "left_hip",      "left_knee",      "left_ankle",
        "left_foot",      "right_hip",      "right_knee",    "right_ankle",    "right_foot",
        "spine_shoulder", "left_hand_tip",  "left_thumb",    "right_hand_tip", "right_thumb",
    };
    g.parts = {
        {"left_arm", {4, 5, 6, 7, 21, 22}},
        {"right_arm", {8, 9, 10, 11, 23, 24}},
        {"two_hands", {7, 21, 22, 11, 23, 24}},
        {"two_legs", {12, 13, 14, 15, 16, 17, 18, 19}},
        {"trunk", {0, 1, 2, 3, 20}},
    };
    g.validate();
    return g;
}

SkeletonGraph SkeletonGraph::chain(int num_joints) {
    if (num_joints < 2) throw ConfigError("chain graph needs at least 2 joints");
    SkeletonGraph g;
    g.num_joints = num_joints;
    g.center_joint = num_joints / 2;
    for (int i = 0; i + 1 < num_joints; ++i) g.edges.emplace_back(i, i + 1);
    // five contiguous segments; short chains may repeat boundary joints
    for (int p = 0; p < 5; ++p) {
        const int lo = p * num_joints / 5;
        const int hi = std::max(lo + 1, (p + 1) * num_joints / 5);
        std::vector<int> joints;
        for (int j = lo; j < hi && j < num_joints; ++j) joints.push_back(j);
        if (joints.empty()) joints.push_back(num_joints - 1);
        g.parts.emplace_back("segment_" + std::to_string(p + 1), std::move(joints));
    }
    g.validate();
    return g;
}

void SkeletonGraph::validate() const {
    if (num_joints <= 0) throw ConfigError("graph: joint count must be positive");
    if (center_joint < 0 || center_joint >= num_joints)
        throw ConfigError("graph: center joint " + std::to_string(center_joint) + " out of range [0," +
                          std::to_string(num_joints) + ")");
    for (const auto& [a, b] : edges) {
        if (a < 0 || a >= num_joints || b < 0 || b >= num_joints)
            throw ConfigError("graph: edge (" + std::to_string(a) + "," + std::to_string(b) +
                              ") out of range [0," + std::to_string(num_joints) + ")");
        if (a == b) throw ConfigError("graph: self-loop edge on joint " + std::to_string(a));
    }
    if (!joint_names.empty() && static_cast<int>(joint_names.size()) != num_joints)
        throw ConfigError("graph: " + std::to_string(joint_names.size()) + " joint names for " +
                          std::to_string(num_joints) + " joints");
    std::set<std::string> seen_parts;
    for (const auto& [name, joints] : parts) {
        if (!seen_parts.insert(name).second) throw ConfigError("graph: duplicate part name '" + name + "'");
        if (joints.empty()) throw ConfigError("graph: part '" + name + "' has an empty joint set");
        for (int j : joints)
            if (j < 0 || j >= num_joints)
                throw ConfigError("graph: part '" + name + "' references joint " + std::to_string(j) +
                                  " out of range");
    }
    hop_distance();  // throws on disconnected graphs
}

std::vector<std::vector<int>> SkeletonGraph::hop_distance() const {
    const int v = num_joints;
    std::vector<std::vector<int>> neighbors(static_cast<std::size_t>(v));
    for (const auto& [a, b] : edges) {
        neighbors[static_cast<std::size_t>(a)].push_back(b);
        neighbors[static_cast<std::size_t>(b)].push_back(a);
    }
    std::vector<std::vector<int>> dist(static_cast<std::size_t>(v), std::vector<int>(static_cast<std::size_t>(v), -1));
    for (int s = 0; s < v; ++s) {
        auto& row = dist[static_cast<std::size_t>(s)];
        row[static_cast<std::size_t>(s)] = 0;
        std::deque<int> queue{s};
        while (!queue.empty()) {
            const int cur = queue.front();
            queue.pop_front();
            for (int nb : neighbors[static_cast<std::size_t>(cur)]) {
                if (row[static_cast<std::size_t>(nb)] < 0) {
                    row[static_cast<std::size_t>(nb)] = row[static_cast<std::size_t>(cur)] + 1;
                    queue.push_back(nb);
                }
            }
        }
    }
    std::vector<int> unreachable;
    for (int j = 0; j < v; ++j)
        if (dist[0][static_cast<std::size_t>(j)] < 0) unreachable.push_back(j);
    if (!unreachable.empty()) {
        std::ostringstream os;
        os << "graph is disconnected; unreachable joints:";
        for (int j : unreachable) os << ' ' << j;
        throw ConfigError(os.str());
    }
    return dist;
}

const std::vector<int>& SkeletonGraph::part_joints(int part_index) const {
    if (part_index < 1 || part_index > static_cast<int>(parts.size()))
        throw ConfigError("part " + std::to_string(part_index) + " undefined; graph declares " +
                          std::to_string(parts.size()) + " parts");
    return parts[static_cast<std::size_t>(part_index - 1)].second;
}

SkeletonGraph SkeletonGraph::parse(std::istream& in, const std::string& source_name) {
    SkeletonGraph g;
    bool saw_version = false, saw_joints = false;
    std::string line;
    int line_no = 0;
    auto fail = [&](const std::string& what) {
        throw ParseError(source_name + ":" + std::to_string(line_no) + ": " + what);
    };
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key)) continue;
        if (key == "version") {
            int ver = 0;
            if (!(ls >> ver)) fail("expected version number");
            if (ver != 1) fail("unsupported graph file version " + std::to_string(ver));
            saw_version = true;
        } else if (key == "joints") {
            if (!(ls >> g.num_joints)) fail("expected joint count");
            saw_joints = true;
        } else if (key == "center") {
            if (!(ls >> g.center_joint)) fail("expected center joint index");
        } else if (key == "alpha") {
            if (!(ls >> g.alpha)) fail("expected alpha value");
            if (g.alpha <= 0.0) fail("alpha must be positive");
        } else if (key == "edge") {
            int a = 0, b = 0;
            if (!(ls >> a >> b)) fail("expected two joint indices");
            g.edges.emplace_back(a, b);
        } else if (key == "joint") {
            int idx = 0;
            std::string name;
            if (!(ls >> idx >> name)) fail("expected joint index and name");
            if (idx < 0) fail("negative joint index");
            if (static_cast<int>(g.joint_names.size()) <= idx) g.joint_names.resize(static_cast<std::size_t>(idx) + 1);
            g.joint_names[static_cast<std::size_t>(idx)] = name;
        } else if (key == "part") {
            std::string name;
            if (!(ls >> name)) fail("expected part name");
            std::vector<int> joints;
            int j;
            while (ls >> j) joints.push_back(j);
            g.parts.emplace_back(std::move(name), std::move(joints));
        } else {
            fail("unknown directive '" + key + "'");
        }
    }
    if (!saw_version) throw ParseError(source_name + ": missing 'version' directive");
    if (!saw_joints) throw ParseError(source_name + ": missing 'joints' directive");
    try {
        g.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(source_name + ": " + e.what());
    }
    return g;
}

SkeletonGraph SkeletonGraph::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open graph file: " + path);
    return parse(in, path);
}

std::string SkeletonGraph::to_text() const {
    std::ostringstream os;
    os << "version 1\n";
    os << "joints " << num_joints << "\n";
    os << "center " << center_joint << "\n";
    os << "alpha " << alpha << "\n";
    for (std::size_t i = 0; i < joint_names.size(); ++i)
        if (!joint_names[i].empty()) os << "joint " << i << ' ' << joint_names[i] << "\n";
    for (const auto& [a, b] : edges) os << "edge " << a << ' ' << b << "\n";
    for (const auto& [name, joints] : parts) {
        os << "part " << name;
        for (int j : joints) os << ' ' << j;
        os << "\n";
    }
    return os.str();
}

void SkeletonGraph::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write graph file: " + path);
    out << to_text();
    if (!out) throw IoError("failed writing graph file: " + path);
}

std::uint64_t SkeletonGraph::digest() const { return fnv1a64(to_text()); }

NormalizedAdjacencySet NormalizedAdjacencySet::build(const SkeletonGraph& graph, int max_distance) {
    if (max_distance < 0) throw ConfigError("adjacency: max distance must be >= 0");
    graph.validate();
    const int v = graph.num_joints;
    const auto hop = graph.hop_distance();

    NormalizedAdjacencySet set;
    set.num_joints = v;
    set.max_distance = max_distance;
    set.alpha = graph.alpha;
    for (int d = 0; d <= max_distance; ++d) {
        std::vector<double> a(static_cast<std::size_t>(v) * v, 0.0);
        for (int i = 0; i < v; ++i)
            for (int k = 0; k < v; ++k)
                if (hop[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] == d)
                    a[static_cast<std::size_t>(i) * v + k] = 1.0;
        std::vector<double> degree(static_cast<std::size_t>(v), 0.0);
        for (int i = 0; i < v; ++i) {
            double row_sum = 0.0;
            for (int k = 0; k < v; ++k) row_sum += a[static_cast<std::size_t>(i) * v + k];
            degree[static_cast<std::size_t>(i)] = row_sum + graph.alpha;
        }
        for (int i = 0; i < v; ++i)
            for (int k = 0; k < v; ++k)
                a[static_cast<std::size_t>(i) * v + k] /=
                    std::sqrt(degree[static_cast<std::size_t>(i)] * degree[static_cast<std::size_t>(k)]);
        set.a_hat.push_back(Tensor::from_data({v, v}, std::move(a)));
    }
    return set;
}

}  // namespace ragcn
