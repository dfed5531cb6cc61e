#include "ragcn/data_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "ragcn/errors.hpp"
#include "ragcn/rng.hpp"

namespace ragcn {

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big,
              "mixed-endian platforms are not supported");

class ByteWriter {
public:
    explicit ByteWriter(std::vector<std::uint8_t>& out) : out_(out) {}

    template <typename T>
    void put(T value) {
        static_assert(std::is_trivially_copyable_v<T>);
        std::uint8_t raw[sizeof(T)];
        std::memcpy(raw, &value, sizeof(T));
        if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
        out_.insert(out_.end(), raw, raw + sizeof(T));
    }

    void put_string(const std::string& s) {
        if (s.size() > 0xffff) throw IoError("string field too long: " + std::to_string(s.size()));
        put<std::uint16_t>(static_cast<std::uint16_t>(s.size()));
        out_.insert(out_.end(), s.begin(), s.end());
    }

private:
    std::vector<std::uint8_t>& out_;
};

class ByteReader {
public:
    ByteReader(std::span<const std::uint8_t> bytes, std::string source)
        : bytes_(bytes), source_(std::move(source)) {}

    template <typename T>
    T get() {
        static_assert(std::is_trivially_copyable_v<T>);
        if (pos_ + sizeof(T) > bytes_.size())
            throw ParseError(source_ + ": truncated at byte " + std::to_string(pos_) + " (need " +
                             std::to_string(sizeof(T)) + " more)");
        std::uint8_t raw[sizeof(T)];
        std::memcpy(raw, bytes_.data() + pos_, sizeof(T));
        if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
        pos_ += sizeof(T);
        T value;
        std::memcpy(&value, raw, sizeof(T));
        return value;
    }

    std::string get_string() {
        const auto len = get<std::uint16_t>();
        if (pos_ + len > bytes_.size())
            throw ParseError(source_ + ": truncated string at byte " + std::to_string(pos_));
        std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), len);
        pos_ += len;
        return s;
    }

    bool exhausted() const { return pos_ == bytes_.size(); }
    std::size_t position() const { return pos_; }
    const std::string& source() const { return source_; }

private:
    std::span<const std::uint8_t> bytes_;
    std::string source_;
    std::size_t pos_ = 0;
};

constexpr std::uint32_t kDatasetMagic = 0x44534752;     // "RGSD" little-endian
constexpr std::uint32_t kCheckpointMagic = 0x4b434752;  // "RGCK" little-endian

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return bytes;
}

void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write file: " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing file: " + path);
}

}  // namespace

void Dataset::validate() const {
    if (header.channels != 3) throw ConfigError("dataset: channel count must be 3");
    if (header.frames <= 0 || header.joints <= 0 || header.bodies <= 0)
        throw ConfigError("dataset: frames, joints and bodies must be positive");
    if (header.num_classes <= 0) throw ConfigError("dataset: class count must be positive");
    if (!header.class_names.empty() && static_cast<int>(header.class_names.size()) != header.num_classes)
        throw ConfigError("dataset: class name count does not match class count");
    const Shape expected{header.channels, header.frames, header.joints, header.bodies};
    for (const auto& s : samples) {
        s.check();
        if (s.data.shape() != expected)
            throw ConfigError("dataset: sample '" + s.sample_id + "' has shape " + shape_str(s.data.shape()) +
                              ", header declares " + shape_str(expected));
        if (s.label < 0 || s.label >= header.num_classes)
            throw ConfigError("dataset: sample '" + s.sample_id + "' label " + std::to_string(s.label) +
                              " out of range");
    }
}

std::vector<std::uint8_t> dataset_to_bytes(const Dataset& dataset) {
    dataset.validate();
    std::vector<std::uint8_t> bytes;
    ByteWriter w(bytes);
    w.put<std::uint32_t>(kDatasetMagic);
    w.put<std::uint32_t>(1);  // version
    w.put<std::int32_t>(dataset.header.channels);
    w.put<std::int32_t>(dataset.header.frames);
    w.put<std::int32_t>(dataset.header.joints);
    w.put<std::int32_t>(dataset.header.bodies);
    w.put<std::int32_t>(dataset.header.num_classes);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(dataset.header.class_names.size()));
    for (const auto& name : dataset.header.class_names) w.put_string(name);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(dataset.samples.size()));
    for (const auto& s : dataset.samples) {
        w.put_string(s.sample_id);
        w.put<std::int32_t>(s.label);
        w.put<std::int32_t>(s.valid_frames);
        for (double v : s.data.values()) w.put<float>(static_cast<float>(v));
    }
    return bytes;
}

Dataset dataset_from_bytes(std::span<const std::uint8_t> bytes, const std::string& source_name) {
    ByteReader r(bytes, source_name);
    if (r.get<std::uint32_t>() != kDatasetMagic)
        throw ParseError(source_name + ": not a dataset file (bad magic)");
    const auto version = r.get<std::uint32_t>();
    if (version != 1)
        throw ParseError(source_name + ": unsupported dataset version " + std::to_string(version));
    Dataset d;
    d.header.channels = r.get<std::int32_t>();
    d.header.frames = r.get<std::int32_t>();
    d.header.joints = r.get<std::int32_t>();
    d.header.bodies = r.get<std::int32_t>();
    d.header.num_classes = r.get<std::int32_t>();
    const auto name_count = r.get<std::uint32_t>();
    for (std::uint32_t i = 0; i < name_count; ++i) d.header.class_names.push_back(r.get_string());
    const auto sample_count = r.get<std::uint32_t>();
    const std::size_t block = static_cast<std::size_t>(d.header.channels) * d.header.frames *
                              d.header.joints * d.header.bodies;
    for (std::uint32_t i = 0; i < sample_count; ++i) {
        SkeletonSequence s;
        s.sample_id = r.get_string();
        s.label = r.get<std::int32_t>();
        s.valid_frames = r.get<std::int32_t>();
        std::vector<double> values(block);
        for (auto& v : values) v = static_cast<double>(r.get<float>());
        s.data = Tensor::from_data({d.header.channels, d.header.frames, d.header.joints, d.header.bodies},
                                   std::move(values));
        d.samples.push_back(std::move(s));
    }
    if (!r.exhausted())
        throw ParseError(source_name + ": " + std::to_string(bytes.size() - r.position()) +
                         " trailing bytes after last sample");
    d.validate();
    return d;
}

void write_dataset(const Dataset& dataset, const std::string& path) {
    write_file_bytes(path, dataset_to_bytes(dataset));
}

Dataset read_dataset(const std::string& path) { return dataset_from_bytes(read_file_bytes(path), path); }

std::vector<std::uint8_t> Checkpoint::to_bytes() const {
    std::vector<std::uint8_t> bytes;
    ByteWriter w(bytes);
    w.put<std::uint32_t>(kCheckpointMagic);
    w.put<std::uint32_t>(version);
    w.put<std::uint64_t>(graph_digest);
    w.put<std::uint64_t>(config_digest);
    w.put<std::uint32_t>(stream_count);
    w.put<std::uint32_t>(epoch);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(records.size()));
    for (const auto& rec : records) {
        w.put_string(rec.name);
        w.put<std::uint8_t>(static_cast<std::uint8_t>(rec.shape.size()));
        std::int64_t n = 1;
        for (int d : rec.shape) {
            w.put<std::int32_t>(d);
            n *= d;
        }
        if (n != static_cast<std::int64_t>(rec.data.size()))
            throw IoError("checkpoint record '" + rec.name + "': shape " + shape_str(rec.shape) +
                          " does not match " + std::to_string(rec.data.size()) + " values");
        for (float v : rec.data) w.put<float>(v);
    }
    return bytes;
}

Checkpoint Checkpoint::from_bytes(std::span<const std::uint8_t> bytes, const std::string& source_name) {
    ByteReader r(bytes, source_name);
    if (r.get<std::uint32_t>() != kCheckpointMagic)
        throw ParseError(source_name + ": not a checkpoint file (bad magic)");
    Checkpoint c;
    c.version = r.get<std::uint32_t>();
    if (c.version != 1)
        throw ParseError(source_name + ": unsupported checkpoint version " + std::to_string(c.version));
    c.graph_digest = r.get<std::uint64_t>();
    c.config_digest = r.get<std::uint64_t>();
    c.stream_count = r.get<std::uint32_t>();
    c.epoch = r.get<std::uint32_t>();
    const auto record_count = r.get<std::uint32_t>();
    std::set<std::string> seen;
    for (std::uint32_t i = 0; i < record_count; ++i) {
        CheckpointRecord rec;
        rec.name = r.get_string();
        if (!seen.insert(rec.name).second)
            throw ParseError(source_name + ": duplicate parameter record '" + rec.name + "'");
        const auto ndim = r.get<std::uint8_t>();
        std::int64_t n = 1;
        for (std::uint8_t d = 0; d < ndim; ++d) {
            rec.shape.push_back(r.get<std::int32_t>());
            if (rec.shape.back() <= 0)
                throw ParseError(source_name + ": record '" + rec.name + "' has non-positive extent");
            n *= rec.shape.back();
        }
        rec.data.resize(static_cast<std::size_t>(n));
        for (auto& v : rec.data) v = r.get<float>();
        c.records.push_back(std::move(rec));
    }
    if (!r.exhausted())
        throw ParseError(source_name + ": " + std::to_string(bytes.size() - r.position()) +
                         " trailing bytes after last record");
    return c;
}

void Checkpoint::save(const std::string& path) const { write_file_bytes(path, to_bytes()); }

Checkpoint Checkpoint::load(const std::string& path) { return from_bytes(read_file_bytes(path), path); }

const CheckpointRecord& Checkpoint::find(const std::string& name) const {
    for (const auto& rec : records)
        if (rec.name == name) return rec;
    throw ConfigError("checkpoint is missing parameter record '" + name + "'");
}

bool Checkpoint::has(const std::string& name) const {
    for (const auto& rec : records)
        if (rec.name == name) return true;
    return false;
}

std::vector<SyntheticClassSpec> SyntheticActionSpec::resolve_classes() const {
    if (num_classes <= 0) throw ConfigError("synthetic spec: class count must be positive");
    if (samples_per_class <= 0) throw ConfigError("synthetic spec: samples per class must be positive");
    if (joints <= 0 || frames <= 0 || bodies <= 0)
        throw ConfigError("synthetic spec: joints, frames and bodies must be positive");
    if (noise_level < 0.0) throw ConfigError("synthetic spec: noise level must be >= 0");
    if (echo_amplitude < 0.0 || echo_amplitude >= 1.0)
        throw ConfigError("synthetic spec: echo amplitude must be in [0,1)");

    std::vector<SyntheticClassSpec> resolved = classes;
    if (resolved.empty()) {
        if (signal_joints_per_class <= 0)
            throw ConfigError("synthetic spec: signal joints per class must be positive");
        for (int c = 0; c < num_classes; ++c) {
            SyntheticClassSpec cls;
            for (int k = 0; k < signal_joints_per_class; ++k)
                cls.signal_joints.push_back((c * signal_joints_per_class + k) % joints);
            cls.pattern_id = c;
            cls.amplitude = 1.0;
            resolved.push_back(std::move(cls));
        }
    }
    if (static_cast<int>(resolved.size()) != num_classes)
        throw ConfigError("synthetic spec: " + std::to_string(resolved.size()) + " class specs for " +
                          std::to_string(num_classes) + " classes");
    std::set<std::pair<std::vector<int>, int>> signatures;
    for (const auto& cls : resolved) {
        if (cls.signal_joints.empty()) throw ConfigError("synthetic spec: class with empty signal joint set");
        for (int j : cls.signal_joints)
            if (j < 0 || j >= joints)
                throw ConfigError("synthetic spec: signal joint " + std::to_string(j) + " out of range");
        std::vector<int> sorted = cls.signal_joints;
        std::sort(sorted.begin(), sorted.end());
        if (!signatures.insert({sorted, cls.pattern_id}).second)
            throw ConfigError("synthetic spec: duplicate (signal joint set, pattern) signature");
    }
    return resolved;
}

namespace {

// Per-pattern motion direction; cycles through axes and diagonals.
void pattern_direction(int pattern_id, double dir[3]) {
    static const double table[6][3] = {
        {1.0, 0.0, 0.0}, {0.0, 1.0, 0.0},  {0.0, 0.0, 1.0},
        {0.7, 0.7, 0.0}, {0.0, 0.7, 0.7},  {0.7, 0.0, 0.7},
    };
    const auto& d = table[pattern_id % 6];
    dir[0] = d[0];
    dir[1] = d[1];
    dir[2] = d[2];
}

double base_coordinate(int joint, int channel) {
    // fixed resting pose, distinct per joint, kept small so that zeroing a
    // joint (occlusion) is a plausible rather than extreme configuration
    switch (channel) {
        case 0: return 0.02 * joint;
        case 1: return 0.03 * ((joint * 7) % 13);
        default: return 0.02 * ((joint * 3) % 11);
    }
}

// deterministic per-(class, joint) value in [0,1]
double class_joint_hash01(int cls, int joint) {
    std::uint64_t z = (static_cast<std::uint64_t>(cls) << 32) ^ static_cast<std::uint64_t>(joint) ^
                      0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    z ^= z >> 31;
    return static_cast<double>(z >> 11) * 0x1.0p-53;
}

}  // namespace

Dataset generate_synthetic(const SyntheticActionSpec& spec, std::uint64_t seed) {
    const auto classes = spec.resolve_classes();
    Dataset d;
    d.header.channels = 3;
    d.header.frames = spec.frames;
    d.header.joints = spec.joints;
    d.header.bodies = spec.bodies;
    d.header.num_classes = spec.num_classes;
    for (int c = 0; c < spec.num_classes; ++c) d.header.class_names.push_back("action_" + std::to_string(c));

    const Rng root(seed);
    const int t_total = spec.frames, v = spec.joints, m = spec.bodies;
    for (int c = 0; c < spec.num_classes; ++c) {
        const auto& cls = classes[static_cast<std::size_t>(c)];
        std::vector<bool> is_signal(static_cast<std::size_t>(v), false);
        for (int j : cls.signal_joints) is_signal[static_cast<std::size_t>(j)] = true;
        double dir[3];
        pattern_direction(cls.pattern_id, dir);
        const double freq = 1.0 + static_cast<double>(cls.pattern_id % 4);

        // within a class the signal joints are graded: one main joint plus
        // progressively weaker secondaries, with staggered phases. Every
        // other joint echoes the motion with a class-specific amplitude
        // profile, so class evidence survives occlusion of the signal set.
        std::vector<double> joint_gain(static_cast<std::size_t>(v), spec.echo_amplitude);
        std::vector<double> joint_phase(static_cast<std::size_t>(v), 0.0);
        for (int j = 0; j < v; ++j)
            joint_gain[static_cast<std::size_t>(j)] =
                spec.echo_amplitude * (0.5 + 0.5 * class_joint_hash01(c, j));
        for (std::size_t k = 0; k < cls.signal_joints.size(); ++k) {
            const auto j = static_cast<std::size_t>(cls.signal_joints[k]);
            joint_gain[j] = 1.0 / (1.0 + 0.45 * static_cast<double>(k));
            joint_phase[j] =
                2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(cls.signal_joints.size());
        }

        for (int s = 0; s < spec.samples_per_class; ++s) {
            Rng rng = root.derive(static_cast<std::uint64_t>(c) * 1000003ull + static_cast<std::uint64_t>(s));
            const int valid = std::max(1, t_total - static_cast<int>(rng.uniform_int(
                                               static_cast<std::uint64_t>(t_total / 5 + 1))));
            const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
            // the motion peaks somewhere in the middle of the sample
            const double peak = rng.uniform(0.25, 0.75);
            double offset[3];
            for (double& o : offset) o = 0.1 * rng.normal();

            std::vector<double> data(static_cast<std::size_t>(3) * t_total * v * m, 0.0);
            auto at = [&](int ch, int t, int j, int b) -> double& {
                return data[(((static_cast<std::size_t>(ch) * t_total + t) * v + j) * m) +
                            static_cast<std::size_t>(b)];
            };
            for (int b = 0; b < m; ++b) {
                const double body_scale = b == 0 ? 1.0 : 0.5;
                for (int t = 0; t < valid; ++t) {
                    // a burst envelope around the sample's peak on top of a
                    // floor that keeps evidence in every frame
                    const double rel = (t + 0.5) / valid - peak;
                    const double envelope = 0.35 + 0.65 * std::exp(-(rel * rel) / (2.0 * 0.18 * 0.18));
                    const double angle =
                        2.0 * std::numbers::pi * freq * static_cast<double>(t) / t_total + phase;
                    for (int j = 0; j < v; ++j) {
                        const double a = cls.amplitude * joint_gain[static_cast<std::size_t>(j)];
                        const double wave =
                            envelope * std::sin(angle + joint_phase[static_cast<std::size_t>(j)]);
                        for (int ch = 0; ch < 3; ++ch) {
                            at(ch, t, j, b) = base_coordinate(j, ch) + offset[ch] +
                                              body_scale * a * wave * dir[ch] +
                                              spec.noise_level * rng.normal();
                        }
                    }
                }
            }
            SkeletonSequence sample;
            sample.data = Tensor::from_data({3, t_total, v, m}, std::move(data));
            sample.valid_frames = valid;
            sample.label = c;
            sample.sample_id = "c" + std::to_string(c) + "_s" + std::to_string(s);
            d.samples.push_back(std::move(sample));
        }
    }
    d.validate();
    return d;
}

SkeletonSequence parse_ntu_skeleton(std::istream& in, const std::string& source_name, int max_frames,
                                    int max_bodies) {
    if (max_frames <= 0) throw ConfigError("read_ntu_skeleton: max_frames must be positive");
    int line_no = 0;
    std::string line;
    auto next_line = [&](const char* what) -> std::istringstream {
        while (std::getline(in, line)) {
            ++line_no;
            if (line.find_first_not_of(" \t\r\n") != std::string::npos) return std::istringstream(line);
        }
        throw ParseError(source_name + ":" + std::to_string(line_no) + ": unexpected end of file, expected " +
                         what);
    };

    auto head = next_line("frame count");
    int frame_count = 0;
    if (!(head >> frame_count)) throw ParseError(source_name + ":1: expected frame count");
    if (frame_count <= 0)
        throw InputError(source_name + ": declares " + std::to_string(frame_count) + " frames");

    struct BodyTrack {
        std::vector<double> coords;  // [T,V,3], zero where absent
        int joint_count = 0;
    };
    std::map<std::string, BodyTrack> bodies;
    std::vector<std::string> body_order;
    int joints_global = 0;

    for (int f = 0; f < frame_count; ++f) {
        auto bc_line = next_line("body count");
        int body_count = 0;
        if (!(bc_line >> body_count) || body_count < 0)
            throw ParseError(source_name + ":" + std::to_string(line_no) + ": expected body count");
        for (int b = 0; b < body_count; ++b) {
            auto info = next_line("body info");
            std::string body_id;
            if (!(info >> body_id))
                throw ParseError(source_name + ":" + std::to_string(line_no) + ": expected body id");
            auto jc_line = next_line("joint count");
            int joint_count = 0;
            if (!(jc_line >> joint_count) || joint_count <= 0)
                throw ParseError(source_name + ":" + std::to_string(line_no) + ": expected joint count");
            if (joints_global == 0) joints_global = joint_count;
            if (joint_count != joints_global)
                throw ParseError(source_name + ":" + std::to_string(line_no) + ": joint count " +
                                 std::to_string(joint_count) + " differs from earlier " +
                                 std::to_string(joints_global));
            auto [it, inserted] = bodies.try_emplace(body_id);
            if (inserted) {
                it->second.coords.assign(
                    static_cast<std::size_t>(frame_count) * joint_count * 3, 0.0);
                it->second.joint_count = joint_count;
                body_order.push_back(body_id);
            }
            for (int j = 0; j < joint_count; ++j) {
                auto joint_line = next_line("joint coordinates");
                double x, y, z;
                if (!(joint_line >> x >> y >> z))
                    throw ParseError(source_name + ":" + std::to_string(line_no) +
                                     ": expected at least 3 joint coordinates");
                const std::size_t off = (static_cast<std::size_t>(f) * joint_count + j) * 3;
                it->second.coords[off] = x;
                it->second.coords[off + 1] = y;
                it->second.coords[off + 2] = z;
            }
        }
    }
    if (bodies.empty()) throw InputError(source_name + ": contains no tracked bodies");

    // rank bodies by coordinate variance and keep the top max_bodies
    std::vector<std::pair<double, std::string>> ranked;
    for (const auto& id : body_order) {
        const auto& coords = bodies[id].coords;
        double mean = 0.0;
        for (double c : coords) mean += c;
        mean /= static_cast<double>(coords.size());
        double var = 0.0;
        for (double c : coords) var += (c - mean) * (c - mean);
        var /= static_cast<double>(coords.size());
        ranked.emplace_back(var, id);
    }
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    const int kept = std::min<int>(max_bodies, static_cast<int>(ranked.size()));

    const int t_out = max_frames;
    const int t_copy = std::min(frame_count, max_frames);
    const int v = joints_global;
    std::vector<double> data(static_cast<std::size_t>(3) * t_out * v * max_bodies, 0.0);
    for (int b = 0; b < kept; ++b) {
        const auto& coords = bodies[ranked[static_cast<std::size_t>(b)].second].coords;
        for (int t = 0; t < t_copy; ++t)
            for (int j = 0; j < v; ++j) {
                const std::size_t src = (static_cast<std::size_t>(t) * v + j) * 3;
                for (int ch = 0; ch < 3; ++ch)
                    data[(((static_cast<std::size_t>(ch) * t_out + t) * v + j) * max_bodies) +
                         static_cast<std::size_t>(b)] = coords[src + static_cast<std::size_t>(ch)];
            }
    }

    SkeletonSequence s;
    s.data = Tensor::from_data({3, t_out, v, max_bodies}, std::move(data));
    s.valid_frames = t_copy;
    s.sample_id = source_name;
    // NTU file names encode the action class as Annn (1-based)
    const auto pos = source_name.rfind('A');
    if (pos != std::string::npos && pos + 3 < source_name.size()) {
        int cls = 0;
        bool ok = true;
        for (int k = 1; k <= 3; ++k) {
            const char ch = source_name[pos + static_cast<std::size_t>(k)];
            if (ch < '0' || ch > '9') {
                ok = false;
                break;
            }
            cls = cls * 10 + (ch - '0');
        }
        if (ok) s.label = cls - 1;
    }
    return s;
}

SkeletonSequence read_ntu_skeleton(const std::string& path, int max_frames, int max_bodies) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open skeleton file: " + path);
    return parse_ntu_skeleton(in, path, max_frames, max_bodies);
}

}  // namespace ragcn
