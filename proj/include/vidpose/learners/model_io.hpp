#pragma once

// Binary model container: magic "VPMD", format version, model kind, then the
// payload. All integers are little-endian; floating values are stored raw.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>

#include "vidpose/core/errors.hpp"
#include "vidpose/learners/forest.hpp"
#include "vidpose/learners/svm.hpp"

namespace vidpose {

static_assert(std::endian::native == std::endian::little, "model files assume a little-endian host");

inline constexpr char kModelMagic[4] = {'V', 'P', 'M', 'D'};
inline constexpr std::uint32_t kModelVersion = 1;

enum class ModelKind : std::uint32_t { Forest = 1, Svm = 2, Detector = 3 };

class BinaryWriter {
public:
    explicit BinaryWriter(std::ostream& out) : out_(out) {}
    template <typename T>
        requires std::is_arithmetic_v<T>
    void put(T v) {
        out_.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
    template <typename T>
    void put_vec(const std::vector<T>& v) {
        put(std::uint64_t(v.size()));
        out_.write(reinterpret_cast<const char*>(v.data()), std::streamsize(v.size() * sizeof(T)));
    }
    void header(ModelKind kind) {
        out_.write(kModelMagic, 4);
        put(kModelVersion);
        put(std::uint32_t(kind));
    }

private:
    std::ostream& out_;
};

class BinaryReader {
public:
    BinaryReader(std::istream& in, std::string name) : in_(in), name_(std::move(name)) {}
    template <typename T>
        requires std::is_arithmetic_v<T>
    T get() {
        T v{};
        in_.read(reinterpret_cast<char*>(&v), sizeof v);
        if (!in_) fail("truncated model file");
        return v;
    }
    template <typename T>
    std::vector<T> get_vec(std::uint64_t max_len = std::uint64_t(1) << 32) {
        const auto n = get<std::uint64_t>();
        if (n > max_len) fail("implausible array length");
        std::vector<T> v(n);
        in_.read(reinterpret_cast<char*>(v.data()), std::streamsize(n * sizeof(T)));
        if (!in_) fail("truncated model file");
        return v;
    }
    void header(ModelKind expected) {
        char magic[4];
        in_.read(magic, 4);
        if (!in_ || std::memcmp(magic, kModelMagic, 4) != 0) fail("not a model file");
        if (get<std::uint32_t>() != kModelVersion) fail("unsupported model version");
        if (get<std::uint32_t>() != std::uint32_t(expected)) fail("unexpected model kind");
    }
    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(name_, 0, msg); }

private:
    std::istream& in_;
    std::string name_;
};

inline void write_forest_payload(BinaryWriter& w, const RandomForest& f) {
    w.put(std::uint32_t(f.layout.windows().size()));
    for (const auto& spec : f.layout.windows()) {
        w.put(std::int32_t(spec.side));
        w.put(std::int32_t(spec.cells));
    }
    w.put(std::int32_t(f.dim));
    for (bool b : f.present) w.put(std::uint8_t(b));
    w.put(std::uint32_t(f.trees.size()));
    for (const auto& t : f.trees) {
        w.put(std::uint64_t(t.nodes.size()));
        for (const auto& n : t.nodes) {
            w.put(n.feature);
            w.put(n.threshold);
            w.put(n.left);
            w.put(n.right);
            w.put(n.leaf);
        }
        w.put_vec(t.leaf_probs);
    }
}

inline RandomForest read_forest_payload(BinaryReader& r) {
    RandomForest f;
    const auto nw = r.get<std::uint32_t>();
    if (nw == 0 || nw > 64) r.fail("bad window count");
    std::vector<WindowSpec> windows;
    for (std::uint32_t i = 0; i < nw; ++i) {
        const int side = r.get<std::int32_t>();
        const int cells = r.get<std::int32_t>();
        windows.push_back({side, cells});
    }
    try {
        f.layout = MultiWindowLayout(windows);
    } catch (const std::invalid_argument&) {
        r.fail("bad window geometry");
    }
    f.dim = r.get<std::int32_t>();
    for (auto& b : f.present) b = r.get<std::uint8_t>() != 0;
    const auto nt = r.get<std::uint32_t>();
    f.trees.resize(nt);
    for (auto& t : f.trees) {
        const auto nn = r.get<std::uint64_t>();
        if (nn > (std::uint64_t(1) << 28)) r.fail("implausible node count");
        t.nodes.resize(nn);
        for (auto& n : t.nodes) {
            n.feature = r.get<std::int32_t>();
            n.threshold = r.get<float>();
            n.left = r.get<std::int32_t>();
            n.right = r.get<std::int32_t>();
            n.leaf = r.get<std::int32_t>();
        }
        t.leaf_probs = r.get_vec<double>();
        const auto n_leaves = std::int64_t(t.leaf_probs.size() / kForestClasses);
        for (const auto& n : t.nodes) {
            const bool leaf = n.feature < 0;
            if (leaf ? (n.leaf < 0 || n.leaf >= n_leaves)
                     : (n.feature >= f.dim || n.left < 0 || n.right < 0 || std::uint64_t(n.left) >= nn ||
                        std::uint64_t(n.right) >= nn))
                r.fail("corrupt tree node");
        }
    }
    return f;
}

inline void write_svm_payload(BinaryWriter& w, const LinearSvm& s) {
    w.put(std::uint32_t(s.space));
    w.put(s.b);
    w.put(std::uint8_t(s.degenerate));
    w.put_vec(s.w);
}

inline LinearSvm read_svm_payload(BinaryReader& r) {
    LinearSvm s;
    const auto space = r.get<std::uint32_t>();
    if (space > 2) r.fail("bad feature space");
    s.space = FeatureSpace(space);
    s.b = r.get<double>();
    s.degenerate = r.get<std::uint8_t>() != 0;
    s.w = r.get_vec<double>();
    return s;
}

inline void save_forest(const std::string& path, const RandomForest& f) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    BinaryWriter w(out);
    w.header(ModelKind::Forest);
    write_forest_payload(w, f);
    if (!out) throw IoError("write failed: " + path);
}

inline RandomForest load_forest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    BinaryReader r(in, path);
    r.header(ModelKind::Forest);
    return read_forest_payload(r);
}

}  // namespace vidpose
