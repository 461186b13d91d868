#pragma once

// Pairwise flow cache for a frame sequence, with an optional on-disk store.
//
// Disk layout per frame pair: 16-byte header (magic "VPFL", width, height,
// direction as little-endian uint32) followed by width*height interleaved
// little-endian float32 (u, v) pairs in row-major order.

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <string>

#include "vidpose/core/errors.hpp"
#include "vidpose/flow/optical_flow.hpp"
#include "vidpose/util/parallel.hpp"

namespace vidpose {

static_assert(std::endian::native == std::endian::little, "flow files assume a little-endian host");

inline constexpr char kFlowMagic[4] = {'V', 'P', 'F', 'L'};

inline void write_flow(std::ostream& out, const FlowField& f) {
    const std::uint32_t hdr[3] = {std::uint32_t(f.width), std::uint32_t(f.height), std::uint32_t(f.direction)};
    out.write(kFlowMagic, 4);
    out.write(reinterpret_cast<const char*>(hdr), sizeof hdr);
    std::vector<float> uv(f.u.size() * 2);
    for (std::size_t k = 0; k < f.u.size(); ++k) {
        uv[2 * k] = f.u[k];
        uv[2 * k + 1] = f.v[k];
    }
    out.write(reinterpret_cast<const char*>(uv.data()), std::streamsize(uv.size() * sizeof(float)));
}

inline FlowField read_flow(std::istream& in, const std::string& name = "<flow>") {
    char magic[4];
    std::uint32_t hdr[3];
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(hdr), sizeof hdr);
    if (!in || std::memcmp(magic, kFlowMagic, 4) != 0) throw ParseError(name, 0, "not a flow file");
    if (hdr[2] > 1) throw ParseError(name, 0, "bad flow direction");
    FlowField f(static_cast<int>(hdr[0]), static_cast<int>(hdr[1]), static_cast<FlowDirection>(hdr[2]));
    std::vector<float> uv(f.u.size() * 2);
    in.read(reinterpret_cast<char*>(uv.data()), std::streamsize(uv.size() * sizeof(float)));
    if (!in) throw ParseError(name, 0, "truncated flow file");
    for (std::size_t k = 0; k < f.u.size(); ++k) {
        f.u[k] = uv[2 * k];
        f.v[k] = uv[2 * k + 1];
    }
    return f;
}

inline void save_flow(const std::string& path, const FlowField& f) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    write_flow(out, f);
}

inline FlowField load_flow(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    return read_flow(in, path);
}

/// Provides flow between adjacent frames: forward(t) maps t -> t+1, backward(t) maps t -> t-1.
class FlowProvider {
public:
    virtual ~FlowProvider() = default;
    virtual int frame_count() const = 0;
    virtual const FlowField& forward(int t) = 0;
    virtual const FlowField& backward(int t) = 0;
};

/// Write-once-per-pair cache over a frame store. Thread-safe for concurrent reads.
class FlowCache final : public FlowProvider {
public:
    explicit FlowCache(const FrameStore& frames, FlowParams params = {}, std::string disk_dir = {})
        : frames_(&frames), params_(params), dir_(std::move(disk_dir)) {
        const auto n = std::size_t(std::max(0, frames.size()));
        fwd_ = std::vector<Slot>(n);
        bwd_ = std::vector<Slot>(n);
        if (!dir_.empty()) std::filesystem::create_directories(dir_);
    }

    int frame_count() const override { return frames_->size(); }

    const FlowField& forward(int t) override {
        if (t < 0 || t + 1 >= frame_count()) throw PipelineError("no forward flow for frame " + std::to_string(t));
        return get(fwd_[std::size_t(t)], t, t + 1, FlowDirection::Forward);
    }
    const FlowField& backward(int t) override {
        if (t < 1 || t >= frame_count()) throw PipelineError("no backward flow for frame " + std::to_string(t));
        return get(bwd_[std::size_t(t)], t, t - 1, FlowDirection::Backward);
    }

    /// Computes every adjacent pair in parallel.
    void precompute() {
        const int n = frame_count();
        if (n < 2) return;
        parallel_for(std::size_t(2 * (n - 1)), [&](std::size_t i) {
            const int t = int(i / 2);
            if (i % 2 == 0)
                forward(t);
            else
                backward(t + 1);
        });
    }

private:
    struct Slot {
        std::once_flag once;
        std::unique_ptr<FlowField> field;
    };

    const FlowField& get(Slot& s, int from, int to, FlowDirection dir) {
        std::call_once(s.once, [&] {
            std::string path;
            if (!dir_.empty()) {
                path = dir_ + "/" + std::to_string(from) + "_" + std::to_string(to) + ".flow";
                if (std::filesystem::exists(path)) {
                    auto f = std::make_unique<FlowField>(load_flow(path));
                    if (f->width == frames_->width() && f->height == frames_->height()) {
                        s.field = std::move(f);
                        return;
                    }
                }
            }
            s.field = std::make_unique<FlowField>(compute_flow((*frames_)[from], (*frames_)[to], dir, params_));
            if (!path.empty()) save_flow(path, *s.field);
        });
        return *s.field;
    }

    const FrameStore* frames_;
    FlowParams params_;
    std::string dir_;
    std::vector<Slot> fwd_, bwd_;
};

}  // namespace vidpose
