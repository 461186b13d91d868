#pragma once

// Agreement check over the Active annotations at one (frame, joint).

#include <cmath>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <vector>

#include "vidpose/core/annotation.hpp"
#include "vidpose/core/config.hpp"

namespace vidpose {

enum class ConsensusKind : std::uint8_t { Consensus, DiscardAll, Insufficient };

struct ConsensusResult {
    ConsensusKind kind = ConsensusKind::Insufficient;
    std::optional<Annotation> annotation;  // set for Consensus
    std::size_t winner = 0;                // index into the candidates (Consensus and Insufficient)
    std::size_t sources = 0;
    double spread = 0.0;                   // max over axes of the population std, px
};

/// Gaussian-kernel Parzen density (unnormalised) at `p`.
inline double parzen_density(std::span<const Annotation> cands, Point2 p, double sigma) {
    const double k = -0.5 / (sigma * sigma);
    double s = 0;
    for (const auto& c : cands) {
        const double dx = c.pos.x - p.x, dy = c.pos.y - p.y;
        s += std::exp(k * (dx * dx + dy * dy));
    }
    return s;
}

/// Preferred representative: highest confidence, then lowest hop count, then first.
inline std::size_t best_ranked(std::span<const Annotation> cands, std::span<const std::size_t> among) {
    std::size_t best = among.front();
    for (std::size_t i : among) {
        const auto& a = cands[i];
        const auto& b = cands[best];
        if (a.confidence > b.confidence ||
            (a.confidence == b.confidence && a.provenance.hop_count < b.provenance.hop_count))
            best = i;
    }
    return best;
}

inline ConsensusResult consensus(std::span<const Annotation> cands, const PipelineConfig& cfg) {
    if (cands.empty()) throw std::invalid_argument("consensus: no candidates");
    ConsensusResult r;
    std::set<int> src;
    for (const auto& c : cands) src.insert(c.provenance.source_frame);
    r.sources = src.size();

    double mx = 0, my = 0;
    for (const auto& c : cands) {
        mx += c.pos.x;
        my += c.pos.y;
    }
    const double n = double(cands.size());
    mx /= n;
    my /= n;
    double vx = 0, vy = 0;
    for (const auto& c : cands) {
        vx += (c.pos.x - mx) * (c.pos.x - mx);
        vy += (c.pos.y - my) * (c.pos.y - my);
    }
    r.spread = std::sqrt(std::max(vx, vy) / n);

    std::vector<std::size_t> all(cands.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    if (int(r.sources) < cfg.min_source_frames) {
        r.kind = ConsensusKind::Insufficient;
        r.winner = best_ranked(cands, all);
        return r;
    }
    if (r.spread > cfg.agreement_std_max) {
        r.kind = ConsensusKind::DiscardAll;
        return r;
    }

    std::vector<double> dens(cands.size());
    double top = -1;
    for (std::size_t i = 0; i < cands.size(); ++i) {
        dens[i] = parzen_density(cands, cands[i].pos, cfg.parzen_sigma);
        top = std::max(top, dens[i]);
    }
    std::vector<std::size_t> tied;
    for (std::size_t i = 0; i < cands.size(); ++i)
        if (dens[i] >= top * (1 - 1e-12)) tied.push_back(i);
    r.winner = best_ranked(cands, tied);

    const Annotation& w = cands[r.winner];
    Annotation a = w;
    a.provenance = {Origin::Consensus, w.provenance.source_frame, std::max(1, w.provenance.hop_count)};
    a.status = Status::Active;
    r.kind = ConsensusKind::Consensus;
    r.annotation = a;
    return r;
}

}  // namespace vidpose
