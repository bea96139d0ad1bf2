#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "coreplan/errors.hpp"
#include "coreplan/graph.hpp"
#include "coreplan/rng.hpp"

namespace coreplan {

// Accuracy knobs for approximate PPR. omega / r_max may be left at 0 and
// filled by derive_params.
struct PprParams {
    double alpha = 0.2;     // teleport / stop probability, in (0,1)
    double epsilon = 0.5;   // relative error bound, > 0
    double delta = 0.0;     // significance threshold, in (0,1); 0 = derive as 1/n
    double p_f = 0.0;       // failure probability, in (0,1);   0 = derive as 1/n
    double r_max = 0.0;     // push threshold, > 0; 0 = derive
    std::uint64_t omega = 0;  // total walk budget; 0 = derive
    double r_max_scale = 1.0; // tunable constant on the derived r_max

    void validate() const {
        if (!(alpha > 0.0 && alpha < 1.0))
            throw ValidationError("alpha must be in (0,1)");
        if (!(epsilon > 0.0))
            throw ValidationError("epsilon must be > 0");
        if (!(delta > 0.0 && delta < 1.0))
            throw ValidationError("delta must be in (0,1)");
        if (!(p_f > 0.0 && p_f < 1.0))
            throw ValidationError("p_f must be in (0,1)");
        if (!(r_max > 0.0))
            throw ValidationError("r_max must be > 0");
        if (omega == 0)
            throw ValidationError("omega must be > 0");
        if (!(r_max_scale > 0.0))
            throw ValidationError("r_max_scale must be > 0");
    }
};

// Fill omega and r_max (and the 1/n defaults for delta, p_f).
//   omega = ceil(((2e/3 + 2) ln(2/p_f)) / (e^2 d))
//   r_max = scale * sqrt(e^2 d / (m ln(2/p_f) (2e/3 + 2)))
// Any positive r_max preserves the guarantee (it comes from omega); r_max only
// balances push cost against walk cost.
inline PprParams derive_params(const Graph& g, PprParams p) {
    const double n = static_cast<double>(g.order());
    if (p.delta == 0.0) p.delta = 1.0 / n;
    if (p.p_f == 0.0) p.p_f = 1.0 / n;
    if (!(p.alpha > 0.0 && p.alpha < 1.0)) throw ValidationError("alpha must be in (0,1)");
    if (!(p.epsilon > 0.0)) throw ValidationError("epsilon must be > 0");
    if (!(p.delta > 0.0 && p.delta < 1.0)) throw ValidationError("delta must be in (0,1)");
    if (!(p.p_f > 0.0 && p.p_f < 1.0)) throw ValidationError("p_f must be in (0,1)");

    const double coef = 2.0 * p.epsilon / 3.0 + 2.0;
    const double ln2pf = std::log(2.0 / p.p_f);
    if (p.omega == 0)
        p.omega = static_cast<std::uint64_t>(
            std::ceil(coef * ln2pf / (p.epsilon * p.epsilon * p.delta)));
    if (p.r_max == 0.0)
        p.r_max = p.r_max_scale *
                  std::sqrt(p.epsilon * p.epsilon * p.delta /
                            (static_cast<double>(g.size()) * ln2pf * coef));
    p.validate();
    return p;
}

// Forward-push state. reserve = settled estimate, residue = unpushed mass.
// Invariant at every step: pi(source,t) = reserve[t] + sum_v residue[v]*pi(v,t).
struct PushState {
    VertexId source = 0;
    std::vector<double> reserve;
    std::vector<double> residue;

    double reserve_sum() const {
        return std::accumulate(reserve.begin(), reserve.end(), 0.0);
    }
    double residue_sum() const {
        return std::accumulate(residue.begin(), residue.end(), 0.0);
    }
};

// Sparse PPR estimate: only touched vertices carry entries. std::map keeps
// score ordering deterministic.
struct PprEstimate {
    VertexId source = 0;
    std::map<VertexId, double> scores;
    PprParams params;
    std::uint64_t walks_performed = 0;

    double score(VertexId v) const {
        auto it = scores.find(v);
        return it == scores.end() ? 0.0 : it->second;
    }
};

// Exact PPR by iterated mass settlement: walking mass w starts as e_source;
// each round a dead end absorbs its mass, every other vertex settles alpha of
// it and spreads (1-alpha)/deg to out-neighbors. Stops when the remaining
// walking mass (which bounds all future change in pi) drops below tolerance,
// so the returned scores sum to 1 within tolerance.
inline std::vector<double> power_iteration_ppr(const Graph& g, VertexId source,
                                               double alpha, double tolerance,
                                               std::size_t max_iters = 100000) {
    if (static_cast<std::size_t>(source) >= g.order())
        throw ValidationError("source out of range");
    if (!(tolerance > 0.0)) throw ValidationError("tolerance must be > 0");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must be in (0,1)");

    const std::size_t n = g.order();
    std::vector<double> pi(n, 0.0), walking(n, 0.0), next(n, 0.0);
    walking[source] = 1.0;
    double walking_mass = 1.0;

    for (std::size_t iter = 0; iter < max_iters; ++iter) {
        if (walking_mass < tolerance) return pi;
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t v = 0; v < n; ++v) {
            const double w = walking[v];
            if (w == 0.0) continue;
            const auto deg = g.out_degree(static_cast<VertexId>(v));
            if (deg == 0) {
                pi[v] += w;  // dead end absorbs
            } else {
                pi[v] += alpha * w;
                const double share = (1.0 - alpha) * w / static_cast<double>(deg);
                for (VertexId u : g.out_neighbors(static_cast<VertexId>(v)))
                    next[u] += share;
            }
        }
        walking.swap(next);
        walking_mass = std::accumulate(walking.begin(), walking.end(), 0.0);
    }
    throw ConvergenceError("power iteration did not converge within max_iters",
                           walking_mass);
}

// Forward push from `source` until residue[v] <= r_max * out_degree(v) for
// every non-dead-end v. A dead end converts its whole residue to reserve
// (walks absorb there). `observer`, when set, is called after every push.
inline PushState forward_push(
    const Graph& g, VertexId source, double alpha, double r_max,
    const std::function<void(const PushState&)>& observer = {}) {
    if (static_cast<std::size_t>(source) >= g.order())
        throw ValidationError("source out of range");
    if (!(r_max > 0.0)) throw ValidationError("r_max must be > 0");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must be in (0,1)");

    const std::size_t n = g.order();
    PushState st;
    st.source = source;
    st.reserve.assign(n, 0.0);
    st.residue.assign(n, 0.0);
    st.residue[source] = 1.0;

    auto qualifies = [&](VertexId v) {
        const double r = st.residue[v];
        if (r <= 0.0) return false;
        const auto deg = g.out_degree(v);
        return deg == 0 || r > r_max * static_cast<double>(deg);
    };

    std::vector<VertexId> queue;
    std::vector<char> in_queue(n, 0);
    if (qualifies(source)) {
        queue.push_back(source);
        in_queue[source] = 1;
    }
    for (std::size_t head = 0; head < queue.size(); ++head) {
        const VertexId v = queue[head];
        in_queue[v] = 0;
        if (!qualifies(v)) continue;  // may have been drained since enqueue
        const double r = st.residue[v];
        const auto deg = g.out_degree(v);
        if (deg == 0) {
            st.reserve[v] += r;
            st.residue[v] = 0.0;
        } else {
            st.reserve[v] += alpha * r;
            st.residue[v] = 0.0;
            const double inc = (1.0 - alpha) * r / static_cast<double>(deg);
            for (VertexId u : g.out_neighbors(v)) {
                st.residue[u] += inc;
                if (!in_queue[u] && qualifies(u)) {
                    queue.push_back(u);
                    in_queue[u] = 1;
                }
            }
        }
        if (observer) observer(st);
    }
    return st;
}

// One alpha-terminating random walk; dead ends absorb. Returns the stop vertex.
inline VertexId random_walk(const Graph& g, VertexId start, double alpha,
                            SplitMix64& rng) {
    if (static_cast<std::size_t>(start) >= g.order())
        throw ValidationError("start out of range");
    VertexId v = start;
    for (;;) {
        const auto deg = g.out_degree(v);
        if (deg == 0) return v;
        if (rng.next_double() < alpha) return v;
        v = g.out_neighbors(v)[rng.next_below(deg)];
    }
}

// FORA-style query: forward push, then ceil(residue[v] * omega) compensating
// walks from every v with leftover residue, each walk adding
// residue[v] / walks_from_v to its terminal's score. Walk i draws from
// substream(seed, i), so results are reproducible regardless of scheduling.
inline PprEstimate fora_query(const Graph& g, VertexId source,
                              const PprParams& params, std::uint64_t seed) {
    params.validate();
    PushState st = forward_push(g, source, params.alpha, params.r_max);

    PprEstimate est;
    est.source = source;
    est.params = params;
    for (std::size_t v = 0; v < st.reserve.size(); ++v)
        if (st.reserve[v] > 0.0) est.scores[static_cast<VertexId>(v)] = st.reserve[v];

    std::uint64_t walk_index = 0;
    const double omega = static_cast<double>(params.omega);
    for (std::size_t v = 0; v < st.residue.size(); ++v) {
        const double r = st.residue[v];
        if (r <= 0.0) continue;
        const auto walks = static_cast<std::uint64_t>(std::ceil(r * omega));
        const double inc = r / static_cast<double>(walks);
        for (std::uint64_t i = 0; i < walks; ++i) {
            SplitMix64 rng = substream(seed, walk_index++);
            const VertexId t =
                random_walk(g, static_cast<VertexId>(v), params.alpha, rng);
            est.scores[t] += inc;
        }
    }
    est.walks_performed = walk_index;
    return est;
}

}  // namespace coreplan
